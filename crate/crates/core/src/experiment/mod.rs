//! Experiment runner: source state, noise loading, purification, analysis and
//! report emission. Reports are plain serde structures; JSON is canonical and
//! sweeps additionally emit a CSV summary.

mod config;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    Analyses, CountingSpec, EfficiencyParams, ExperimentConfig, FiberSpec, Intrinsic, Load, NoiseSpec, SourceSpec,
    SweepParameter, SweepSpec, BUILTIN_NAMES,
};

use crate::analysis::{
    chsh, efficiency_one, efficiency_ratio, efficiency_two, key_rate, ChshResult, EfficiencyModel, KeyRateResult,
};
use crate::channels::{
    apply_mixture, fiber_transmittance_with, independent_mixture, mcf_channel, schedule_to_mixture, Attenuation,
    FiberModel, Flavor,
};
use crate::error::{Error, Result};
use crate::fixture::{ingest_path, rho_p_08, rho_s_08};
use crate::purify::{purify, purify_with_conversion, OutcomeRecord};
use crate::qmath::{fidelity_pure, ComplexMatrix};
use crate::states::{
    bell_state, hyper_state, ideal_hyper_state, polarization_marginal, spatial_marginal, BellKind, Dof,
};
use crate::tomography::{reconstruct, TomographyRecordFile};

type M = ComplexMatrix<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fidelities {
    pub polarization_before: f64,
    pub spatial_before: f64,
    pub after: f64,
    /// Closed-form prediction from the two marginal fidelities.
    pub predicted: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeforeAfter<R> {
    pub before: R,
    pub after: R,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBlock {
    pub attenuation: Attenuation,
    pub loss_db: f64,
    pub transmittance: f64,
    pub source_probability: f64,
    pub efficiency_one: f64,
    pub efficiency_two: f64,
    /// `efficiency_one / efficiency_two`
    pub ratio: f64,
    /// Post-selected coincidences per second, `detected_pair_rate * success`.
    pub purified_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyBlock {
    pub before: TomographyRecordFile,
    pub after: TomographyRecordFile,
    /// Fidelities of the physical estimates; the analyses use these states.
    pub fidelity_before: f64,
    pub fidelity_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub version: String,
    /// Seconds since the Unix epoch, when requested.
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub fidelities: Fidelities,
    pub purification: OutcomeRecord,
    pub key_rate: Option<BeforeAfter<KeyRateResult>>,
    pub chsh: Option<BeforeAfter<ChshResult>>,
    pub efficiency: Option<EfficiencyBlock>,
    pub tomography: Option<TomographyBlock>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// One line of the sweep summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Grid value; empty for a single run.
    pub value: Option<f64>,
    pub eta: f64,
    #[serde(rename = "F_pol_before")]
    pub f_pol_before: f64,
    #[serde(rename = "F_spa_before")]
    pub f_spa_before: f64,
    #[serde(rename = "F_after")]
    pub f_after: f64,
    #[serde(rename = "R_before")]
    pub r_before: Option<f64>,
    #[serde(rename = "R_after")]
    pub r_after: Option<f64>,
    #[serde(rename = "S_before")]
    pub s_before: Option<f64>,
    #[serde(rename = "S_after")]
    pub s_after: Option<f64>,
    pub success: f64,
}

impl SweepRow {
    /// Summary of `report`, tagged with the grid `value`.
    pub fn from_report(value: Option<f64>, r: &ExperimentReport) -> Result<Self> {
        let eta = match r.efficiency {
            Some(e) => e.transmittance,
            None => fiber_transmittance_with(&fiber_model(&r.config.noise)?, r.config.noise.fiber.attenuation),
        };
        Ok(Self {
            value,
            eta,
            f_pol_before: r.fidelities.polarization_before,
            f_spa_before: r.fidelities.spatial_before,
            f_after: r.fidelities.after,
            r_before: r.key_rate.map(|k| k.before.effective_rate),
            r_after: r.key_rate.map(|k| k.after.effective_rate),
            s_before: r.chsh.map(|c| c.before.s_max),
            s_after: r.chsh.map(|c| c.after.s_max),
            success: r.purification.success_probability,
        })
    }
}

pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
    pub reports: Vec<ExperimentReport>,
}

impl SweepResult {
    pub fn to_csv(&self) -> Result<String> {
        rows_to_csv(&self.rows)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

pub fn source_state(source: &SourceSpec) -> Result<M> {
    match source {
        SourceSpec::Ideal => Ok(ideal_hyper_state()),
        SourceSpec::Bundled => hyper_state(&rho_p_08(), &rho_s_08()),
        SourceSpec::Fixtures {
            polarization,
            spatial,
            tolerance,
        } => {
            let p = ingest_path::<f64>(polarization, *tolerance)?;
            let s = ingest_path::<f64>(spatial, *tolerance)?;
            hyper_state(&p.state, &s.state)
        }
    }
}

/// Load then intrinsic fiber noise, in that order.
pub fn noisy_state(config: &ExperimentConfig) -> Result<M> {
    let noise = &config.noise;
    let mut rho = source_state(&config.source)?;
    let mixture = match &noise.load {
        Load::None => None,
        Load::Independent { f_pol, f_spa } => Some(independent_mixture(*f_pol, *f_spa, noise.flavor)?),
        load @ Load::Schedule { .. } => Some(schedule_to_mixture(&load.schedule().expect("schedule")?, noise.flavor)?),
    };
    if let Some(m) = mixture {
        rho = apply_mixture(&rho, &m, noise.placement)?;
    }
    let fm = fiber_model(noise)?;
    if fm.intrinsic_bf > 0.0 || fm.intrinsic_pf > 0.0 {
        rho = mcf_channel(&rho, &fm)?;
    }
    Ok(rho)
}

fn fiber_model(noise: &NoiseSpec) -> Result<FiberModel<f64>> {
    FiberModel::new(
        noise.fiber.alpha_db_per_km,
        noise.fiber.length_km,
        noise.intrinsic.bf,
        noise.intrinsic.pf,
    )
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let rho = noisy_state(config)?;
    let pol = polarization_marginal(&rho)?;
    let spa = spatial_marginal(&rho)?;
    let phi = bell_state::<f64>(BellKind::PhiPlus, Dof::Polarization);
    let f_pol = fidelity_pure(&pol, &phi)?;
    let f_spa = fidelity_pure(&spa, &bell_state(BellKind::PhiPlus, Dof::Spatial))?;

    let outcome = if config.noise.converts() {
        purify_with_conversion(&rho, Flavor::PhaseFlip)?
    } else {
        purify(&rho)?
    };
    let output = outcome.output.clone().ok_or(Error::AlwaysDiscard {
        probability: outcome.success_probability,
    })?;
    let f_after = outcome.achieved_fidelity.expect("fidelity accompanies output");

    let (state_before, state_after, tomography) = match &config.counting {
        None => (pol, output, None),
        Some(spec) => {
            let before = reconstruct(&pol, &spec.model(config.seed)?)?;
            let after = reconstruct(&output, &spec.model(config.seed.wrapping_add(1))?)?;
            let est_before = before.physical.clone().expect("reconstruct sets physical");
            let est_after = after.physical.clone().expect("reconstruct sets physical");
            let block = TomographyBlock {
                before: before.to_file(),
                after: after.to_file(),
                fidelity_before: fidelity_pure(&est_before, &phi)?,
                fidelity_after: fidelity_pure(&est_after, &phi)?,
            };
            (est_before, est_after, Some(block))
        }
    };

    let analyses = config.analyses;
    let key_rate = if analyses.qkd {
        Some(BeforeAfter {
            before: key_rate(&state_before)?,
            after: key_rate(&state_after)?,
        })
    } else {
        None
    };
    let chsh = if analyses.chsh {
        Some(BeforeAfter {
            before: chsh(&state_before)?,
            after: chsh(&state_after)?,
        })
    } else {
        None
    };
    let efficiency = if analyses.efficiency {
        Some(efficiency_block(config, outcome.success_probability)?)
    } else {
        None
    };

    Ok(ExperimentReport {
        config: config.clone(),
        fidelities: Fidelities {
            polarization_before: f_pol,
            spatial_before: f_spa,
            after: f_after,
            predicted: outcome.predicted_fidelity,
        },
        purification: outcome.to_record(),
        key_rate,
        chsh,
        efficiency,
        tomography,
        provenance: Provenance {
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: config.record_timestamp.then(unix_time),
        },
    })
}

fn efficiency_block(config: &ExperimentConfig, success: f64) -> Result<EfficiencyBlock> {
    let fiber = &config.noise.fiber;
    let fm = fiber_model(&config.noise)?;
    let eta = fiber_transmittance_with(&fm, fiber.attenuation);
    let p = &config.efficiency;
    let em = EfficiencyModel {
        coincidence_rate: p.coincidence_rate,
        coupling_efficiency: p.coupling_efficiency,
        rep_rate: p.rep_rate,
        protocol_success: success,
        transmittance: eta,
    };
    Ok(EfficiencyBlock {
        attenuation: fiber.attenuation,
        loss_db: fm.loss_db(),
        transmittance: eta,
        source_probability: em.source_probability(),
        efficiency_one: efficiency_one(&em)?,
        efficiency_two: efficiency_two(&em)?,
        ratio: efficiency_ratio(em.source_probability(), eta),
        purified_rate: p.detected_pair_rate * success,
    })
}

fn unix_time() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// The config with one grid value applied and the sweep removed.
pub fn sweep_point(config: &ExperimentConfig, parameter: SweepParameter, value: f64) -> ExperimentConfig {
    let mut point = config.clone();
    point.sweep = None;
    match parameter {
        SweepParameter::LoadFraction => {
            point.noise.load = Load::Independent {
                f_pol: value,
                f_spa: value,
            }
        }
        SweepParameter::FiberLengthKm => point.noise.fiber.length_km = value,
    }
    point
}

/// Runs every grid point, in parallel, and returns them in grid order.
pub fn sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let spec = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("config has no sweep grid".into()))?;
    let reports = spec
        .values
        .par_iter()
        .map(|&v| run(&sweep_point(config, spec.parameter, v)))
        .collect::<Result<Vec<_>>>()?;
    let rows = spec
        .values
        .iter()
        .zip(&reports)
        .map(|(&value, r)| SweepRow::from_report(Some(value), r))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        parameter: spec.parameter,
        rows,
        reports,
    })
}
