use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::EfficiencyModel;
use crate::channels::{independent_mixture, Attenuation, FiberModel, Flavor, LcSchedule, Placement};
use crate::error::{Error, Result};
use crate::fixture::EXPERIMENTAL_TOL;
use crate::tomography::CountingModel;

/// Names accepted by [`ExperimentConfig::builtin`].
pub const BUILTIN_NAMES: [&str; 6] = [
    "identity",
    "paper-20bf",
    "paper-30bf",
    "paper-20pf",
    "paper-mcf-only",
    "fixtures-s2s3",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub source: SourceSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    /// Simulated tomography of the states before and after purification.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counting: Option<CountingSpec>,
    #[serde(default)]
    pub analyses: Analyses,
    #[serde(default)]
    pub efficiency: EfficiencyParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Include wall-clock time in the report; off so reports are reproducible.
    #[serde(default)]
    pub record_timestamp: bool,
}

/// Initial hyperentangled state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    /// `|Φ+⟩ ⊗ |φ+⟩`
    Ideal,
    /// The bundled measured polarization and spatial-mode states.
    Bundled,
    /// Product of two measured two-qubit states read from matrix files.
    Fixtures {
        polarization: PathBuf,
        spatial: PathBuf,
        #[serde(default = "default_fixture_tol")]
        tolerance: f64,
    },
}

fn default_fixture_tol() -> f64 {
    EXPERIMENTAL_TOL
}

/// Controlled noise loading on top of the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Load {
    None,
    /// Polarization and spatial qubits flipped independently.
    Independent {
        f_pol: f64,
        f_spa: f64,
    },
    /// Liquid-crystal duty cycle.
    Schedule {
        #[serde(rename = "T")]
        period: f64,
        t1: f64,
        t2: f64,
        t3: f64,
    },
}

impl Load {
    pub fn schedule(&self) -> Option<Result<LcSchedule<f64>>> {
        match *self {
            Load::Schedule { period, t1, t2, t3 } => Some(LcSchedule::new(period, t1, t2, t3)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Intrinsic {
    pub bf: f64,
    pub pf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    pub alpha_db_per_km: f64,
    pub length_km: f64,
    #[serde(default)]
    pub attenuation: Attenuation,
}

impl Default for FiberSpec {
    fn default() -> Self {
        Self {
            alpha_db_per_km: 0.2,
            length_km: 0.0,
            attenuation: Attenuation::Decibel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub flavor: Flavor,
    pub load: Load,
    #[serde(default)]
    pub placement: Placement,
    /// Residual fiber noise on photon B, applied after the load.
    #[serde(default = "no_intrinsic")]
    pub intrinsic: Intrinsic,
    #[serde(default)]
    pub fiber: FiberSpec,
    /// Hadamard conversion before purification; defaults to on for phase-flip noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convert: Option<bool>,
}

fn no_intrinsic() -> Intrinsic {
    Intrinsic { bf: 0.0, pf: 0.0 }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            flavor: Flavor::BitFlip,
            load: Load::None,
            placement: Placement::B,
            intrinsic: no_intrinsic(),
            fiber: FiberSpec::default(),
            convert: None,
        }
    }
}

impl NoiseSpec {
    pub fn converts(&self) -> bool {
        self.convert.unwrap_or(self.flavor == Flavor::PhaseFlip)
    }
}

/// Acquisition parameters; the sampling seed comes from the experiment seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountingSpec {
    pub pair_rate: f64,
    pub integration_time: f64,
    #[serde(default = "one")]
    pub detector_efficiency: f64,
    #[serde(default)]
    pub dark_rate: f64,
    #[serde(default = "default_window")]
    pub coincidence_window: f64,
    #[serde(default)]
    pub infinite_statistics: bool,
}

fn one() -> f64 {
    1.0
}

fn default_window() -> f64 {
    1e-9
}

impl CountingSpec {
    pub fn model(&self, seed: u64) -> Result<CountingModel> {
        let cm = CountingModel {
            pair_rate: self.pair_rate,
            integration_time: self.integration_time,
            detector_efficiency: self.detector_efficiency,
            dark_rate: self.dark_rate,
            coincidence_window: self.coincidence_window,
            seed,
            infinite_statistics: self.infinite_statistics,
        };
        cm.validate()?;
        Ok(cm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analyses {
    pub qkd: bool,
    pub chsh: bool,
    pub efficiency: bool,
}

impl Default for Analyses {
    fn default() -> Self {
        Self {
            qkd: true,
            chsh: true,
            efficiency: true,
        }
    }
}

/// Source brightness figures for the efficiency comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencyParams {
    pub coincidence_rate: f64,
    pub coupling_efficiency: f64,
    pub rep_rate: f64,
    /// Coincidences per second reaching the purification stage.
    pub detected_pair_rate: f64,
}

impl Default for EfficiencyParams {
    fn default() -> Self {
        Self {
            coincidence_rate: 2400.0,
            coupling_efficiency: 0.18,
            rep_rate: 76e6,
            detected_pair_rate: 600.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Replaces the load with `Independent { f, f }`.
    LoadFraction,
    FiberLengthKm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// A built-in name, or otherwise a path to a JSON config.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match Self::builtin(name_or_path) {
            Some(cfg) => Ok(cfg),
            None => Self::load(name_or_path),
        }
    }

    /// Schema-level checks. Every model is built once so out-of-range values are
    /// reported as config errors rather than numerical failures.
    pub fn validate(&self) -> Result<()> {
        self.check_models().map_err(|e| Error::Config(e.to_string()))?;
        if let SourceSpec::Fixtures {
            polarization,
            spatial,
            tolerance,
        } = &self.source
        {
            for p in [polarization, spatial] {
                if !p.is_file() {
                    return Err(Error::Config(format!("fixture file {} not found", p.display())));
                }
            }
            if !(tolerance.is_finite() && *tolerance >= 0.0) {
                return Err(Error::Config(format!(
                    "fixture tolerance {tolerance} must be nonnegative"
                )));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::Config("sweep grid is empty".into()));
            }
            if let Some(bad) = sweep.values.iter().find(|v| !v.is_finite()) {
                return Err(Error::Config(format!("sweep value {bad} is not finite")));
            }
        }
        Ok(())
    }

    fn check_models(&self) -> Result<()> {
        let noise = &self.noise;
        match &noise.load {
            Load::None => {}
            Load::Independent { f_pol, f_spa } => {
                independent_mixture(*f_pol, *f_spa, noise.flavor)?;
            }
            load @ Load::Schedule { .. } => {
                load.schedule().expect("schedule variant")?;
            }
        }
        FiberModel::new(
            noise.fiber.alpha_db_per_km,
            noise.fiber.length_km,
            noise.intrinsic.bf,
            noise.intrinsic.pf,
        )?;
        if let Some(c) = &self.counting {
            c.model(self.seed)?;
        }
        let e = &self.efficiency;
        EfficiencyModel {
            coincidence_rate: e.coincidence_rate,
            coupling_efficiency: e.coupling_efficiency,
            rep_rate: e.rep_rate,
            protocol_success: 1.0,
            transmittance: 1.0,
        }
        .validate()?;
        if !(e.detected_pair_rate.is_finite() && e.detected_pair_rate >= 0.0) {
            return Err(Error::out_of_range(
                "detected_pair_rate",
                e.detected_pair_rate,
                "[0, inf)",
            ));
        }
        Ok(())
    }

    pub fn builtin(name: &str) -> Option<Self> {
        let mcf = Intrinsic { bf: 0.011, pf: 0.033 };
        let fiber = FiberSpec {
            alpha_db_per_km: 0.2,
            length_km: 11.0,
            attenuation: Attenuation::Decibel,
        };
        let loaded = |flavor, f| NoiseSpec {
            flavor,
            load: Load::Independent { f_pol: f, f_spa: f },
            placement: Placement::B,
            intrinsic: mcf,
            fiber,
            convert: None,
        };
        let noise = match name {
            "identity" => NoiseSpec::default(),
            "paper-20bf" => loaded(Flavor::BitFlip, 0.2),
            "paper-30bf" => loaded(Flavor::BitFlip, 0.3),
            "paper-20pf" => loaded(Flavor::PhaseFlip, 0.2),
            "paper-mcf-only" => NoiseSpec {
                load: Load::None,
                ..loaded(Flavor::PhaseFlip, 0.0)
            },
            "fixtures-s2s3" => NoiseSpec {
                fiber,
                ..NoiseSpec::default()
            },
            _ => return None,
        };
        let source = if name == "fixtures-s2s3" {
            SourceSpec::Bundled
        } else {
            SourceSpec::Ideal
        };
        Some(Self {
            name: name.to_string(),
            seed: 0,
            source,
            noise,
            counting: None,
            analyses: Analyses::default(),
            efficiency: EfficiencyParams::default(),
            sweep: None,
            record_timestamp: false,
        })
    }
}
