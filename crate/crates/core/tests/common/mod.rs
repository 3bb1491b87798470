#![allow(dead_code)]

use hyperpurify::Matrix;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

/// `G G^dagger / Tr` for a `dim x rank` complex Gaussian `G`.
pub fn random_state<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> Matrix {
    let g: Vec<Complex<f64>> = (0..dim * rank)
        .map(|_| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let rho = Matrix::from_fn(dim, dim, |i, j| {
        (0..rank).map(|k| g[i * rank + k] * g[j * rank + k].conj()).sum()
    });
    let tr = rho.trace().re;
    rho.scale(1.0 / tr).hermitian_part()
}

pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> Matrix {
    let a = Matrix::from_fn(dim, dim, |_, _| {
        Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    a.hermitian_part()
}

pub fn matrix_unit(dim: usize, i: usize, j: usize) -> Matrix {
    Matrix::from_fn(dim, dim, |r, c| {
        if (r, c) == (i, j) {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    })
}
