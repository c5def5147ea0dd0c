//! Multiplicative random noise F_δ = [F_ij (1 + δ E_ij)] with ‖E‖₂ = 1.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::farfield::{CMatrix, FarFieldMatrix, Provenance};
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub delta: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(delta: f64, seed: u64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(invalid(format!("noise level must be >= 0, got {delta}")));
        }
        Ok(Self { delta, seed })
    }
}

/// Largest singular value.
pub fn spectral_norm(matrix: &CMatrix) -> Result<f64> {
    if matrix.is_empty() {
        return Err(invalid("spectral norm of an empty matrix"));
    }
    Ok(spectral::svd(matrix)?.s1())
}

/// Complex Gaussian matrix drawn row-major from `seed`, scaled to unit
/// spectral norm.
pub fn unit_noise_matrix(m: usize, seed: u64) -> Result<CMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut entries = Vec::with_capacity(m * m);
    for _ in 0..m * m {
        let re = draw();
        let im = draw();
        entries.push(Complex64::new(re, im));
    }
    let e0 = CMatrix::from_row_slice(m, m, &entries);
    let norm = spectral_norm(&e0)?;
    Ok(e0.unscale(norm))
}

pub fn corrupt(f: &FarFieldMatrix, spec: &NoiseSpec) -> Result<FarFieldMatrix> {
    let spec = NoiseSpec::new(spec.delta, spec.seed)?;
    let provenance = Provenance::Noisy {
        delta: spec.delta,
        seed: spec.seed,
    };
    if spec.delta == 0.0 {
        return Ok(f.with_entries(f.entries().clone(), provenance));
    }
    let e = unit_noise_matrix(f.m(), spec.seed)?;
    let noisy = f.entries().zip_map(&e, |fij, eij| fij * (Complex64::new(1.0, 0.0) + eij * spec.delta));
    Ok(f.with_entries(noisy, provenance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{born_farfield, make_directions, Dimension, Scatterer, Shape, WaveContext};
    use nalgebra::DVector;

    fn sample() -> FarFieldMatrix {
        let ctx = WaveContext::new(Dimension::Two, 10.0).unwrap();
        let dirs = make_directions(Dimension::Two, 16).unwrap();
        born_farfield(&Scatterer::new(Shape::Pear, 0.5), &ctx, &dirs, 16).unwrap()
    }

    /// Power iteration on F*F, independent of the Jacobi SVD.
    fn power_norm(f: &CMatrix) -> f64 {
        let g = f.adjoint() * f;
        let mut x = DVector::from_fn(f.ncols(), |i, _| Complex64::new(1.0 + i as f64 * 0.01, 0.3));
        let mut lambda = 0.0;
        for _ in 0..5000 {
            let y = &g * &x;
            let n = y.norm();
            x = y.unscale(n);
            lambda = n;
        }
        lambda.sqrt()
    }

    #[test]
    fn trivial_norms() {
        assert!((spectral_norm(&CMatrix::identity(5, 5)).unwrap() - 1.0).abs() < 1e-15);
        let d = CMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(3.0, 0.0),
            Complex64::new(0.0, -4.0),
        ]));
        assert!((spectral_norm(&d).unwrap() - 4.0).abs() < 1e-14);
        assert!(spectral_norm(&CMatrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn norm_agrees_with_power_iteration() {
        let e = unit_noise_matrix(32, 99).unwrap() * Complex64::new(7.0, 0.0);
        let a = spectral_norm(&e).unwrap();
        let b = power_norm(&e);
        assert!((a - b).abs() / b < 1e-8, "{a} {b}");
    }

    #[test]
    fn unit_spectral_norm() {
        for seed in 0..5 {
            let e = unit_noise_matrix(20, seed).unwrap();
            assert!((spectral_norm(&e).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_delta_is_identity() {
        let f = sample();
        let g = corrupt(&f, &NoiseSpec::new(0.0, 4).unwrap()).unwrap();
        assert_eq!(g.entries(), f.entries());
        assert_eq!(g.provenance(), Provenance::Noisy { delta: 0.0, seed: 4 });
    }

    #[test]
    fn deterministic_given_seed() {
        let f = sample();
        let spec = NoiseSpec::new(0.05, 1).unwrap();
        assert_eq!(corrupt(&f, &spec).unwrap(), corrupt(&f, &spec).unwrap());
    }

    #[test]
    fn perturbation_is_hadamard_product() {
        let f = sample();
        let spec = NoiseSpec::new(0.05, 12).unwrap();
        let g = corrupt(&f, &spec).unwrap();
        let e = unit_noise_matrix(f.m(), 12).unwrap();
        let diff = g.entries() - f.entries();
        for i in 0..f.m() {
            for j in 0..f.m() {
                let expect = f.entries()[(i, j)] * e[(i, j)] * 0.05;
                assert!((diff[(i, j)] - expect).norm() <= 1e-14 * f.entries()[(i, j)].norm());
            }
        }
        let fmax = f.entries().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let m = f.m() as f64;
        assert!(spectral_norm(&diff).unwrap() <= 0.05 * fmax * m);
    }

    #[test]
    fn seeds_differ() {
        let base = unit_noise_matrix(8, 0).unwrap();
        for seed in 1..10 {
            let other = unit_noise_matrix(8, seed).unwrap();
            assert!((&other - &base).norm() > 0.0);
        }
    }

    #[test]
    fn negative_delta_rejected() {
        assert!(NoiseSpec::new(-0.1, 0).is_err());
    }
}
