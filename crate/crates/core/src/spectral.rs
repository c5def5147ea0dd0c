//! Singular value decomposition of far-field matrices and the operators
//! built from it: |F|^{1/2} and F♯ = |Re F| + |Im F|.

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{invalid, DsmError, Result};
use crate::farfield::CMatrix;

const MAX_SWEEPS: usize = 80;
const MAX_DIMENSION: usize = 10_000;

/// Singular system F = U·diag(s)·V*, singular values descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub s: Vec<f64>,
    pub u: CMatrix,
    pub v: CMatrix,
}

impl SpectralDecomposition {
    /// Largest singular value, i.e. the spectral norm.
    pub fn s1(&self) -> f64 {
        self.s.first().copied().unwrap_or(0.0)
    }

    pub fn m(&self) -> usize {
        self.s.len()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let mut us = self.u.clone();
        for (j, &s) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.adjoint()
    }

    /// V·diag(f(s_j))·V*.
    pub fn right_function<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        let mut vf = self.v.clone();
        for (j, &s) in self.s.iter().enumerate() {
            vf.column_mut(j).scale_mut(f(s));
        }
        vf * self.v.adjoint()
    }
}

fn col_dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn col_norm_sq(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Applies [a_p, a_q] ← [a_p, a_q]·[[c, s·e^{iφ}], [−s·e^{−iφ}, c]].
fn rotate(cols: &mut [Vec<Complex64>], p: usize, q: usize, c: f64, s_phase: Complex64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (ap, aq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in ap.iter_mut().zip(aq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = xp * c - yq * s_phase.conj();
        *y = xp * s_phase + yq * c;
    }
}

/// One-sided (Hestenes) Jacobi SVD of a square complex matrix.
pub fn svd(f: &CMatrix) -> Result<SpectralDecomposition> {
    let m = f.nrows();
    if m == 0 || f.ncols() != m {
        return Err(invalid(format!(
            "svd expects a nonempty square matrix, got {}x{}",
            f.nrows(),
            f.ncols()
        )));
    }
    if m > MAX_DIMENSION {
        return Err(invalid(format!("matrix size {m} exceeds {MAX_DIMENSION}")));
    }
    if f.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }

    let mut a: Vec<Vec<Complex64>> = (0..m).map(|j| f.column(j).iter().copied().collect()).collect();
    let mut v: Vec<Vec<Complex64>> = (0..m)
        .map(|j| {
            let mut e = vec![Complex64::new(0.0, 0.0); m];
            e[j] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();

    let tol = f64::EPSILON * (m as f64).sqrt();
    let mut converged = false;
    let mut off = 0.0;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        off = 0.0f64;
        let mut rotated = false;
        for p in 0..m - 1 {
            for q in p + 1..m {
                let alpha = col_norm_sq(&a[p]);
                let beta = col_norm_sq(&a[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = col_dot(&a[p], &a[q]);
                let g = gamma.norm();
                let rel = g / (alpha * beta).sqrt();
                off = off.max(rel);
                if rel <= tol {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s_phase = phase * (c * t);
                rotate(&mut a, p, q, c, s_phase);
                rotate(&mut v, p, q, c, s_phase);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(DsmError::NumericalFailure {
            what: "one-sided Jacobi SVD did not converge".into(),
            residual: off,
            iterations: sweeps,
        });
    }

    let norms: Vec<f64> = a.iter().map(|c| col_norm_sq(c).sqrt()).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let mut s = Vec::with_capacity(m);
    let mut u = CMatrix::zeros(m, m);
    let mut vm = CMatrix::zeros(m, m);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s.push(sigma);
        for i in 0..m {
            vm[(i, dst)] = v[src][i];
        }
        if sigma > 0.0 {
            for i in 0..m {
                u[(i, dst)] = a[src][i] / sigma;
            }
        } else {
            missing.push(dst);
        }
    }
    complete_orthonormal(&mut u, &missing);
    Ok(SpectralDecomposition { s, u, v: vm })
}

/// Fills the listed columns with unit vectors orthogonal to all others.
fn complete_orthonormal(u: &mut CMatrix, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let m = u.nrows();
    let mut filled: Vec<bool> = vec![true; m];
    for &j in missing {
        filled[j] = false;
    }
    let mut candidate = 0;
    for &j in missing {
        loop {
            let mut w = DVector::<Complex64>::zeros(m);
            w[candidate % m] = Complex64::new(1.0, 0.0);
            candidate += 1;
            // Two passes of Gram–Schmidt.
            for _ in 0..2 {
                for c in (0..m).filter(|&c| filled[c]) {
                    let col = u.column(c);
                    let proj = col.dotc(&w);
                    w -= col * proj;
                }
            }
            let n = w.norm();
            if n > 1e-8 {
                u.set_column(j, &(w / Complex64::new(n, 0.0)));
                filled[j] = true;
                break;
            }
            assert!(candidate < 2 * m + missing.len(), "basis completion failed");
        }
    }
}

/// |F|^{1/2} = V·diag(√s)·V*.
pub fn half_power_matrix(decomp: &SpectralDecomposition) -> CMatrix {
    decomp.right_function(f64::sqrt)
}

/// Absolute value |H| of a Hermitian matrix via its eigendecomposition.
pub fn abs_hermitian(h: &CMatrix) -> Result<CMatrix> {
    let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, 10_000).ok_or_else(|| {
        DsmError::NumericalFailure {
            what: "Hermitian eigendecomposition did not converge".into(),
            residual: f64::NAN,
            iterations: 10_000,
        }
    })?;
    let mut qd = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        qd.column_mut(j).scale_mut(lambda.abs());
    }
    let mut out = qd * eig.eigenvectors.adjoint();
    // Symmetrize away rounding so the result is exactly Hermitian.
    let adj = out.adjoint();
    out = (out + adj) * Complex64::new(0.5, 0.0);
    Ok(out)
}

/// F♯ = |Re F| + |Im F| with Re F = (F+F*)/2 and Im F = (F−F*)/(2i).
pub fn f_sharp(f: &CMatrix) -> Result<CMatrix> {
    if f.nrows() != f.ncols() || f.nrows() == 0 {
        return Err(invalid("f_sharp expects a nonempty square matrix"));
    }
    let adj = f.adjoint();
    let re = (f + &adj) * Complex64::new(0.5, 0.0);
    let im = (f - &adj) * Complex64::new(0.0, -0.5);
    Ok(abs_hermitian(&re)? + abs_hermitian(&im)?)
}
