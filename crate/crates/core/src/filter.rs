//! Tikhonov filter Γ_α(t) = √t/(α+t) and the zero-rooted polynomial that
//! stands in for it when building the Tikhonov indicator.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{degenerate, invalid, Result};

pub const DEFAULT_ALPHA: f64 = 1e-2;
pub const DEFAULT_CUTOFF: f64 = 1e-8;
pub const DEFAULT_NODES: usize = 10;
pub const DEFAULT_DEGREE: usize = 3;
const SCAN_POINTS: usize = 10_000;

pub fn gamma_alpha(t: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    if !(t >= 0.0) {
        return Err(invalid(format!("filter argument must be >= 0, got {t}")));
    }
    Ok(gamma(t, alpha))
}

#[inline]
fn gamma(t: f64, alpha: f64) -> f64 {
    t.sqrt() / (alpha + t)
}

/// C_α = max{1/(2√α), √‖F‖/(α+‖F‖)}.
pub fn c_alpha(alpha: f64, norm_f: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    if !(norm_f >= 0.0) {
        return Err(invalid(format!("norm must be >= 0, got {norm_f}")));
    }
    Ok((0.5 / alpha.sqrt()).max(norm_f.sqrt() / (alpha + norm_f)))
}

/// Where the interpolation nodes sit inside [0, ‖F‖].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodePlacement {
    /// t_ℓ = ℓ‖F‖/N for ℓ = 1..N; the root at zero is built into the basis.
    #[default]
    ExcludeZero,
    /// N points of linspace(0, ‖F‖), endpoints included.
    Linspace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub degree: usize,
    pub nodes: usize,
    pub placement: NodePlacement,
    /// Relative singular value cut-off of the least-squares solve.
    pub cutoff: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            degree: DEFAULT_DEGREE,
            nodes: DEFAULT_NODES,
            placement: NodePlacement::ExcludeZero,
            cutoff: DEFAULT_CUTOFF,
        }
    }
}

impl FitConfig {
    pub fn node_points(&self, norm_f: f64) -> Vec<f64> {
        let n = self.nodes;
        match self.placement {
            NodePlacement::ExcludeZero => (1..=n).map(|l| l as f64 * norm_f / n as f64).collect(),
            NodePlacement::Linspace => (0..n)
                .map(|l| l as f64 * norm_f / (n - 1).max(1) as f64)
                .collect(),
        }
    }
}

/// P(t) = Σ_{k=1}^{deg} c_k t^k fitted to Γ_α on [0, norm_f].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterPolynomial {
    pub alpha: f64,
    pub norm_f: f64,
    pub c: Vec<f64>,
    pub eps: f64,
}

impl FilterPolynomial {
    pub fn eval(&self, t: f64) -> f64 {
        eval_polynomial(self, t)
    }

    pub fn c_alpha(&self) -> f64 {
        (0.5 / self.alpha.sqrt()).max(self.norm_f.sqrt() / (self.alpha + self.norm_f))
    }
}

/// Horner evaluation of c₁t + c₂t² + …; exactly zero at t = 0.
pub fn eval_polynomial(poly: &FilterPolynomial, t: f64) -> f64 {
    t * poly.c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck)
}

pub fn fit_filter_polynomial(alpha: f64, norm_f: f64) -> Result<FilterPolynomial> {
    fit_filter_polynomial_with(alpha, norm_f, &FitConfig::default())
}

pub fn fit_filter_polynomial_with(
    alpha: f64,
    norm_f: f64,
    config: &FitConfig,
) -> Result<FilterPolynomial> {
    if !(alpha > 0.0) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    fit_zero_rooted(|t| gamma(t, alpha), alpha, norm_f, config)
}

/// Fits a zero-rooted polynomial to an arbitrary target. The returned
/// `eps` is measured against `target`, not Γ_α.
pub fn fit_zero_rooted<F: Fn(f64) -> f64>(
    target: F,
    alpha: f64,
    norm_f: f64,
    config: &FitConfig,
) -> Result<FilterPolynomial> {
    if norm_f == 0.0 {
        return Err(degenerate(
            "cannot fit the filter polynomial on [0, 0]: the far-field matrix has an empty spectrum",
        ));
    }
    if !(norm_f > 0.0) || !norm_f.is_finite() {
        return Err(invalid(format!("interval end must be positive, got {norm_f}")));
    }
    if config.degree == 0 || config.nodes < config.degree {
        return Err(invalid(format!(
            "need degree >= 1 and at least as many nodes as coefficients (degree {}, nodes {})",
            config.degree, config.nodes
        )));
    }
    if !(config.cutoff >= 0.0) {
        return Err(invalid("cut-off must be >= 0"));
    }

    let nodes = config.node_points(norm_f);
    let a = DMatrix::from_fn(nodes.len(), config.degree, |l, k| nodes[l].powi(k as i32 + 1));
    let b = DVector::from_iterator(nodes.len(), nodes.iter().map(|&t| target(t)));
    let c = truncated_lstsq(a, &b, config.cutoff);

    let mut poly = FilterPolynomial {
        alpha,
        norm_f,
        c,
        eps: 0.0,
    };
    poly.eps = sup_error(|t| eval_polynomial(&poly, t) - target(t), norm_f, SCAN_POINTS);
    Ok(poly)
}

/// min ‖Ax − b‖ keeping singular values above `cutoff·σ_max`.
fn truncated_lstsq(a: DMatrix<f64>, b: &DVector<f64>, cutoff: f64) -> Vec<f64> {
    let svd = a.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut x = DVector::zeros(vt.ncols());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff * smax && s > 0.0 {
            let coef = u.column(i).dot(b) / s;
            x += vt.row(i).transpose() * coef;
        }
    }
    x.iter().copied().collect()
}

/// sup |err| over [0, end]: an equispaced scan followed by golden-section
/// refinement around every local maximum of the scan.
pub fn sup_error<F: Fn(f64) -> f64>(err: F, end: f64, points: usize) -> f64 {
    let h = end / (points - 1) as f64;
    let vals: Vec<f64> = (0..points).map(|i| err(i as f64 * h).abs()).collect();
    let mut best = vals.iter().copied().fold(0.0, f64::max);
    for i in 0..points {
        let left = if i > 0 { vals[i - 1] } else { f64::NEG_INFINITY };
        let right = if i + 1 < points { vals[i + 1] } else { f64::NEG_INFINITY };
        if vals[i] >= left && vals[i] >= right {
            let lo = (i as f64 - 1.0).max(0.0) * h;
            let hi = ((i + 1) as f64 * h).min(end);
            best = best.max(golden_max(|t| err(t).abs(), lo, hi));
        }
    }
    best
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2).max(f(lo)).max(f(hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_alpha(0.0, 0.3).unwrap(), 0.0);
        assert!((gamma_alpha(0.01, 0.01).unwrap() - 5.0).abs() < 1e-12);
        assert!((gamma_alpha(1.0, 0.01).unwrap() - 1.0 / 1.01).abs() < 1e-15);
        assert!(gamma_alpha(-1.0, 0.01).is_err());
        assert!(gamma_alpha(1.0, 0.0).is_err());
    }

    #[test]
    fn c_alpha_examples() {
        assert!((c_alpha(0.01, 1.0).unwrap() - 5.0).abs() < 1e-12);
        assert!((c_alpha(1.0, 0.25).unwrap() - 0.5).abs() < 1e-15);
        assert!(c_alpha(0.0, 1.0).is_err());
    }

    #[test]
    fn c_alpha_dominates_gamma() {
        for &(alpha, norm_f) in &[(0.01, 1.0), (0.01, 0.005), (1.0, 0.25), (0.5, 40.0)] {
            let ca = c_alpha(alpha, norm_f).unwrap();
            for i in 0..10_000 {
                let t = norm_f * i as f64 / 9_999.0;
                assert!(ca >= gamma(t, alpha));
            }
        }
    }

    #[test]
    fn recovers_exact_cubic() {
        let target = |t: f64| 2.0 * t - t * t + 0.5 * t * t * t;
        let p = fit_zero_rooted(target, 1.0, 2.0, &FitConfig::default()).unwrap();
        let expect = [2.0, -1.0, 0.5];
        for (a, b) in p.c.iter().zip(expect) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!(p.eps < 1e-8);
    }

    #[test]
    fn zero_is_a_root() {
        let p = fit_filter_polynomial(0.01, 3.7).unwrap();
        assert_eq!(eval_polynomial(&p, 0.0), 0.0);
        assert_eq!(p.c.len(), 3);
    }

    #[test]
    fn eps_matches_dense_scan() {
        let p = fit_filter_polynomial(0.01, 1.0).unwrap();
        let n = 1_000_000;
        let dense = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                (eval_polynomial(&p, t) - gamma(t, 0.01)).abs()
            })
            .fold(0.0, f64::max);
        assert!((p.eps - dense).abs() <= 1e-6 * dense, "{} vs {dense}", p.eps);
    }

    #[test]
    fn degenerate_interval() {
        assert!(matches!(
            fit_filter_polynomial(0.01, 0.0),
            Err(crate::DsmError::DegenerateInput(_))
        ));
    }

    #[test]
    fn horner_matches_naive_sum() {
        let p = FilterPolynomial {
            alpha: 1.0,
            norm_f: 1.0,
            c: vec![0.3, -1.7, 2.25],
            eps: 0.0,
        };
        for i in 0..100 {
            let t = i as f64 * 0.37;
            let naive: f64 = p.c.iter().enumerate().map(|(k, c)| c * t.powi(k as i32 + 1)).sum();
            assert!((eval_polynomial(&p, t) - naive).abs() <= 1e-14 * naive.abs().max(1.0));
        }
        let id = FilterPolynomial { c: vec![1.0, 0.0, 0.0], ..p };
        assert_eq!(eval_polynomial(&id, 7.0), 7.0);
    }

    #[test]
    fn linspace_nodes_include_endpoints() {
        let cfg = FitConfig {
            placement: NodePlacement::Linspace,
            ..FitConfig::default()
        };
        let nodes = cfg.node_points(9.0);
        assert_eq!(nodes.first(), Some(&0.0));
        assert_eq!(nodes.last(), Some(&9.0));
        let p = fit_filter_polynomial_with(0.01, 9.0, &cfg).unwrap();
        assert_eq!(p.eval(0.0), 0.0);
    }

    #[test]
    fn node_residual_is_locally_minimal() {
        let p = fit_filter_polynomial(0.01, 5.0).unwrap();
        let nodes = FitConfig::default().node_points(5.0);
        let resid = |c: &[f64]| -> f64 {
            let q = FilterPolynomial { c: c.to_vec(), ..p.clone() };
            nodes.iter().map(|&t| (q.eval(t) - gamma(t, 0.01)).powi(2)).sum()
        };
        let base = resid(&p.c);
        for k in 0..3 {
            for delta in [1e-6, -1e-6] {
                let mut c = p.c.clone();
                c[k] += delta;
                assert!(resid(&c) >= base);
            }
        }
    }
}
