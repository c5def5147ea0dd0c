//! Synthetic normal far-field operators with a unitary scattering operator,
//! and quantitative checks of the indicator inequalities on them.
//!
//! For such operators every eigenvalue sits on the circle
//! |1 + 2ik|γ|²λ| = 1, the middle factor Q = Ψ·diag(λ/|λ|)·Ψ* is unitary,
//! and when all eigenvalue phases fit in an arc of opening ω < π the
//! numerical range of Q stays at distance cos(ω/2) from the origin. That
//! distance is the coercivity constant μ used by the bounds.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{degenerate, invalid, Result};
use crate::farfield::CMatrix;
use crate::filter::{self, FilterPolynomial};
use crate::geometry::{make_directions, Dimension, DirectionSet, Point, WaveContext};
use crate::indicators::{phi_vector, w_dsm, w_fdsm, w_tdsm};
use crate::spectral::{self, SpectralDecomposition};

#[derive(Debug, Clone)]
pub struct SyntheticNormalOperator {
    pub ctx: WaveContext,
    /// Phases ϑ_j of the scattering-operator eigenvalues e^{iϑ_j}.
    pub phases: Vec<f64>,
    /// Unitary Ψ whose columns are the eigenvectors.
    pub eigenvectors: CMatrix,
    pub lambda: Vec<Complex64>,
    /// cos(ω/2) when the eigenvalue phases fit in an arc ω < π.
    pub mu: Option<f64>,
    pub seed: u64,
}

impl SyntheticNormalOperator {
    pub fn m(&self) -> usize {
        self.lambda.len()
    }

    /// F = Ψ·diag(λ)·Ψ*.
    pub fn matrix(&self) -> CMatrix {
        self.diag_conj(|l| l)
    }

    /// Q = Ψ·diag(λ/|λ|)·Ψ*.
    pub fn q_matrix(&self) -> CMatrix {
        self.diag_conj(|l| if l.norm() > 0.0 { l / l.norm() } else { Complex64::new(1.0, 0.0) })
    }

    fn diag_conj(&self, f: impl Fn(Complex64) -> Complex64) -> CMatrix {
        let mut pd = self.eigenvectors.clone();
        for (j, &l) in self.lambda.iter().enumerate() {
            let c = f(l);
            pd.column_mut(j).iter_mut().for_each(|x| *x *= c);
        }
        pd * self.eigenvectors.adjoint()
    }

    /// max_j | |1 + 2ik|γ|²λ_j| − 1 |.
    pub fn circle_residency(&self) -> f64 {
        let c = Complex64::new(0.0, 2.0 * self.ctx.k() * self.ctx.gamma_sq());
        self.lambda
            .iter()
            .map(|&l| ((Complex64::new(1.0, 0.0) + c * l).norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn mu_required(&self) -> Result<f64> {
        self.mu.ok_or_else(|| {
            degenerate("eigenvalue phases span an arc of at least π; μ is undefined")
        })
    }
}

/// Seeded Haar-like unitary from a QR factorization of a complex Gaussian matrix.
pub fn random_unitary(m: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMatrix::from_fn(m, m, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    // Fix the phase of each column so the distribution does not depend on
    // the QR sign convention.
    for j in 0..m {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let c = d / d.norm();
            q.column_mut(j).iter_mut().for_each(|x| *x *= c);
        }
    }
    q
}

/// Opening of the shortest arc of the unit circle containing all angles.
pub fn arc_opening(angles: &[f64]) -> f64 {
    if angles.len() <= 1 {
        return 0.0;
    }
    let mut a: Vec<f64> = angles.iter().map(|t| t.rem_euclid(2.0 * PI)).collect();
    a.sort_by(f64::total_cmp);
    let mut largest_gap = a[0] + 2.0 * PI - a[a.len() - 1];
    for w in a.windows(2) {
        largest_gap = largest_gap.max(w[1] - w[0]);
    }
    2.0 * PI - largest_gap
}

/// Builds a normal F whose scattering operator is unitary with eigenvalue
/// phases `phases`.
pub fn synth_normal_farfield(
    ctx: &WaveContext,
    phases: &[f64],
    unitary_seed: u64,
) -> Result<(SyntheticNormalOperator, CMatrix)> {
    if ctx.dimension() != Dimension::Two {
        return Err(invalid("synthetic operators are built in 2D"));
    }
    if phases.is_empty() {
        return Err(invalid("need at least one phase"));
    }
    if let Some(t) = phases.iter().find(|&&t| !(t > 0.0 && t < 2.0 * PI)) {
        return Err(invalid(format!("phase {t} outside (0, 2π)")));
    }
    let c = Complex64::new(0.0, 2.0 * ctx.k() * ctx.gamma_sq());
    let lambda: Vec<Complex64> = phases
        .iter()
        .map(|&t| {
            let general = (Complex64::from_polar(1.0, t) - 1.0) / c;
            let closed = Complex64::from_polar(8.0 * PI * (t / 2.0).sin(), t / 2.0);
            debug_assert!((general - closed).norm() < 1e-12);
            general
        })
        .collect();
    let opening = arc_opening(&lambda.iter().map(|l| l.arg()).collect::<Vec<_>>());
    let mu = (opening < PI).then(|| (opening / 2.0).cos());
    let op = SyntheticNormalOperator {
        ctx: *ctx,
        phases: phases.to_vec(),
        eigenvectors: random_unitary(phases.len(), unitary_seed),
        lambda,
        mu,
        seed: unitary_seed,
    };
    let f = op.matrix();
    Ok((op, f))
}

/// Seeded phases covering [lo, hi], both endpoints included.
pub fn arc_phases(m: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0fa3c);
    (0..m)
        .map(|j| match j {
            0 => lo,
            1 => hi,
            _ => rng.random_range(lo..=hi),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub side: String,
    pub trial: usize,
    pub z: Option<Point>,
    pub margin: f64,
}

/// Outcome of one check; `worst_margin` is the smallest (rhs − lhs) seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub trials: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub stats: BTreeMap<String, f64>,
    #[serde(default)]
    pub first_violation: Option<Violation>,
}

impl CheckReport {
    fn new(name: &str, seeds: Vec<u64>) -> Self {
        Self {
            name: name.into(),
            trials: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            seeds,
            stats: BTreeMap::new(),
            first_violation: None,
        }
    }

    /// Records lhs ≤ rhs up to `slack`.
    fn record(&mut self, side: &str, trial: usize, z: Option<Point>, lhs: f64, rhs: f64, slack: f64) {
        let margin = rhs - lhs;
        self.worst_margin = self.worst_margin.min(margin);
        if margin < -slack {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(Violation {
                    side: side.into(),
                    trial,
                    z,
                    margin,
                });
            }
        }
    }

    fn stat_max(&mut self, key: &str, v: f64) {
        let e = self.stats.entry(key.into()).or_insert(f64::NEG_INFINITY);
        *e = e.max(v);
    }

    fn stat_min(&mut self, key: &str, v: f64) {
        let e = self.stats.entry(key.into()).or_insert(f64::INFINITY);
        *e = e.min(v);
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn random_unit_vector(m: usize, rng: &mut ChaCha8Rng) -> DVector<Complex64> {
    let g = DVector::from_fn(m, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    });
    let n = g.norm();
    g.unscale(n)
}

/// |g*Qg| ≥ μ and ‖Qg‖ ≤ 1 over random unit vectors g.
pub fn check_q_coercivity(synth: &SyntheticNormalOperator, trials: usize, seed: u64) -> Result<CheckReport> {
    let mu = synth.mu_required()?;
    let q = synth.q_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("q_coercivity", vec![synth.seed, seed]);
    for t in 0..trials {
        let g = random_unit_vector(synth.m(), &mut rng);
        let qg = &q * &g;
        let form = g.dotc(&qg).norm();
        report.record("lower", t, None, mu, form, 1e-9);
        report.record("contraction", t, None, qg.norm(), 1.0, 1e-12);
        report.stat_min("observed_min", form);
        report.stat_max("max_norm_qg", qg.norm());
    }
    report.trials = trials;
    report.stats.insert("mu".into(), mu);
    Ok(report)
}

fn random_points(num: usize, half_width: f64, rng: &mut ChaCha8Rng) -> Vec<Point> {
    (0..num)
        .map(|_| {
            [
                rng.random_range(-half_width..=half_width),
                rng.random_range(-half_width..=half_width),
                0.0,
            ]
        })
        .collect()
}

const SAMPLING_HALF_WIDTH: f64 = 2.0;

fn check_dirs(synth: &SyntheticNormalOperator, dirs: &DirectionSet) -> Result<()> {
    if dirs.len() != synth.m() {
        return Err(invalid(format!(
            "operator has {} eigenvalues but {} directions were given",
            synth.m(),
            dirs.len()
        )));
    }
    Ok(())
}

/// (μ/M)·W_FDSM² ≤ W_DSM ≤ √s₁·W_FDSM at `num_z` random sampling points.
pub fn check_equivalence(
    synth: &SyntheticNormalOperator,
    num_z: usize,
    dirs: &DirectionSet,
    seed: u64,
) -> Result<CheckReport> {
    check_dirs(synth, dirs)?;
    let mu = synth.mu_required()?;
    let f = synth.matrix();
    let decomp = spectral::svd(&f)?;
    let m = synth.m() as f64;
    let root_s1 = decomp.s1().sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("equivalence", vec![synth.seed, seed]);
    for (t, z) in random_points(num_z, SAMPLING_HALF_WIDTH, &mut rng).into_iter().enumerate() {
        let phi = phi_vector(&z, &synth.ctx, dirs)?;
        let dsm = w_dsm(&f, &phi)?;
        let fdsm = w_fdsm(&decomp, &phi)?;
        let lower = mu / m * fdsm * fdsm;
        let upper = root_s1 * fdsm;
        let scale = dsm.max(1.0);
        report.record("lower", t, Some(z), lower, dsm, 1e-9 * scale);
        report.record("upper", t, Some(z), dsm, upper, 1e-9 * scale);
        if dsm > 0.0 {
            report.stat_max("worst_lower_ratio", lower / dsm);
        }
        if upper > 0.0 {
            report.stat_max("worst_upper_ratio", dsm / upper);
        }
    }
    report.trials = num_z;
    report.stats.insert("mu".into(), mu);
    report.stats.insert("s1".into(), decomp.s1());
    Ok(report)
}

/// W_TDSM ≤ (1/(μα²))·W_DSM + M(2εC_α + ε²) at random sampling points.
pub fn check_tdsm_bound(
    synth: &SyntheticNormalOperator,
    poly: &FilterPolynomial,
    num_z: usize,
    dirs: &DirectionSet,
    seed: u64,
) -> Result<CheckReport> {
    check_dirs(synth, dirs)?;
    let f = synth.matrix();
    let decomp = spectral::svd(&f)?;
    let p = poly.clone();
    tdsm_bound_inner(
        synth,
        &f,
        &decomp,
        &|d, phi| w_tdsm(d, &p, phi),
        poly.alpha,
        poly.eps,
        poly.c_alpha(),
        num_z,
        dirs,
        seed,
    )
}

/// Same bound with the exact filter Γ_α applied to the singular values,
/// i.e. ε = 0.
pub fn check_tdsm_bound_exact_filter(
    synth: &SyntheticNormalOperator,
    alpha: f64,
    num_z: usize,
    dirs: &DirectionSet,
    seed: u64,
) -> Result<CheckReport> {
    check_dirs(synth, dirs)?;
    let f = synth.matrix();
    let decomp = spectral::svd(&f)?;
    let ca = filter::c_alpha(alpha, decomp.s1())?;
    let eval = |d: &SpectralDecomposition, phi: &crate::indicators::PhiVector| -> Result<f64> {
        let mut acc = 0.0;
        for (j, &s) in d.s.iter().enumerate() {
            let g = filter::gamma_alpha(s, alpha)?;
            acc += g * g * d.v.column(j).dotc(&phi.values).norm_sqr();
        }
        Ok(acc)
    };
    tdsm_bound_inner(synth, &f, &decomp, &eval, alpha, 0.0, ca, num_z, dirs, seed)
}

#[allow(clippy::too_many_arguments)]
fn tdsm_bound_inner(
    synth: &SyntheticNormalOperator,
    f: &CMatrix,
    decomp: &SpectralDecomposition,
    tdsm: &dyn Fn(&SpectralDecomposition, &crate::indicators::PhiVector) -> Result<f64>,
    alpha: f64,
    eps: f64,
    c_alpha: f64,
    num_z: usize,
    dirs: &DirectionSet,
    seed: u64,
) -> Result<CheckReport> {
    let mu = synth.mu_required()?;
    let m = synth.m() as f64;
    let offset = m * (2.0 * eps * c_alpha + eps * eps);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("tdsm_bound", vec![synth.seed, seed]);
    for (t, z) in random_points(num_z, SAMPLING_HALF_WIDTH, &mut rng).into_iter().enumerate() {
        let phi = phi_vector(&z, &synth.ctx, dirs)?;
        let lhs = tdsm(decomp, &phi)?;
        let rhs = w_dsm(f, &phi)? / (mu * alpha * alpha) + offset;
        report.record("upper", t, Some(z), lhs, rhs, 1e-9 * rhs.max(1.0));
        if rhs > 0.0 {
            report.stat_max("worst_ratio", lhs / rhs);
        }
    }
    report.trials = num_z;
    report.stats.insert("mu".into(), mu);
    report.stats.insert("alpha".into(), alpha);
    report.stats.insert("eps".into(), eps);
    report.stats.insert("c_alpha".into(), c_alpha);
    Ok(report)
}

/// Mean of `field` over circles |z| = R, `samples` equispaced angles each.
pub fn annulus_means<F: Fn(&Point) -> f64>(field: F, radii: &[f64], samples: usize) -> Vec<f64> {
    radii
        .iter()
        .map(|&r| {
            (0..samples)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / samples as f64;
                    field(&[r * t.cos(), r * t.sin(), 0.0])
                })
                .sum::<f64>()
                / samples as f64
        })
        .collect()
}

/// Least-squares slope of log(mean) against log(R).
pub fn estimate_decay_rate(radii: &[f64], means: &[f64]) -> Result<f64> {
    if radii.len() < 3 || radii.len() != means.len() {
        return Err(invalid("need at least three radii with one mean each"));
    }
    if means.iter().any(|&v| !(v > 0.0)) || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(degenerate("decay fit needs positive radii and means"));
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = means.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Sup-norm of FF* − F*F.
pub fn normality_defect(f: &CMatrix) -> f64 {
    let a = f * f.adjoint() - f.adjoint() * f;
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Parameters of the inequality suite run by `dsm verify`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub m: usize,
    pub k: f64,
    pub num_z: usize,
    pub q_trials: usize,
    pub alpha: f64,
    /// Multiplies the constructed μ; values > 1 are a negative control.
    pub mu_scale: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            m: 64,
            k: 10.0,
            num_z: 1000,
            q_trials: 10_000,
            alpha: filter::DEFAULT_ALPHA,
            mu_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }
}

/// Synthesizes an operator with phase arc π/2 and runs every check on it.
pub fn run_suite(config: &SuiteConfig, seed: u64) -> Result<SuiteReport> {
    let ctx = WaveContext::new(Dimension::Two, config.k)?;
    let dirs = make_directions(Dimension::Two, config.m)?;
    let phases = arc_phases(config.m, PI / 2.0, 3.0 * PI / 2.0, seed);
    let (mut synth, f) = synth_normal_farfield(&ctx, &phases, seed)?;
    synth.mu = synth.mu.map(|mu| mu * config.mu_scale);

    let mut checks = Vec::new();

    let mut circle = CheckReport::new("scattering_circle", vec![seed]);
    circle.trials = synth.m();
    circle.record("residency", 0, None, synth.circle_residency(), 0.0, 1e-12);
    checks.push(circle);

    let mut normal = CheckReport::new("normality", vec![seed]);
    normal.trials = 1;
    normal.record("commutator", 0, None, normality_defect(&f), 0.0, 1e-10);
    checks.push(normal);

    let decomp = spectral::svd(&f)?;
    let mut moduli: Vec<f64> = synth.lambda.iter().map(|l| l.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    let mut sv = CheckReport::new("singular_values_are_moduli", vec![seed]);
    sv.trials = moduli.len();
    for (j, (s, l)) in decomp.s.iter().zip(&moduli).enumerate() {
        sv.record("deviation", j, None, (s - l).abs(), 0.0, 1e-9);
    }
    checks.push(sv);

    checks.push(check_q_coercivity(&synth, config.q_trials, seed.wrapping_add(1))?);
    checks.push(check_equivalence(&synth, config.num_z, &dirs, seed.wrapping_add(2))?);
    let poly = filter::fit_filter_polynomial(config.alpha, decomp.s1())?;
    checks.push(check_tdsm_bound(&synth, &poly, config.num_z, &dirs, seed.wrapping_add(3))?);
    Ok(SuiteReport { seed, checks })
}
