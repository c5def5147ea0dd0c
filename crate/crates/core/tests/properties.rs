//! Property tests for the module invariants.

use std::f64::consts::PI;

use dsm_core::bessel::{self, BesselKind};
use dsm_core::filter::{self, FitConfig};
use dsm_core::geometry::{
    born_entry, born_farfield, herglotz_phi, make_directions, DEFAULT_QUAD_LEVEL,
};
use dsm_core::indicators::{
    evaluate_grid, level_set, phi_vector, w_dsm, w_fdsm, w_tdsm, IndicatorData, IndicatorKind,
    SamplingGrid,
};
use dsm_core::noise::{corrupt, spectral_norm, unit_noise_matrix, NoiseSpec};
use dsm_core::spectral::{self, f_sharp, half_power_matrix};
use dsm_core::verify::{arc_opening, arc_phases, normality_defect, synth_normal_farfield};
use dsm_core::{CMatrix, Dimension, Scatterer, Shape, WaveContext};
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(m: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CMatrix::from_fn(m, m, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// J_n(t) = (1/π)∫₀^π cos(nθ − t sin θ) dθ by the trapezoid rule on the
/// periodic extension, which converges geometrically once the node count
/// exceeds t.
fn bessel_integral(order: f64, t: f64) -> f64 {
    let n = 512;
    let h = 2.0 * PI / n as f64;
    (0..n)
        .map(|i| {
            let th = i as f64 * h;
            (order * th - t * th.sin()).cos()
        })
        .sum::<f64>()
        / n as f64
}

#[test]
fn bessel_matches_integral_oracle_on_sweep() {
    for i in 0..1000 {
        let t = 50.0 * i as f64 / 999.0;
        let j0 = bessel::bessel_eval(BesselKind::J0, t).unwrap();
        let j1 = bessel::bessel_eval(BesselKind::J1, t).unwrap();
        assert!((j0 - bessel_integral(0.0, t)).abs() < 1e-10, "J0({t})");
        assert!((j1 - bessel_integral(1.0, t)).abs() < 1e-10, "J1({t})");
        if t > 0.0 {
            let sj = bessel::bessel_eval(BesselKind::SphericalJ0, t).unwrap();
            assert!((sj - t.sin() / t).abs() < 1e-12);
        }
    }
}

fn shape_strategy() -> impl Strategy<Value = Shape> {
    prop_oneof![
        Just(Shape::Pear),
        Just(Shape::Star),
        Just(Shape::Peanut),
        (0.1f64..0.6).prop_map(|radius| Shape::Disk { radius }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn born_reciprocity(shape in shape_strategy(), a in 0.0f64..6.3, b in 0.0f64..6.3, k in 1.0f64..12.0) {
        let ctx = WaveContext::new(Dimension::Two, k).unwrap();
        let sc = Scatterer::new(shape, 0.5);
        let x = [a.cos(), a.sin(), 0.0];
        let y = [b.cos(), b.sin(), 0.0];
        let fwd = born_entry(&sc, &ctx, &x, &y, DEFAULT_QUAD_LEVEL).unwrap();
        let rev = born_entry(&sc, &ctx, &[-y[0], -y[1], 0.0], &[-x[0], -x[1], 0.0], DEFAULT_QUAD_LEVEL).unwrap();
        prop_assert!((fwd - rev).norm() < 1e-8);
    }

    #[test]
    fn born_quadrature_converges(radius in 0.1f64..0.6, a in 0.0f64..6.3, b in 0.0f64..6.3) {
        let ctx = WaveContext::new(Dimension::Two, 10.0).unwrap();
        let sc = Scatterer::new(Shape::Disk { radius }, 0.5);
        let x = [a.cos(), a.sin(), 0.0];
        let y = [b.cos(), b.sin(), 0.0];
        let coarse = born_entry(&sc, &ctx, &x, &y, 48).unwrap();
        let fine = born_entry(&sc, &ctx, &x, &y, 96).unwrap();
        prop_assert!((coarse - fine).norm() < 1e-8);
    }

    #[test]
    fn herglotz_depends_only_on_distance(r in 0.0f64..1.5, a in 0.0f64..6.3, b in 0.0f64..6.3) {
        let ctx = WaveContext::new(Dimension::Two, 10.0).unwrap();
        let z1 = [0.3, -0.2, 0.0];
        let x1 = [z1[0] + r * a.cos(), z1[1] + r * a.sin(), 0.0];
        let z2 = [-0.7, 0.4, 0.0];
        let x2 = [z2[0] + r * b.cos(), z2[1] + r * b.sin(), 0.0];
        let v1 = herglotz_phi(&z1, &x1, &ctx, 128).unwrap();
        let v2 = herglotz_phi(&z2, &x2, &ctx, 128).unwrap();
        prop_assert!((v1 - v2).norm() < 1e-10);
    }

    #[test]
    fn noise_is_unit_norm_and_hadamard(seed in any::<u64>(), delta in 0.0f64..0.2) {
        let e = unit_noise_matrix(12, seed).unwrap();
        prop_assert!((spectral_norm(&e).unwrap() - 1.0).abs() < 1e-12);
        let dirs = make_directions(Dimension::Two, 12).unwrap();
        let ctx = WaveContext::new(Dimension::Two, 10.0).unwrap();
        let ff = born_farfield(&Scatterer::new(Shape::Pear, 0.5), &ctx, &dirs, 24).unwrap();
        let noisy = corrupt(&ff, &NoiseSpec::new(delta, seed).unwrap()).unwrap();
        let expect = ff.entries().zip_map(&e, |f, e| f * (Complex64::new(1.0, 0.0) + e * delta));
        prop_assert!(max_abs(&(noisy.entries() - expect)) < 1e-13);
        prop_assert!(noisy.provenance().is_noisy());
    }

    #[test]
    fn svd_contract(m in 1usize..24, seed in any::<u64>()) {
        let f = random_matrix(m, seed);
        let d = spectral::svd(&f).unwrap();
        prop_assert!(max_abs(&(d.reconstruct() - &f)) < 1e-11);
        let id = CMatrix::identity(m, m);
        prop_assert!(max_abs(&(d.u.adjoint() * &d.u - &id)) < 1e-11);
        prop_assert!(max_abs(&(d.v.adjoint() * &d.v - &id)) < 1e-11);
        prop_assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(d.s.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn half_power_squares_to_modulus(m in 1usize..16, seed in any::<u64>()) {
        let f = random_matrix(m, seed);
        let d = spectral::svd(&f).unwrap();
        let h = half_power_matrix(&d);
        let h4 = &h * &h * &h * &h;
        let ff = f.adjoint() * &f;
        prop_assert!(max_abs(&(h4 - &ff)) < 1e-9 * (1.0 + max_abs(&ff)));
        prop_assert!(max_abs(&(h.adjoint() - &h)) < 1e-12);
    }

    #[test]
    fn f_sharp_is_positive_hermitian(m in 1usize..16, seed in any::<u64>()) {
        let f = random_matrix(m, seed);
        let fs = f_sharp(&f).unwrap();
        prop_assert!(max_abs(&(fs.adjoint() - &fs)) < 1e-12);
        let eig = fs.symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|&l| l > -1e-10));
    }

    #[test]
    fn filter_polynomial_is_zero_rooted_and_bounded(alpha in 1e-3f64..1.0, norm_f in 0.5f64..200.0, t in 0.0f64..1.0) {
        let poly = filter::fit_filter_polynomial(alpha, norm_f).unwrap();
        prop_assert_eq!(poly.eval(0.0), 0.0);
        let x = t * norm_f;
        let gap = (poly.eval(x) - filter::gamma_alpha(x, alpha).unwrap()).abs();
        prop_assert!(gap <= poly.eps * (1.0 + 1e-9));
        prop_assert!(poly.c_alpha() >= filter::gamma_alpha(x, alpha).unwrap());
    }

    #[test]
    fn exact_cubic_is_recovered(c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, c3 in -2.0f64..2.0, norm_f in 0.5f64..10.0) {
        let poly = filter::fit_zero_rooted(
            |t| c1 * t + c2 * t * t + c3 * t * t * t, 1.0, norm_f, &FitConfig::default()).unwrap();
        let scale = 1.0 + c1.abs() + c2.abs() + c3.abs();
        prop_assert!((poly.c[0] - c1).abs() < 1e-8 * scale);
        prop_assert!((poly.c[1] - c2).abs() < 1e-8 * scale);
        prop_assert!((poly.c[2] - c3).abs() < 1e-8 * scale);
    }

    #[test]
    fn indicators_nonnegative_and_fdsm_positive(seed in any::<u64>(), zx in -2.0f64..2.0, zy in -2.0f64..2.0) {
        let m = 12;
        let ctx = WaveContext::new(Dimension::Two, 10.0).unwrap();
        let dirs = make_directions(Dimension::Two, m).unwrap();
        let f = random_matrix(m, seed) + CMatrix::identity(m, m) * Complex64::new(3.0, 0.0);
        let d = spectral::svd(&f).unwrap();
        prop_assert!(*d.s.last().unwrap() > 0.0);
        let poly = filter::fit_filter_polynomial(1e-2, d.s1()).unwrap();
        let phi = phi_vector(&[zx, zy, 0.0], &ctx, &dirs).unwrap();
        prop_assert!(w_dsm(&f, &phi).unwrap() >= 0.0);
        prop_assert!(w_fdsm(&d, &phi).unwrap() > 0.0);
        prop_assert!(w_tdsm(&d, &poly, &phi).unwrap() >= 0.0);
        prop_assert!((phi.values.norm_squared() - m as f64).abs() < 1e-10);
    }

    #[test]
    fn synthetic_operator_invariants(m in 2usize..24, seed in any::<u64>(), lo in 0.05f64..3.0, width in 0.0f64..3.0) {
        let ctx = WaveContext::new(Dimension::Two, 10.0).unwrap();
        let hi = (lo + width).min(2.0 * PI - 0.05);
        let phases = arc_phases(m, lo, hi, seed);
        let (op, f) = synth_normal_farfield(&ctx, &phases, seed).unwrap();
        prop_assert!(op.circle_residency() < 1e-12);
        prop_assert!(normality_defect(&f) < 1e-10);
        let d = spectral::svd(&f).unwrap();
        let mut moduli: Vec<f64> = op.lambda.iter().map(|l| l.norm()).collect();
        moduli.sort_by(|a, b| b.total_cmp(a));
        for (s, l) in d.s.iter().zip(&moduli) {
            prop_assert!((s - l).abs() < 1e-9);
        }
        prop_assert!(op.mu.unwrap() > 0.0);
    }

    #[test]
    fn mu_monotone_under_shrinking_arc(lo in 0.05f64..3.0, width in 0.0f64..3.0, shrink in 0.0f64..1.0, seed in any::<u64>()) {
        let ctx = WaveContext::new(Dimension::Two, 1.0).unwrap();
        let hi = (lo + width).min(2.0 * PI - 0.05);
        let wide = arc_phases(8, lo, hi, seed);
        let mid = 0.5 * (lo + hi);
        let narrow: Vec<f64> = wide.iter().map(|t| mid + shrink * (t - mid)).collect();
        let (a, _) = synth_normal_farfield(&ctx, &wide, seed).unwrap();
        let (b, _) = synth_normal_farfield(&ctx, &narrow, seed).unwrap();
        prop_assert!(b.mu.unwrap() >= a.mu.unwrap() - 1e-12);
        let angles: Vec<f64> = narrow.iter().map(|t| t / 2.0).collect();
        prop_assert!(arc_opening(&angles) <= (hi - lo) / 2.0 + 1e-12);
    }

    #[test]
    fn level_sets_nest(t1 in 0.05f64..0.95, t2 in 0.05f64..0.95) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let ctx = WaveContext::new(Dimension::Two, 10.0).unwrap();
        let dirs = make_directions(Dimension::Two, 16).unwrap();
        let ff = born_farfield(&Scatterer::new(Shape::Peanut, 0.5), &ctx, &dirs, 24).unwrap();
        let data = IndicatorData::from_matrix(ff);
        let grid = SamplingGrid::new(-1.0, 1.0, -1.0, 1.0, 21, 21).unwrap();
        let g = evaluate_grid(IndicatorKind::Dsm, &data, &grid).unwrap().normalize().unwrap();
        let a = level_set(&g, lo).unwrap();
        let b = level_set(&g, hi).unwrap();
        prop_assert!(b.mask.iter().zip(&a.mask).all(|(&inner, &outer)| !inner || outer));
    }
}

#[test]
fn fdsm_strictly_positive_on_grid() {
    let m = 16;
    let ctx = WaveContext::new(Dimension::Two, 10.0).unwrap();
    let dirs = make_directions(Dimension::Two, m).unwrap();
    let ff = born_farfield(&Scatterer::new(Shape::Star, 0.5), &ctx, &dirs, 32).unwrap();
    let noisy = corrupt(&ff, &NoiseSpec::new(0.05, 3).unwrap()).unwrap();
    let data = IndicatorData::prepare(noisy, 1e-2, &FitConfig::default()).unwrap();
    assert!(*data.decomp.as_ref().unwrap().s.last().unwrap() > 0.0);
    let grid = SamplingGrid::new(-1.0, 1.0, -1.0, 1.0, 30, 30).unwrap();
    let g = evaluate_grid(IndicatorKind::Fdsm, &data, &grid).unwrap();
    assert!(g.values.iter().all(|&v| v > 0.0));
}

#[test]
fn pipeline_is_deterministic() {
    let run = || {
        let ctx = WaveContext::new(Dimension::Two, 10.0).unwrap();
        let dirs = make_directions(Dimension::Two, 16).unwrap();
        let ff = born_farfield(&Scatterer::new(Shape::Pear, 0.5), &ctx, &dirs, 32).unwrap();
        let noisy = corrupt(&ff, &NoiseSpec::new(0.05, 11).unwrap()).unwrap();
        let data = IndicatorData::prepare(noisy, 1e-2, &FitConfig::default()).unwrap();
        let grid = SamplingGrid::new(-1.0, 1.0, -1.0, 1.0, 25, 25).unwrap();
        let mut out = Vec::new();
        for kind in IndicatorKind::ALL {
            evaluate_grid(kind, &data, &grid)
                .unwrap()
                .normalize()
                .unwrap()
                .write_csv(&mut out)
                .unwrap();
        }
        out
    };
    assert_eq!(run(), run());
}

#[test]
fn sandwich_upper_bound_through_positivity() {
    // DSM = |φ*|F|^{1/2}Q|F|^{1/2}φ| ≤ ‖|F|^{1/2}‖·FDSM for normal F.
    let ctx = WaveContext::new(Dimension::Two, 10.0).unwrap();
    let dirs = make_directions(Dimension::Two, 32).unwrap();
    let phases = arc_phases(32, 0.4, 5.0, 9);
    let (op, f) = synth_normal_farfield(&ctx, &phases, 9).unwrap();
    let d = spectral::svd(&f).unwrap();
    let h = half_power_matrix(&d);
    let q = op.q_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let z = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), 0.0];
        let phi = phi_vector(&z, &ctx, &dirs).unwrap();
        let hphi: DVector<Complex64> = &h * &phi.values;
        let middle = hphi.dotc(&(&q * &hphi)).norm();
        let dsm = w_dsm(&f, &phi).unwrap();
        let fdsm = w_fdsm(&d, &phi).unwrap();
        assert!((middle - dsm).abs() < 1e-9 * dsm.max(1.0));
        assert!(dsm <= d.s1().sqrt() * fdsm * (1.0 + 1e-12));
    }
}
