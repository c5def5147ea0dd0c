//! Direct sampling indicators evaluated at single points and over grids.
//!
//! All inner products are plain Euclidean sums over the M directions, so
//! ‖φ_z‖² = M.

mod grid;
mod level_set;

pub use grid::{evaluate_grid, GridState, IndicatorGrid, Plane, SamplingGrid};
pub use level_set::{hausdorff_to_truth, level_set, LevelSet};

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{degenerate, invalid, DsmError, Result};
use crate::farfield::{CMatrix, FarFieldMatrix};
use crate::filter::{self, FilterPolynomial, FitConfig};
use crate::geometry::{dot, DirectionSet, Dimension, Point, WaveContext};
use crate::spectral::{self, SpectralDecomposition};

pub const DEFAULT_FM_CUTOFF: f64 = 1e-8;
pub const DEFAULT_TAU_2D: f64 = 0.85;
pub const DEFAULT_TAU_3D: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndicatorKind {
    Dsm,
    Fdsm,
    Tdsm,
    Fm,
}

impl IndicatorKind {
    pub const ALL: [IndicatorKind; 4] = [
        IndicatorKind::Dsm,
        IndicatorKind::Fdsm,
        IndicatorKind::Tdsm,
        IndicatorKind::Fm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IndicatorKind::Dsm => "dsm",
            IndicatorKind::Fdsm => "fdsm",
            IndicatorKind::Tdsm => "tdsm",
            IndicatorKind::Fm => "fm",
        }
    }
}

impl fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IndicatorKind {
    type Err = DsmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dsm" => Ok(IndicatorKind::Dsm),
            "fdsm" => Ok(IndicatorKind::Fdsm),
            "tdsm" => Ok(IndicatorKind::Tdsm),
            "fm" => Ok(IndicatorKind::Fm),
            other => Err(invalid(format!(
                "unknown indicator '{other}' (expected dsm, fdsm, tdsm or fm)"
            ))),
        }
    }
}

/// Test vector φ_z = [e^{−ik x̂_j·z}]_j.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiVector {
    pub z: Point,
    pub values: DVector<Complex64>,
}

pub fn phi_vector(z: &Point, ctx: &WaveContext, dirs: &DirectionSet) -> Result<PhiVector> {
    if ctx.dimension() != dirs.dimension() {
        return Err(invalid("direction set and wave context disagree on dimension"));
    }
    if ctx.dimension() == Dimension::Two && z[2] != 0.0 {
        return Err(invalid("planar sampling point has a nonzero third coordinate"));
    }
    let k = ctx.k();
    let values = DVector::from_iterator(
        dirs.len(),
        dirs.directions()
            .iter()
            .map(|d| Complex64::from_polar(1.0, -k * dot(d, z))),
    );
    Ok(PhiVector { z: *z, values })
}

fn check_len(expected: usize, phi: &PhiVector) -> Result<()> {
    if phi.values.len() != expected {
        return Err(DsmError::DimensionMismatch {
            expected,
            got: phi.values.len(),
        });
    }
    Ok(())
}

/// |φ* F φ|.
pub fn w_dsm(f: &CMatrix, phi: &PhiVector) -> Result<f64> {
    if f.nrows() != f.ncols() {
        return Err(invalid("far-field matrix must be square"));
    }
    check_len(f.nrows(), phi)?;
    Ok(phi.values.dotc(&(f * &phi.values)).norm())
}

/// |v_j* φ|² for every right singular vector.
fn projections(decomp: &SpectralDecomposition, phi: &PhiVector) -> Result<Vec<f64>> {
    check_len(decomp.m(), phi)?;
    Ok((0..decomp.m())
        .map(|j| decomp.v.column(j).dotc(&phi.values).norm_sqr())
        .collect())
}

/// Σ √s_j |φ* v_j|².
pub fn w_fdsm(decomp: &SpectralDecomposition, phi: &PhiVector) -> Result<f64> {
    let proj = projections(decomp, phi)?;
    Ok(decomp.s.iter().zip(proj).map(|(s, p)| s.sqrt() * p).sum())
}

fn check_poly(decomp: &SpectralDecomposition, poly: &FilterPolynomial) -> Result<()> {
    let s1 = decomp.s1();
    if (poly.norm_f - s1).abs() > 0.1 * s1 {
        return Err(DsmError::Configuration(format!(
            "filter polynomial was fitted on [0, {}] but the spectral norm is {s1}",
            poly.norm_f
        )));
    }
    Ok(())
}

/// Σ P²(s_j) |φ* v_j|².
pub fn w_tdsm(
    decomp: &SpectralDecomposition,
    poly: &FilterPolynomial,
    phi: &PhiVector,
) -> Result<f64> {
    check_poly(decomp, poly)?;
    let proj = projections(decomp, phi)?;
    Ok(decomp
        .s
        .iter()
        .zip(proj)
        .map(|(&s, p)| poly.eval(s).powi(2) * p)
        .sum())
}

fn fm_weights(decomp: &SpectralDecomposition, cutoff: f64) -> Result<Vec<f64>> {
    if !(cutoff >= 0.0) {
        return Err(invalid(format!("cut-off must be >= 0, got {cutoff}")));
    }
    let floor = cutoff * decomp.s1();
    let weights: Vec<f64> = decomp
        .s
        .iter()
        .map(|&s| if s > floor && s > 0.0 { 1.0 / s } else { 0.0 })
        .collect();
    if weights.iter().all(|&w| w == 0.0) {
        return Err(degenerate(
            "every singular value lies below the Picard cut-off",
        ));
    }
    Ok(weights)
}

/// Truncated Picard sum Σ_{s_j > cutoff·s₁} |φ* v_j|² / s_j.
pub fn fm_picard(decomp: &SpectralDecomposition, phi: &PhiVector, cutoff: f64) -> Result<f64> {
    let weights = fm_weights(decomp, cutoff)?;
    let proj = projections(decomp, phi)?;
    Ok(weights.iter().zip(proj).map(|(w, p)| w * p).sum())
}

/// Everything an indicator may need: the (noisy) matrix, its singular
/// system and the filter polynomial.
#[derive(Debug, Clone)]
pub struct IndicatorData {
    pub farfield: FarFieldMatrix,
    pub decomp: Option<SpectralDecomposition>,
    pub poly: Option<FilterPolynomial>,
    pub fm_cutoff: f64,
}

impl IndicatorData {
    /// Matrix only; enough for the DSM.
    pub fn from_matrix(farfield: FarFieldMatrix) -> Self {
        Self {
            farfield,
            decomp: None,
            poly: None,
            fm_cutoff: DEFAULT_FM_CUTOFF,
        }
    }

    /// One SVD and one polynomial fit, shared by every spectral indicator.
    pub fn prepare(farfield: FarFieldMatrix, alpha: f64, fit: &FitConfig) -> Result<Self> {
        let decomp = spectral::svd(farfield.entries())?;
        let poly = filter::fit_filter_polynomial_with(alpha, decomp.s1(), fit)?;
        Ok(Self {
            farfield,
            decomp: Some(decomp),
            poly: Some(poly),
            fm_cutoff: DEFAULT_FM_CUTOFF,
        })
    }

    fn decomp(&self, kind: IndicatorKind) -> Result<&SpectralDecomposition> {
        self.decomp
            .as_ref()
            .ok_or_else(|| invalid(format!("{kind} needs the singular value decomposition")))
    }

    /// Per-singular-value weights w_j so that the indicator is Σ w_j |φ* v_j|².
    pub(crate) fn spectral_weights(&self, kind: IndicatorKind) -> Result<Option<Vec<f64>>> {
        Ok(match kind {
            IndicatorKind::Dsm => None,
            IndicatorKind::Fdsm => Some(self.decomp(kind)?.s.iter().map(|s| s.sqrt()).collect()),
            IndicatorKind::Tdsm => {
                let d = self.decomp(kind)?;
                let poly = self
                    .poly
                    .as_ref()
                    .ok_or_else(|| invalid("tdsm needs a fitted filter polynomial"))?;
                check_poly(d, poly)?;
                Some(d.s.iter().map(|&s| poly.eval(s).powi(2)).collect())
            }
            IndicatorKind::Fm => Some(fm_weights(self.decomp(kind)?, self.fm_cutoff)?),
        })
    }

    /// Single-point evaluation through the public per-indicator functions.
    pub fn evaluate_point(&self, kind: IndicatorKind, z: &Point) -> Result<f64> {
        let phi = phi_vector(z, self.farfield.context(), self.farfield.dirs())?;
        match kind {
            IndicatorKind::Dsm => w_dsm(self.farfield.entries(), &phi),
            IndicatorKind::Fdsm => w_fdsm(self.decomp(kind)?, &phi),
            IndicatorKind::Tdsm => {
                let poly = self
                    .poly
                    .as_ref()
                    .ok_or_else(|| invalid("tdsm needs a fitted filter polynomial"))?;
                w_tdsm(self.decomp(kind)?, poly, &phi)
            }
            IndicatorKind::Fm => fm_picard(self.decomp(kind)?, &phi, self.fm_cutoff),
        }
    }
}
