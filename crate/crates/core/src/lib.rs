//! Reconstruction of penetrable scatterers from far-field data with three
//! direct sampling indicators:
//!
//! * `dsm`:  |φ_z* F φ_z|
//! * `fdsm`: Σ √s_j |φ_z* v_j|², the quadratic form of |F|^{1/2}
//! * `tdsm`: Σ P²(s_j) |φ_z* v_j|², with P a zero-rooted cubic fitted to
//!   the Tikhonov filter √t/(α+t)
//!
//! plus the truncated Picard sum of the factorization method for
//! comparison. Far-field data come from the Born approximation
//! ([`geometry`]) and are corrupted with multiplicative noise ([`noise`]).
//! [`verify`] checks the inequalities tying the indicators together on
//! synthetic normal operators with a known coercivity constant.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod error;
pub mod farfield;
pub mod filter;
pub mod geometry;
pub mod indicators;
pub mod noise;
pub mod quadrature;
pub mod spectral;
pub mod verify;

pub use error::{DsmError, Result};
pub use farfield::{CMatrix, FarFieldMatrix, Provenance};
pub use filter::{FilterPolynomial, FitConfig};
pub use geometry::{Dimension, DirectionSet, Point, Scatterer, Shape, WaveContext};
pub use indicators::{IndicatorData, IndicatorGrid, IndicatorKind, SamplingGrid};
pub use spectral::SpectralDecomposition;
