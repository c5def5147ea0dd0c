//! Scatterer geometries, measurement directions and the Born forward model.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel;
use crate::error::{invalid, DsmError, Result};
use crate::farfield::{FarFieldMatrix, Provenance};
use crate::quadrature::GaussLegendre;

/// A point or direction. Planar quantities keep the third coordinate at zero.
pub type Point = [f64; 3];

pub const DEFAULT_QUAD_LEVEL: usize = 48;

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Dimension {
    Two,
    Three,
}

impl Dimension {
    pub fn as_usize(self) -> usize {
        match self {
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }
}

impl TryFrom<u8> for Dimension {
    type Error = DsmError;

    fn try_from(d: u8) -> Result<Self> {
        match d {
            2 => Ok(Dimension::Two),
            3 => Ok(Dimension::Three),
            other => Err(invalid(format!("dimension must be 2 or 3, got {other}"))),
        }
    }
}

impl From<Dimension> for u8 {
    fn from(d: Dimension) -> u8 {
        d.as_usize() as u8
    }
}

/// Wavenumber and spatial dimension of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveContext {
    dimension: Dimension,
    k: f64,
}

impl WaveContext {
    pub fn new(dimension: Dimension, k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(invalid(format!("wavenumber must be positive, got {k}")));
        }
        Ok(Self { dimension, k })
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// |γ|² of the far-field normalization: 1/(8πk) in the plane, 1/(16π²) in space.
    pub fn gamma_sq(&self) -> f64 {
        match self.dimension {
            Dimension::Two => 1.0 / (8.0 * PI * self.k),
            Dimension::Three => 1.0 / (16.0 * PI * PI),
        }
    }
}

/// Incidence/observation directions shared by rows and columns of the
/// far-field matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    dimension: Dimension,
    directions: Vec<Point>,
}

impl DirectionSet {
    pub fn new(dimension: Dimension, directions: Vec<Point>) -> Result<Self> {
        if directions.len() < 2 {
            return Err(invalid(format!(
                "need at least 2 directions, got {}",
                directions.len()
            )));
        }
        for (j, d) in directions.iter().enumerate() {
            if (norm(d) - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("direction {j} is not a unit vector")));
            }
            if dimension == Dimension::Two && d[2] != 0.0 {
                return Err(invalid(format!("direction {j} leaves the plane")));
            }
        }
        Ok(Self {
            dimension,
            directions,
        })
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Point] {
        &self.directions
    }
}

/// Uniform angles on the circle, or a Fibonacci lattice on the sphere.
pub fn make_directions(dimension: Dimension, m: usize) -> Result<DirectionSet> {
    if m < 2 {
        return Err(invalid(format!("need at least 2 directions, got {m}")));
    }
    let directions = match dimension {
        Dimension::Two => (0..m)
            .map(|j| {
                let theta = 2.0 * PI * j as f64 / m as f64;
                [theta.cos(), theta.sin(), 0.0]
            })
            .collect(),
        Dimension::Three => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..m)
                .map(|j| {
                    let z = 1.0 - (2.0 * j as f64 + 1.0) / m as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * j as f64;
                    let v = [r * phi.cos(), r * phi.sin(), z];
                    let len = norm(&v);
                    [v[0] / len, v[1] / len, v[2] / len]
                })
                .collect()
        }
    };
    Ok(DirectionSet {
        dimension,
        directions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Disk { radius: f64 },
    Ball { radius: f64 },
    Pear,
    Star,
    Peanut,
}

impl Shape {
    pub fn dimension(&self) -> Dimension {
        match self {
            Shape::Ball { .. } => Dimension::Three,
            _ => Dimension::Two,
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Disk { radius } => write!(f, "disk:{radius}"),
            Shape::Ball { radius } => write!(f, "ball:{radius}"),
            Shape::Pear => f.write_str("pear"),
            Shape::Star => f.write_str("star"),
            Shape::Peanut => f.write_str("peanut"),
        }
    }
}

impl FromStr for Shape {
    type Err = DsmError;

    /// Accepts `pear`, `star`, `peanut`, `disk:R` and `ball:R`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let radius = |a: Option<&str>| -> Result<f64> {
            let r: f64 = a
                .ok_or_else(|| invalid(format!("shape '{name}' needs a radius, e.g. {name}:0.4")))?
                .parse()
                .map_err(|_| invalid(format!("bad radius in shape '{s}'")))?;
            if !(r > 0.0) {
                return Err(invalid(format!("radius must be positive in '{s}'")));
            }
            Ok(r)
        };
        match name.to_ascii_lowercase().as_str() {
            "pear" => Ok(Shape::Pear),
            "star" => Ok(Shape::Star),
            "peanut" | "peanut2d" => Ok(Shape::Peanut),
            "disk" => Ok(Shape::Disk {
                radius: radius(arg)?,
            }),
            "ball" => Ok(Shape::Ball {
                radius: radius(arg)?,
            }),
            _ => Err(invalid(format!("unknown shape '{s}'"))),
        }
    }
}

/// Boundary radius r(θ) of a planar star-shaped domain.
pub fn boundary_radius(shape: &Shape, theta: f64) -> f64 {
    match *shape {
        Shape::Disk { radius } | Shape::Ball { radius } => radius,
        Shape::Pear => (2.0 + 0.3 * (3.0 * theta).cos()) / 5.0,
        Shape::Star => (2.0 + 0.3 * (5.0 * theta).cos()) / 5.0,
        Shape::Peanut => {
            let (s, c) = theta.sin_cos();
            0.4 * (0.5 * s * s + 0.1 * c * c).sqrt()
        }
    }
}

/// Penetrable scatterer with constant refractive index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub shape: Shape,
    pub n: f64,
    #[serde(default)]
    pub center: Point,
}

impl Scatterer {
    pub fn new(shape: Shape, n: f64) -> Self {
        Self {
            shape,
            n,
            center: [0.0; 3],
        }
    }

    pub fn translated(mut self, center: Point) -> Self {
        self.center = center;
        self
    }

    pub fn contrast(&self) -> f64 {
        self.n - 1.0
    }

    pub fn dimension(&self) -> Dimension {
        self.shape.dimension()
    }

    /// Strict interior test. Planar shapes ignore the third coordinate.
    pub fn contains(&self, p: &Point) -> bool {
        let d = sub(p, &self.center);
        match self.shape {
            Shape::Ball { radius } => norm(&d) < radius,
            _ => {
                let r = d[0].hypot(d[1]);
                r < boundary_radius(&self.shape, d[1].atan2(d[0]))
            }
        }
    }

    /// `count` samples of a planar boundary at uniform angles.
    pub fn boundary_points(&self, count: usize) -> Vec<[f64; 2]> {
        (0..count)
            .map(|i| {
                let theta = 2.0 * PI * i as f64 / count as f64;
                let r = boundary_radius(&self.shape, theta);
                [
                    self.center[0] + r * theta.cos(),
                    self.center[1] + r * theta.sin(),
                ]
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !self.n.is_finite() {
            return Err(invalid("refractive index must be finite"));
        }
        match self.shape {
            Shape::Disk { radius } | Shape::Ball { radius } if !(radius > 0.0) => {
                Err(invalid(format!("radius must be positive, got {radius}")))
            }
            _ => Ok(()),
        }
    }
}

/// Quadrature nodes `(w, weight)` covering the scatterer, with the
/// contrast left out.
struct VolumeRule {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl VolumeRule {
    fn planar(shape: &Shape, quad_level: usize) -> Self {
        let radial = GaussLegendre::new(quad_level);
        let angular = GaussLegendre::new(2 * quad_level);
        let mut points = Vec::with_capacity(radial.len() * angular.len());
        let mut weights = Vec::with_capacity(points.capacity());
        for (theta, w_theta) in angular.on_interval(0.0, 2.0 * PI) {
            let rmax = boundary_radius(shape, theta);
            let (s, c) = theta.sin_cos();
            for (r, w_r) in radial.on_interval(0.0, rmax) {
                points.push([r * c, r * s, 0.0]);
                weights.push(w_theta * w_r * r);
            }
        }
        Self { points, weights }
    }

    fn integrate_phase(&self, k: f64, q: &Point) -> Complex64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(w, &wt)| Complex64::from_polar(wt, k * dot(w, q)))
            .sum()
    }
}

/// Axisymmetric rule for ∫_{|w|<R} e^{i k w·q} dw, which only depends on |q|.
struct BallRule {
    radial: Vec<(f64, f64)>,
    polar: Vec<(f64, f64)>,
}

impl BallRule {
    fn new(radius: f64, quad_level: usize) -> Self {
        let radial = GaussLegendre::new(quad_level)
            .on_interval(0.0, radius)
            .collect();
        let polar = GaussLegendre::new(2 * quad_level)
            .on_interval(-1.0, 1.0)
            .collect();
        Self { radial, polar }
    }

    fn integrate_phase(&self, k: f64, q: &Point) -> Complex64 {
        let kq = k * norm(q);
        let mut acc = Complex64::new(0.0, 0.0);
        for &(r, wr) in &self.radial {
            for &(t, wt) in &self.polar {
                acc += Complex64::from_polar(wr * wt * r * r, kq * r * t);
            }
        }
        acc * (2.0 * PI)
    }
}

enum Rule {
    Planar(VolumeRule),
    Ball(BallRule),
}

impl Rule {
    fn for_scatterer(scatterer: &Scatterer, ctx: &WaveContext, quad_level: usize) -> Result<Self> {
        scatterer.validate()?;
        if quad_level < 2 {
            return Err(invalid("quad_level must be at least 2"));
        }
        if scatterer.dimension() != ctx.dimension() {
            return Err(invalid(format!(
                "shape {} is not available in {}D",
                scatterer.shape,
                ctx.dimension().as_usize()
            )));
        }
        Ok(match scatterer.shape {
            Shape::Ball { radius } => Rule::Ball(BallRule::new(radius, quad_level)),
            ref s => Rule::Planar(VolumeRule::planar(s, quad_level)),
        })
    }

    fn entry(&self, scatterer: &Scatterer, k: f64, obs: &Point, inc: &Point) -> Complex64 {
        let q = sub(inc, obs);
        let integral = match self {
            Rule::Planar(r) => r.integrate_phase(k, &q),
            Rule::Ball(r) => r.integrate_phase(k, &q),
        };
        let shift = Complex64::from_polar(1.0, k * dot(&scatterer.center, &q));
        integral * shift * (k * k * scatterer.contrast())
    }
}

/// Single Born far-field sample u∞(x̂, ŷ) ≈ k²(n−1)∫_D e^{ikw·(ŷ−x̂)} dw.
pub fn born_entry(
    scatterer: &Scatterer,
    ctx: &WaveContext,
    obs: &Point,
    inc: &Point,
    quad_level: usize,
) -> Result<Complex64> {
    let rule = Rule::for_scatterer(scatterer, ctx, quad_level)?;
    Ok(rule.entry(scatterer, ctx.k(), obs, inc))
}

/// Born far-field matrix; row i is observation x̂_i, column j incidence ŷ_j.
pub fn born_farfield(
    scatterer: &Scatterer,
    ctx: &WaveContext,
    dirs: &DirectionSet,
    quad_level: usize,
) -> Result<FarFieldMatrix> {
    if dirs.dimension() != ctx.dimension() {
        return Err(invalid("direction set and wave context disagree on dimension"));
    }
    let rule = Rule::for_scatterer(scatterer, ctx, quad_level)?;
    let m = dirs.len();
    let d = dirs.directions();
    let k = ctx.k();
    let entries: Vec<Complex64> = (0..m * m)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / m, idx % m);
            rule.entry(scatterer, k, &d[i], &d[j])
        })
        .collect();
    let matrix = DMatrix::from_row_slice(m, m, &entries);
    FarFieldMatrix::new(*ctx, dirs.clone(), matrix, Provenance::Clean)
}

/// Closed-form Born far field of a centered disk (2D) or ball (3D).
pub fn analytic_farfield(
    radius: f64,
    n: f64,
    ctx: &WaveContext,
    dirs: &DirectionSet,
) -> Result<FarFieldMatrix> {
    if !(radius > 0.0) {
        return Err(invalid(format!("radius must be positive, got {radius}")));
    }
    if dirs.dimension() != ctx.dimension() {
        return Err(invalid("direction set and wave context disagree on dimension"));
    }
    let k = ctx.k();
    let scale = k * k * (n - 1.0);
    let m = dirs.len();
    let d = dirs.directions();
    let matrix = DMatrix::from_fn(m, m, |i, j| {
        let q = norm(&sub(&d[j], &d[i]));
        let rho = k * q * radius;
        let v = match ctx.dimension() {
            Dimension::Two => {
                if q == 0.0 {
                    PI * radius * radius
                } else if rho < 1e-4 {
                    2.0 * PI * radius * radius * (0.5 - rho * rho / 16.0)
                } else {
                    2.0 * PI * radius / (k * q) * bessel::j1(rho)
                }
            }
            Dimension::Three => {
                let r3 = radius.powi(3);
                if q == 0.0 {
                    4.0 / 3.0 * PI * r3
                } else if rho < 1e-2 {
                    let r2 = rho * rho;
                    4.0 * PI * r3 * (1.0 / 3.0 - r2 / 30.0 + r2 * r2 / 840.0)
                } else {
                    4.0 * PI * (rho.sin() - rho * rho.cos()) / (k * q).powi(3)
                }
            }
        };
        Complex64::new(scale * v, 0.0)
    });
    FarFieldMatrix::new(*ctx, dirs.clone(), matrix, Provenance::Clean)
}

/// Herglotz wave function of φ_z evaluated at `x` by quadrature over the
/// unit circle (trapezoid, `m_quad` nodes) or sphere (Gauss–Legendre in
/// cos θ with `m_quad/2` nodes times trapezoid in φ with `m_quad` nodes).
pub fn herglotz_phi(z: &Point, x: &Point, ctx: &WaveContext, m_quad: usize) -> Result<Complex64> {
    if m_quad < 8 {
        return Err(invalid(format!("m_quad must be at least 8, got {m_quad}")));
    }
    let k = ctx.k();
    let d = sub(z, x);
    let h = 2.0 * PI / m_quad as f64;
    Ok(match ctx.dimension() {
        Dimension::Two => (0..m_quad)
            .map(|j| {
                let t = j as f64 * h;
                Complex64::from_polar(h, -k * (d[0] * t.cos() + d[1] * t.sin()))
            })
            .sum(),
        Dimension::Three => {
            let polar = GaussLegendre::new(m_quad / 2);
            let mut acc = Complex64::new(0.0, 0.0);
            for (ct, wt) in polar.on_interval(-1.0, 1.0) {
                let st = (1.0 - ct * ct).sqrt();
                for j in 0..m_quad {
                    let phi = j as f64 * h;
                    let y = [st * phi.cos(), st * phi.sin(), ct];
                    acc += Complex64::from_polar(wt * h, -k * dot(&d, &y));
                }
            }
            acc
        }
    })
}
