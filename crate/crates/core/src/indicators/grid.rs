use std::io::{BufRead, Write};

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{IndicatorData, IndicatorKind};
use crate::error::{degenerate, invalid, DsmError, Result};
use crate::geometry::{dot, Dimension, Point};

/// Coordinate plane holding a sampling grid; `offset` fixes the remaining
/// coordinate in 3D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "plane", rename_all = "lowercase")]
pub enum Plane {
    Xy { offset: f64 },
    Yz { offset: f64 },
    Xz { offset: f64 },
}

impl Default for Plane {
    fn default() -> Self {
        Plane::Xy { offset: 0.0 }
    }
}

impl Plane {
    fn embed(&self, u: f64, v: f64) -> Point {
        match *self {
            Plane::Xy { offset } => [u, v, offset],
            Plane::Yz { offset } => [offset, u, v],
            Plane::Xz { offset } => [u, offset, v],
        }
    }

    pub fn tag(&self) -> String {
        match *self {
            Plane::Xy { offset } => format!("xy:{offset}"),
            Plane::Yz { offset } => format!("yz:{offset}"),
            Plane::Xz { offset } => format!("xz:{offset}"),
        }
    }

    pub fn parse_tag(s: &str) -> Result<Self> {
        let (name, off) = s.split_once(':').unwrap_or((s, "0"));
        let offset: f64 = off
            .parse()
            .map_err(|_| invalid(format!("bad plane offset in '{s}'")))?;
        match name {
            "xy" => Ok(Plane::Xy { offset }),
            "yz" => Ok(Plane::Yz { offset }),
            "xz" => Ok(Plane::Xz { offset }),
            _ => Err(invalid(format!("unknown plane '{name}'"))),
        }
    }
}

/// Rectangle [x_lo, x_hi]×[y_lo, y_hi] sampled at nx×ny nodes, endpoints
/// included. In 3D the rectangle lives in `plane`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub plane: Plane,
}

impl SamplingGrid {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::in_plane(x_lo, x_hi, y_lo, y_hi, nx, ny, Plane::default())
    }

    pub fn in_plane(
        x_lo: f64,
        x_hi: f64,
        y_lo: f64,
        y_hi: f64,
        nx: usize,
        ny: usize,
        plane: Plane,
    ) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(invalid(format!("grid needs at least 2x2 nodes, got {nx}x{ny}")));
        }
        if !(x_hi > x_lo) || !(y_hi > y_lo) || ![x_lo, x_hi, y_lo, y_hi].iter().all(|v| v.is_finite()) {
            return Err(invalid("grid bounds are degenerate"));
        }
        Ok(Self {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
            nx,
            ny,
            plane,
        })
    }

    /// Parses `"x_lo,x_hi,y_lo,y_hi,nx,ny"`.
    pub fn parse(spec: &str, plane: Plane) -> Result<Self> {
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        if parts.len() != 6 {
            return Err(invalid(format!(
                "grid spec must be x_lo,x_hi,y_lo,y_hi,nx,ny; got '{spec}'"
            )));
        }
        let f = |s: &str| s.parse::<f64>().map_err(|_| invalid(format!("bad number '{s}' in grid spec")));
        let u = |s: &str| s.parse::<usize>().map_err(|_| invalid(format!("bad count '{s}' in grid spec")));
        Self::in_plane(
            f(parts[0])?,
            f(parts[1])?,
            f(parts[2])?,
            f(parts[3])?,
            u(parts[4])?,
            u(parts[5])?,
            plane,
        )
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_hi - self.y_lo) / (self.ny - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// In-plane coordinates of node (a, b).
    pub fn coords(&self, a: usize, b: usize) -> [f64; 2] {
        [
            self.x_lo + a as f64 * self.dx(),
            self.y_lo + b as f64 * self.dy(),
        ]
    }

    /// Node (a, b) as a point in space.
    pub fn point(&self, a: usize, b: usize) -> Point {
        let [u, v] = self.coords(a, b);
        self.plane.embed(u, v)
    }

    fn check_dimension(&self, dim: Dimension) -> Result<()> {
        match (dim, self.plane) {
            (Dimension::Two, Plane::Xy { offset: 0.0 }) => Ok(()),
            (Dimension::Two, _) => Err(invalid("planar data needs the xy plane with zero offset")),
            (Dimension::Three, _) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum GridState {
    Raw,
    Normalized,
    Sharpened { p: f64 },
}

impl GridState {
    fn tag(&self) -> String {
        match self {
            GridState::Raw => "raw".into(),
            GridState::Normalized => "normalized".into(),
            GridState::Sharpened { p } => format!("sharpened(p={p})"),
        }
    }

    fn parse_tag(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(GridState::Raw),
            "normalized" => Ok(GridState::Normalized),
            _ => {
                let p = s
                    .strip_prefix("sharpened(p=")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|p| p.parse().ok())
                    .ok_or_else(|| invalid(format!("unknown grid state '{s}'")))?;
                Ok(GridState::Sharpened { p })
            }
        }
    }

    pub fn is_normalized(&self) -> bool {
        !matches!(self, GridState::Raw)
    }
}

/// Indicator values on a grid, stored row-major: `values[b * nx + a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorGrid {
    pub kind: IndicatorKind,
    pub grid: SamplingGrid,
    pub values: Vec<f64>,
    pub state: GridState,
}

impl IndicatorGrid {
    pub fn value(&self, a: usize, b: usize) -> f64 {
        self.values[b * self.grid.nx + a]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Node of the largest value; ties go to the first in row-major order.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        (best % self.grid.nx, best / self.grid.nx)
    }

    pub fn argmax_point(&self) -> Point {
        let (a, b) = self.argmax();
        self.grid.point(a, b)
    }

    pub fn normalize(&self) -> Result<IndicatorGrid> {
        let max = self.max();
        if !(max > 0.0) {
            return Err(degenerate("cannot normalize an all-zero indicator grid"));
        }
        Ok(IndicatorGrid {
            values: self.values.iter().map(|v| v / max).collect(),
            state: GridState::Normalized,
            ..self.clone()
        })
    }

    pub fn sharpen(&self, p: f64) -> Result<IndicatorGrid> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(invalid(format!("sharpening power must be >= 1, got {p}")));
        }
        let total = match self.state {
            GridState::Raw => return Err(invalid("sharpen expects a normalized grid")),
            GridState::Normalized => p,
            GridState::Sharpened { p: q } => p * q,
        };
        let state = if total == 1.0 {
            GridState::Normalized
        } else {
            GridState::Sharpened { p: total }
        };
        Ok(IndicatorGrid {
            values: self.values.iter().map(|v| v.powf(p)).collect(),
            state,
            ..self.clone()
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let g = &self.grid;
        writeln!(w, "# kind={}", self.kind)?;
        writeln!(w, "# bounds={},{},{},{}", g.x_lo, g.x_hi, g.y_lo, g.y_hi)?;
        writeln!(w, "# nx={} ny={}", g.nx, g.ny)?;
        writeln!(w, "# state={}", self.state.tag())?;
        if g.plane != Plane::default() {
            writeln!(w, "# plane={}", g.plane.tag())?;
        }
        for row in self.values.chunks(g.nx) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<IndicatorGrid> {
        let bad = |m: String| DsmError::Format(m);
        let mut kind = None;
        let mut bounds = None;
        let mut dims = None;
        let mut state = GridState::Raw;
        let mut plane = Plane::default();
        let mut values = Vec::new();
        for line in r.lines() {
            let line = line.map_err(|e| bad(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                let h = h.trim();
                if let Some(k) = h.strip_prefix("kind=") {
                    kind = Some(k.parse::<IndicatorKind>()?);
                } else if let Some(b) = h.strip_prefix("bounds=") {
                    let v: std::result::Result<Vec<f64>, _> = b.split(',').map(|x| x.parse()).collect();
                    bounds = Some(v.map_err(|_| bad(format!("bad bounds '{b}'")))?);
                } else if let Some(s) = h.strip_prefix("state=") {
                    state = GridState::parse_tag(s)?;
                } else if let Some(p) = h.strip_prefix("plane=") {
                    plane = Plane::parse_tag(p)?;
                } else if h.starts_with("nx=") {
                    let mut nx = None;
                    let mut ny = None;
                    for part in h.split_whitespace() {
                        if let Some(v) = part.strip_prefix("nx=") {
                            nx = v.parse::<usize>().ok();
                        } else if let Some(v) = part.strip_prefix("ny=") {
                            ny = v.parse::<usize>().ok();
                        }
                    }
                    dims = nx.zip(ny);
                }
                continue;
            }
            for x in line.split(',') {
                values.push(x.trim().parse::<f64>().map_err(|_| bad(format!("bad value '{x}'")))?);
            }
        }
        let kind = kind.ok_or_else(|| bad("missing '# kind=' header".into()))?;
        let b = bounds.ok_or_else(|| bad("missing '# bounds=' header".into()))?;
        let (nx, ny) = dims.ok_or_else(|| bad("missing '# nx= ny=' header".into()))?;
        if b.len() != 4 {
            return Err(bad("bounds need four numbers".into()));
        }
        let grid = SamplingGrid::in_plane(b[0], b[1], b[2], b[3], nx, ny, plane)?;
        if values.len() != grid.len() {
            return Err(bad(format!("expected {} values, found {}", grid.len(), values.len())));
        }
        Ok(IndicatorGrid {
            kind,
            grid,
            values,
            state,
        })
    }

    /// Plain PGM (P2), 255 = grid maximum; the top image row is y_hi.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let g = &self.grid;
        let max = self.max();
        writeln!(w, "P2")?;
        writeln!(w, "{} {}", g.nx, g.ny)?;
        writeln!(w, "255")?;
        for b in (0..g.ny).rev() {
            let row: Vec<String> = (0..g.nx)
                .map(|a| {
                    let v = if max > 0.0 { self.value(a, b) / max } else { 0.0 };
                    ((v.clamp(0.0, 1.0) * 255.0).round() as u8).to_string()
                })
                .collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Raw indicator values at every grid node, evaluated in parallel.
pub fn evaluate_grid(
    kind: IndicatorKind,
    data: &IndicatorData,
    grid: &SamplingGrid,
) -> Result<IndicatorGrid> {
    let ff = &data.farfield;
    grid.check_dimension(ff.context().dimension())?;
    let weights = data.spectral_weights(kind)?;
    let k = ff.context().k();
    let dirs = ff.dirs().directions();
    let m = dirs.len();
    let f = ff.entries();
    let v_adj = data.decomp.as_ref().map(|d| d.v.adjoint());

    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let z = grid.point(idx % grid.nx, idx / grid.nx);
            let phi = DVector::from_iterator(
                m,
                dirs.iter().map(|d| Complex64::from_polar(1.0, -k * dot(d, &z))),
            );
            match (&weights, &v_adj) {
                (Some(w), Some(vh)) => {
                    let proj = vh * &phi;
                    w.iter().zip(proj.iter()).map(|(w, p)| w * p.norm_sqr()).sum()
                }
                _ => phi.dotc(&(f * &phi)).norm(),
            }
        })
        .collect();

    Ok(IndicatorGrid {
        kind,
        grid: *grid,
        values,
        state: GridState::Raw,
    })
}
