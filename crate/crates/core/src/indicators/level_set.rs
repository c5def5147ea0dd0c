use super::IndicatorGrid;
use crate::error::{degenerate, invalid, Result};
use crate::geometry::Scatterer;

/// Superlevel set {value ≥ τ} and the grid cells its boundary crosses.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    pub tau: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major like the grid values.
    pub mask: Vec<bool>,
    /// Centers of cells whose four corners are not all on the same side.
    pub contour: Vec<[f64; 2]>,
}

impl LevelSet {
    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.mask[b * self.nx + a]
    }

    pub fn area_nodes(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

pub fn level_set(grid: &IndicatorGrid, tau: f64) -> Result<LevelSet> {
    if !grid.state.is_normalized() {
        return Err(invalid("level sets are taken on normalized grids"));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(invalid(format!("level must lie in (0, 1), got {tau}")));
    }
    let g = &grid.grid;
    let mask: Vec<bool> = grid.values.iter().map(|&v| v >= tau).collect();
    let at = |a: usize, b: usize| mask[b * g.nx + a];
    let mut contour = Vec::new();
    for b in 0..g.ny - 1 {
        for a in 0..g.nx - 1 {
            let corners = [at(a, b), at(a + 1, b), at(a, b + 1), at(a + 1, b + 1)];
            if corners.iter().any(|&c| c) && !corners.iter().all(|&c| c) {
                let [x, y] = g.coords(a, b);
                contour.push([x + 0.5 * g.dx(), y + 0.5 * g.dy()]);
            }
        }
    }
    Ok(LevelSet {
        tau,
        nx: g.nx,
        ny: g.ny,
        mask,
        contour,
    })
}

const BOUNDARY_SAMPLES: usize = 720;

/// Symmetric Hausdorff distance between contour points and the true
/// boundary sampled at 720 angles.
pub fn hausdorff_to_truth(contour: &[[f64; 2]], scatterer: &Scatterer) -> Result<f64> {
    if contour.is_empty() {
        return Err(degenerate("empty contour"));
    }
    if scatterer.dimension() != crate::geometry::Dimension::Two {
        return Err(invalid("boundary comparison is only available for planar scatterers"));
    }
    let truth = scatterer.boundary_points(BOUNDARY_SAMPLES);
    Ok(directed(contour, &truth).max(directed(&truth, contour)))
}

fn directed(from: &[[f64; 2]], to: &[[f64; 2]]) -> f64 {
    from.iter()
        .map(|p| {
            to.iter()
                .map(|q| (p[0] - q[0]).hypot(p[1] - q[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}
