use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const DEFAULT_X_MIN: f64 = 1e-5;
pub const DEFAULT_X_MAX: f64 = 40.0;
pub const DEFAULT_N: usize = 1024;
pub const MIN_NODES: usize = 16;

/// Log-uniform discretisation of `(0, ∞)` between `x_min` and `x_max`.
///
/// Cheap to clone; clones share the node arrays.
#[derive(Clone)]
pub struct Grid(Arc<GridData>);

struct GridData {
    nodes: Vec<f64>,
    log_nodes: Vec<f64>,
    log_min: f64,
    log_step: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min > 0.0) || !x_min.is_finite() {
            return Err(Error::InvalidGrid(format!("x_min must be positive, got {x_min}")));
        }
        if !(x_max > x_min) || !x_max.is_finite() {
            return Err(Error::InvalidGrid(format!("x_max must exceed x_min, got x_min={x_min}, x_max={x_max}")));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!("need at least {MIN_NODES} nodes, got {n}")));
        }
        let log_min = x_min.ln();
        let log_max = x_max.ln();
        let log_step = (log_max - log_min) / (n - 1) as f64;
        let log_nodes: Vec<f64> = (0..n).map(|k| log_min + k as f64 * log_step).collect();
        let mut nodes: Vec<f64> = log_nodes.iter().map(|u| u.exp()).collect();
        // pin the end points exactly
        nodes[0] = x_min;
        nodes[n - 1] = x_max;
        Ok(Grid(Arc::new(GridData { nodes, log_nodes, log_min, log_step })))
    }

    /// The default discretisation: `x ∈ [1e-5, 40]` with 1024 nodes.
    pub fn default_grid() -> Self {
        Self::new(DEFAULT_X_MIN, DEFAULT_X_MAX, DEFAULT_N).expect("default grid is valid")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.0.nodes
    }

    pub fn log_nodes(&self) -> &[f64] {
        &self.0.log_nodes
    }

    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        self.0.nodes[k]
    }

    pub fn len(&self) -> usize {
        self.0.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_min(&self) -> f64 {
        self.0.nodes[0]
    }

    pub fn x_max(&self) -> f64 {
        self.0.nodes[self.len() - 1]
    }

    /// Constant spacing in `u = ln x`.
    #[inline]
    pub fn log_step(&self) -> f64 {
        self.0.log_step
    }

    /// Position of `x` in units of the log step, measured from node 0.
    #[inline]
    pub fn log_position(&self, x: f64) -> f64 {
        (x.ln() - self.0.log_min) / self.0.log_step
    }

    /// Index of the last node `≤ x` (clamped to the grid).
    pub fn floor_index(&self, x: f64) -> usize {
        let t = self.log_position(x);
        if t <= 0.0 {
            return 0;
        }
        let mut k = (t.floor() as usize).min(self.len() - 1);
        // guard against rounding in ln
        while k + 1 < self.len() && self.node(k + 1) <= x {
            k += 1;
        }
        while k > 0 && self.node(k) > x {
            k -= 1;
        }
        k
    }

    /// Index of the node closest to `x` in log distance.
    pub fn nearest_index(&self, x: f64) -> usize {
        let t = self.log_position(x).round();
        t.clamp(0.0, (self.len() - 1) as f64) as usize
    }

    /// Same discretisation parameters (not necessarily the same allocation).
    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.len() == other.len() && self.x_min() == other.x_min() && self.x_max() == other.x_max())
    }

    /// Grid with twice as many cells over the same range.
    pub fn refined(&self) -> Result<Grid> {
        Grid::new(self.x_min(), self.x_max(), 2 * (self.len() - 1) + 1)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("x_min", &self.x_min())
            .field("x_max", &self.x_max())
            .field("n", &self.len())
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

/// Lagrange weights for the four stencil points `0, 1, 2, 3` at local coordinate `t`.
#[inline]
pub(crate) fn cubic_weights(t: f64) -> [f64; 4] {
    let a = t;
    let b = t - 1.0;
    let c = t - 2.0;
    let d = t - 3.0;
    [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_spacing_matches_definition() {
        let g = Grid::new(1e-5, 40.0, 1024).unwrap();
        for k in [0usize, 1, 17, 511, 1000, 1023] {
            let expected = 1e-5 * (40.0f64 / 1e-5).powf(k as f64 / 1023.0);
            assert!((g.node(k) - expected).abs() <= 1e-12 * expected, "k={k}");
        }
        let ratio = g.node(1) / g.node(0);
        for k in 1..g.len() - 1 {
            assert!((g.node(k + 1) / g.node(k) - ratio).abs() < 1e-12);
        }
    }

    #[test]
    fn small_grid_end_points() {
        let g = Grid::new(0.5, 2.0, 16).unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g.node(0), 0.5);
        assert_eq!(g.node(15), 2.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(1.0, 0.5, 100).is_err());
        assert!(Grid::new(0.0, 2.0, 100).is_err());
        assert!(Grid::new(-1.0, 2.0, 100).is_err());
        assert!(Grid::new(0.1, 2.0, 15).is_err());
    }

    #[test]
    fn floor_index_brackets() {
        let g = Grid::new(0.01, 10.0, 64).unwrap();
        for &x in &[0.01, 0.0123, 1.0, 3.7, 9.99, 10.0] {
            let k = g.floor_index(x);
            assert!(g.node(k) <= x);
            if k + 1 < g.len() {
                assert!(g.node(k + 1) > x);
            }
        }
    }

    #[test]
    fn cubic_weights_reproduce_cubics() {
        for &t in &[0.0, 0.3, 1.0, 1.7, 2.5] {
            let w = cubic_weights(t);
            let p = |s: f64| 1.0 - 2.0 * s + 0.5 * s * s - 0.1 * s * s * s;
            let approx: f64 = (0..4).map(|m| w[m] * p(m as f64)).sum();
            assert!((approx - p(t)).abs() < 1e-13);
        }
    }
}
