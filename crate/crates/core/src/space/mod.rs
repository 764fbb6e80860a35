//! Discretisation of `(0, ∞)`: log grid, grid functions with tail models,
//! two-sided power weights, quadrature and weighted `L¹` norms.

mod function;
mod grid;
pub mod quadrature;
mod weight;

pub use function::{GridFunction, LeftTail};
pub(crate) use grid::cubic_weights as lagrange4;
pub use grid::{Grid, DEFAULT_N, DEFAULT_X_MAX, DEFAULT_X_MIN, MIN_NODES};
pub use quadrature::{
    first_moment, integrate, integrate_weighted, moment, power_product, project_zero_moment, weighted_norm, Cumulative,
    HalfSplit, SplitPoint,
};
pub use weight::{default_beta, WeightParams};
