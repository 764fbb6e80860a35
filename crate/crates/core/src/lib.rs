//! Self-similar profiles of Smoluchowski's coagulation equation for kernels
//! `K = 2 + εW` that perturb the constant kernel.
//!
//! The crate discretises `(0, ∞)` on a logarithmic grid and provides the
//! weighted `L¹` machinery, the bilinear coagulation operators, the
//! linearisation around `e^{-x}` together with its explicit inverse, a
//! fixed-point profile solver and the boundary-layer functionals.
//!
//! ```no_run
//! use selfsim::prelude::*;
//!
//! let grid = Grid::default_grid();
//! let kernel = KernelSpec::power(0.05, 0.5, 1.0).unwrap();
//! let init = GridFunction::from_fn(&grid, |x| (-x).exp()).unwrap();
//! let sol = solve_profile(&kernel, &SolverOptions::default(), &init).unwrap();
//! println!("mass {} after {} iterations", sol.mass, sol.iterations);
//! ```

// `!(x > 0.0)` style guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary_layer;
pub mod cli;
pub mod coag;
pub mod error;
pub mod kernels;
pub mod linop;
pub mod profile;
pub mod space;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::boundary_layer::{bl_residual, compute_bl_data, BoundaryLayerData};
    pub use crate::coag::{b2_apply, bw_apply, coag_rhs};
    pub use crate::kernels::{KernelSpec, Perturbation};
    pub use crate::linop::{desing_laplace, inverse_apply, inverse_pre_apply, linearized_apply, m1, m2_eval};
    pub use crate::profile::{
        diagnostics, selfsim_residual, solve_profile, ProfileSolution, Renormalization, SolverOptions,
    };
    pub use crate::space::{first_moment, weighted_norm, Grid, GridFunction, WeightParams};
    pub use crate::{Error, Result};
}
