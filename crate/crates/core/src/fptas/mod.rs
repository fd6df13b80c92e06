//! Menu transformations and the dynamic-programming approximation scheme for
//! revenue.

pub mod dp;
pub mod grids;
pub mod linear;
pub mod transform;

pub use dp::{
    dp_solve, dp_solve_with, solve_on_grid, Diagnostics, DpOptions, DpSolution, DpStrategy, DpTables, ItemLimit,
    TableAxis,
};
pub use grids::{floor_to_step, grid_quality, quality_floor, Grids};
pub use linear::{is_linear_in_quality, linear_single_item};
pub use transform::{discretize_menu, monotone_prune, sparsify};
