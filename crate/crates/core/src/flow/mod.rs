//! Stochastic flows: systems, grids and draws, path simulation, variations.

mod grid;
mod path;
mod system;
mod variation;

pub(crate) use grid::node_index as node_index_in;
pub use grid::{BrownianDraw, Snap, TimeGrid, DEFAULT_STEPS_PER_UNIT};
pub(crate) use path::endpoint;
pub use path::{
    antidevelopment_increments, damped_transport, restart_flow, simulate_flow, simulate_with, FlowOptions, FlowPath,
    TangentMap, BLOWUP_LIMIT,
};
pub use system::{Diffusion, DriftField, SdeSystem};
pub use variation::{
    girsanov_log_density, perturbed_cylinder_points, variation_flow, GirsanovDrift, PerturbedStarts,
    VARIATION_STEPS_PER_UNIT,
};
