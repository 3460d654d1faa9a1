//! Workload descriptions, crossbar tiling, end-to-end functional simulation
//! and cost estimation.

mod estimate;
mod functional;
mod im2col;
mod layer;
mod plan;

pub use estimate::{
    estimate, layer_sparsities, measure_layer_sparsity, AdcAccounting, HardwareConfig, HardwareMode, SparsitySource,
};
pub use functional::{
    random_inputs, random_weights, run_functional, toy_network, AlphaPolicy, FunctionalConfig, FunctionalResult,
    LayerFidelity, Network, NetworkLayer, ToyKind,
};
pub use im2col::{im2col, pool};
pub use layer::{LayerKind, LayerSpec, Workload, BUNDLED_WORKLOADS, WORKLOAD_SCHEMA_VERSION};
pub use plan::{plan, scale_factor_count, TileAssignment, TilePlan};
