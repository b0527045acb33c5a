//! Entropy maximization over step graphons under density constraints.

mod al;
mod bfgs;
mod entropy;
pub(crate) mod params;
mod reference;
mod scan;
mod signed;

pub use al::Functional;
pub use entropy::{
    constrained_entropy, constrained_entropy_seeded, maximize_entropy, maximize_entropy_seeded,
    OptimizerOptions, OptimizerResult, ResultFlags, MAX_PODALITY, OPTIMIZER_VERTEX_CAP,
};
pub use params::{VALUE_HI, VALUE_LO};
pub use reference::reference_construction;
pub use scan::{
    phase_scan, write_csv, write_svg, CellStatus, Coloring, GridSpec, Model, PhaseCell, PhaseMap,
    ScanOptions, CSV_HEADER, INFEASIBLE_FILL, MAX_RESOLUTION, RAMP,
};
pub use signed::{bounded_signed_max, staircase, SignedMaxResult, SIGNED_MAX_PODALITY};
