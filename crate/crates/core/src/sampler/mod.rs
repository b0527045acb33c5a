//! Finite-size checks: Metropolis sampling inside density windows, block
//! recovery from a single graph, and exact enumeration at tiny `n`.

mod blocks;
mod chain;
mod enumerate;

pub use blocks::{estimate_block_structure, BlockEstimate, MAX_BLOCKS};
pub use chain::{
    block_labels, sample_chains, sample_constrained, sample_constrained_with, sample_graph,
    write_samples, ChainConfig, ChainOutput, ChainSample, MIN_NODES,
};
pub use enumerate::{
    enumerate_z, write_histogram_csv, EnumerationReport, HistogramBin, Window, MAX_ENUM_N,
};
