//! Constrained-entropy optimizers for graph limits and permutation limits.
//!
//! The crate is organized around four subsystems:
//!
//! * [`graphon`]: step graphons, finite graphs, exact density and entropy
//!   functionals, cut and d-bar distances.
//! * [`optimizer`]: entropy maximization under density constraints,
//!   closed-form reference constructions, phase scans.
//! * [`sampler`]: microcanonical MCMC over finite graphs and exhaustive
//!   enumeration at small sizes.
//! * [`permuton`]: pattern densities, permuton entropy, the permuton
//!   optimizer, and exact counting of constrained permutations.
//!
//! Independent work items (multistarts, grid cells, chains, enumeration
//! slices) run through [`par::map_indexed`], which uses rayon when the
//! `parallel` feature is on and always merges results in index order.

pub mod error;
pub mod graphon;
pub mod io;
pub mod optimizer;
pub mod par;
pub mod permuton;
pub mod sampler;

pub use error::{Error, Result};
pub use par::Parallelism;
