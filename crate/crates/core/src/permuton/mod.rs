//! Permutations and permutons: pattern densities, permuton entropy, the
//! constrained entropy maximizer and exhaustive constrained counting.

mod count;
mod density;
mod grid;
mod optimize;
mod pattern;

pub use count::{count_constrained_perms, PermCountReport, PermWindow, MAX_COUNT_N};
pub use density::{
    permuton_density_gradient, permuton_pattern_density, DensityEstimate, DensityMethod,
    EXACT_MAX_LEN, EXACT_MAX_RESOLUTION, EXACT_MAX_RESOLUTION_PAIRS, MC_MAX_LEN,
};
pub use grid::{perm_to_permuton, permuton_entropy, GridPermuton, MARGINAL_TOL};
pub use optimize::{
    maximize_permuton_entropy, PermutonOptions, PermutonResult, DENSITY_FLOOR, PERMUTON_FEAS_TOL,
};
pub use pattern::{perm_pattern_density, Permutation, StarPattern, MAX_PLAIN_LEN, MAX_STAR_LEN};
