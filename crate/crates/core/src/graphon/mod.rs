//! Step graphons, finite graphs, and the exact functionals defined on them.

pub mod canonical;
pub mod density;
pub mod finite;
pub mod metric;
pub mod pattern;
pub mod step;

pub use canonical::{canonicalize, DEFAULT_MERGE_TOL};
pub use density::{
    graphon_entropy, graphon_entropy_grad, kstar_density, subgraph_density,
    subgraph_density_capped, subgraph_density_grad, Gradient,
};
pub use finite::{blowup, empirical_graphon, finite_density, injective_count, FiniteGraph};
pub use metric::{connected_graphs, cut_distance_upper, dbar_distance, DbarReport};
pub use pattern::{PatternEdge, SubgraphPattern};
pub use step::StepGraphon;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance from a window edge below which a density counts as on the edge.
pub const WINDOW_SLACK: f64 = 1e-12;

/// Open window test `|x − α| < δ`. A value within [`WINDOW_SLACK`] of an
/// edge is treated as on it, so `0.5 ± 0.1` excludes 0.4 and 0.6 however
/// the decimal inputs happen to round.
pub fn in_window(x: f64, target: f64, delta: f64) -> bool {
    (x - target).abs() < delta - WINDOW_SLACK
}

/// Density constraints `t_{H_j}(q) ≈ α_j` with softening `δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintVector {
    pub constraints: Vec<Constraint>,
    #[serde(default)]
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    pub pattern: SubgraphPattern,
    pub target: f64,
}

impl ConstraintVector {
    pub fn new(constraints: Vec<(SubgraphPattern, f64)>, delta: f64) -> Result<Self> {
        let cv = ConstraintVector {
            constraints: constraints
                .into_iter()
                .map(|(pattern, target)| Constraint { pattern, target })
                .collect(),
            delta,
        };
        cv.validate()?;
        Ok(cv)
    }

    /// Edge density `ε` and triangle density `τ`.
    pub fn edge_triangle(eps: f64, tau: f64) -> Result<Self> {
        Self::new(
            vec![
                (SubgraphPattern::edge(), eps),
                (SubgraphPattern::triangle(), tau),
            ],
            0.0,
        )
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        self.delta = delta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.constraints {
            if !(0.0..=1.0).contains(&c.target) {
                return Err(Error::Domain(format!("target {} outside [0,1]", c.target)));
            }
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::Domain(format!(
                "softening {} outside [0,1]",
                self.delta
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.target).collect()
    }

    /// Target of the first constraint whose pattern satisfies `pred`.
    pub fn target_of(&self, pred: impl Fn(&SubgraphPattern) -> bool) -> Option<f64> {
        self.constraints
            .iter()
            .find(|c| pred(&c.pattern))
            .map(|c| c.target)
    }
}
