//! Maximizing one density subject to another vanishing.

use serde::{Deserialize, Serialize};

use super::al::Functional;
use super::entropy::{run_starts, select_best, OptimizerOptions};
use crate::error::{Error, Result};
use crate::graphon::{StepGraphon, SubgraphPattern};

pub const SIGNED_MAX_PODALITY: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedMaxResult {
    pub value: f64,
    pub graphon: StepGraphon,
    pub residual: f64,
    pub podality: usize,
}

/// Threshold ("staircase") graphon on `m` equal blocks: value 1 on block
/// pairs with `i + j <= m - 1`, 0 elsewhere. Neighbourhoods are nested, so
/// the signed square density vanishes.
pub fn staircase(m: usize) -> StepGraphon {
    let mut values = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i + j < m {
                values[i * m + j] = 1.0;
            }
        }
    }
    StepGraphon::from_flat(vec![1.0 / m as f64; m], values)
        .unwrap_or_else(|_| StepGraphon::normalized(vec![1.0 / m as f64; m], vec![1.0; m * m]))
}

/// Maximize `t_objective(q)` over `m`-podal graphons subject to
/// `t_zero(q) = 0`. Threshold staircases of every size up to `m` are seeded,
/// so the value is nondecreasing in `m` up to solver tolerance.
pub fn bounded_signed_max(
    objective: &SubgraphPattern,
    zero_constraint: &SubgraphPattern,
    m: usize,
    opts: &OptimizerOptions,
) -> Result<SignedMaxResult> {
    if m == 0 || m > SIGNED_MAX_PODALITY {
        return Err(Error::CapExceeded {
            what: "podality for signed maximization",
            value: m,
            cap: SIGNED_MAX_PODALITY,
        });
    }
    let functional = Functional::Density(objective.clone());
    let constraints = vec![(zero_constraint.clone(), 0.0)];
    let mut seeds: Vec<StepGraphon> = (1..=m).rev().map(staircase).collect();
    // complement staircases (clique plus isolated nodes at m = 2)
    seeds.extend((2..=m).rev().map(|k| {
        let s = staircase(k);
        let n = s.podality();
        let vals = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                s.value(n - 1 - i, n - 1 - j)
            })
            .map(|v| if v == 1.0 { 0.0 } else { 1.0 })
            .collect();
        StepGraphon::normalized(s.masses().to_vec(), vals)
    }));
    let cands = run_starts(&functional, &constraints, m, &seeds, opts);
    let n = cands.len();
    let (best, _, _) =
        select_best(&functional, &constraints, &cands, opts).ok_or_else(|| Error::Infeasible {
            residual: cands
                .iter()
                .map(|c| c.max_residual)
                .fold(f64::INFINITY, f64::min),
            starts: n,
        })?;
    Ok(SignedMaxResult {
        value: best.objective,
        podality: best.graphon.podality(),
        graphon: best.graphon,
        residual: best.max_residual,
    })
}
