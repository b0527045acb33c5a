//! Multistart entropy maximization under density constraints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::al::{AlSettings, Functional, LocalSolution, Problem};
use super::params::Layout;
use super::reference::reference_construction;
use crate::error::{Error, Result};
use crate::graphon::{
    canonicalize, dbar_distance, graphon_entropy, subgraph_density, ConstraintVector, StepGraphon,
    SubgraphPattern, DEFAULT_MERGE_TOL,
};
use crate::par::{map_indexed, split_seed, Parallelism};

/// Largest podality the optimizer accepts.
pub const MAX_PODALITY: usize = 16;
/// Largest pattern (in vertices) on the optimizer path.
pub const OPTIMIZER_VERTEX_CAP: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerOptions {
    pub starts: usize,
    pub seed: u64,
    pub feas_tol: f64,
    pub merge_tol: f64,
    pub outer_rounds: usize,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub inner_max_iter: usize,
    /// Minimum entropy gain that justifies one more block.
    pub escalation_tol: f64,
    pub max_podality: usize,
    /// Tolerance for the equal-mass / equal-diagonal symmetry flag.
    pub symmetry_tol: f64,
    pub parallelism: Parallelism,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            starts: 40,
            seed: 0,
            feas_tol: 1e-8,
            merge_tol: DEFAULT_MERGE_TOL,
            outer_rounds: 12,
            initial_penalty: 10.0,
            penalty_growth: 5.0,
            inner_max_iter: 500,
            escalation_tol: 1e-7,
            max_podality: 6,
            symmetry_tol: 1e-3,
            parallelism: Parallelism::Parallel,
        }
    }
}

impl OptimizerOptions {
    pub(crate) fn al(&self) -> AlSettings {
        AlSettings {
            outer_rounds: self.outer_rounds,
            initial_penalty: self.initial_penalty,
            penalty_growth: self.penalty_growth,
            inner_max_iter: self.inner_max_iter,
            feas_tol: self.feas_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFlags {
    /// Two blocks of equal mass with equal diagonal values.
    pub symmetric_bipodal: bool,
    /// A single block.
    pub constant: bool,
}

/// Best graphon found for a constraint vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerResult {
    /// Canonicalized optimizer.
    pub graphon: StepGraphon,
    /// Value of the maximized functional (the entropy for entropy runs).
    pub entropy: f64,
    /// `|t_j(q) − α_j|` per constraint.
    pub residuals: Vec<f64>,
    pub podality: usize,
    pub flags: ResultFlags,
    /// Entropy gap between the best and the second-best distinct basin;
    /// `None` when every feasible start ended in the same basin.
    pub multistart_spread: Option<f64>,
    /// Number of blocks the search ran with.
    pub searched_podality: usize,
    pub starts: usize,
    pub feasible_starts: usize,
}

impl OptimizerResult {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a, &r| a.max(r))
    }
}

pub(crate) fn check_constraints(constraints: &ConstraintVector, m: usize) -> Result<()> {
    constraints.validate()?;
    if m == 0 || m > MAX_PODALITY {
        return Err(Error::CapExceeded {
            what: "podality",
            value: m,
            cap: MAX_PODALITY,
        });
    }
    for c in &constraints.constraints {
        if c.pattern.vertex_count() > OPTIMIZER_VERTEX_CAP {
            return Err(Error::CapExceeded {
                what: "constraint pattern vertex count",
                value: c.pattern.vertex_count(),
                cap: OPTIMIZER_VERTEX_CAP,
            });
        }
    }
    Ok(())
}

/// Closed-form starting points suggested by the constraint set.
pub(crate) fn closed_form_seeds(constraints: &ConstraintVector) -> Vec<StepGraphon> {
    let mut seeds = Vec::new();
    let eps = constraints.target_of(SubgraphPattern::is_edge);
    if let Some(e) = eps {
        if let Ok(q) = StepGraphon::constant(e) {
            seeds.push(q);
        }
    }
    if let (Some(e), Some(t)) = (eps, constraints.target_of(SubgraphPattern::is_triangle)) {
        if let Ok(q) = reference_construction(e, t) {
            seeds.push(q);
        }
    }
    seeds.push(StepGraphon::symmetric_bipodal(0.0, 1.0).expect("valid"));
    seeds
}

/// Bring a seed to exactly `m` blocks by splitting its heaviest blocks;
/// seeds with more than `m` blocks are dropped.
pub(crate) fn fit_podality(q: &StepGraphon, m: usize) -> Option<StepGraphon> {
    let mut q = if q.podality() > m {
        canonicalize(q, 1e-12)
    } else {
        q.clone()
    };
    if q.podality() > m {
        return None;
    }
    while q.podality() < m {
        let heaviest = (0..q.podality())
            .max_by(|&a, &b| q.masses()[a].total_cmp(&q.masses()[b]))
            .unwrap();
        q = q.split_block(heaviest, 0.5);
    }
    Some(q)
}

fn random_start(layout: Layout, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let m = layout.m;
    let masses: Vec<f64> = (0..m).map(|_| Exp1.sample(rng)).collect::<Vec<f64>>();
    let total: f64 = masses.iter().sum();
    let mut values = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v: f64 = rng.random_range(0.02..0.98);
            values[i * m + j] = v;
            values[j * m + i] = v;
        }
    }
    let q = StepGraphon::normalized(masses.into_iter().map(|c| c / total).collect(), values);
    layout.encode(&q)
}

#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub graphon: StepGraphon,
    pub objective: f64,
    pub max_residual: f64,
    pub index: usize,
}

/// Solve from every start and return the candidates in start order.
pub(crate) fn run_starts(
    objective: &Functional,
    constraints: &[(SubgraphPattern, f64)],
    m: usize,
    seeds: &[StepGraphon],
    opts: &OptimizerOptions,
) -> Vec<Candidate> {
    let layout = Layout::new(m);
    let fitted: Vec<StepGraphon> = seeds.iter().filter_map(|q| fit_podality(q, m)).collect();
    let total = opts.starts.max(fitted.len()).max(1);
    let settings = opts.al();
    map_indexed(total, opts.parallelism, |i| {
        let x0 = match fitted.get(i) {
            Some(q) => layout.encode(q),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(split_seed(opts.seed, i as u64));
                random_start(layout, &mut rng)
            }
        };
        let problem = Problem {
            objective,
            constraints,
            layout,
        };
        let LocalSolution {
            graphon,
            objective,
            max_residual,
        } = problem.solve(x0, &settings);
        Candidate {
            graphon,
            objective,
            max_residual,
            index: i,
        }
    })
}

/// Canonicalize a local solution; when blocks merge, re-solve at the reduced
/// podality so the reported graphon still meets the constraints.
pub(crate) fn canonical_candidate(
    objective: &Functional,
    constraints: &[(SubgraphPattern, f64)],
    cand: &Candidate,
    opts: &OptimizerOptions,
) -> Candidate {
    let mut current = cand.clone();
    for _ in 0..4 {
        let merged = canonicalize(&current.graphon, opts.merge_tol);
        if merged.podality() == current.graphon.podality() {
            return Candidate {
                graphon: merged,
                ..current
            };
        }
        let layout = Layout::new(merged.podality());
        let problem = Problem {
            objective,
            constraints,
            layout,
        };
        let sol = problem.solve(layout.encode(&merged), &opts.al());
        if sol.max_residual > opts.feas_tol || sol.objective < current.objective - 1e-9 {
            break;
        }
        current = Candidate {
            graphon: sol.graphon,
            objective: sol.objective,
            max_residual: sol.max_residual,
            index: cand.index,
        };
    }
    let order = canonicalize(&current.graphon, 0.0);
    Candidate {
        graphon: order,
        ..current
    }
}

/// Best feasible candidate (ties broken by podality, then start index) and
/// the objective gap to the best candidate in a different basin.
pub(crate) fn select_best(
    objective: &Functional,
    constraints: &[(SubgraphPattern, f64)],
    candidates: &[Candidate],
    opts: &OptimizerOptions,
) -> Option<(Candidate, Option<f64>, usize)> {
    let mut feasible: Vec<&Candidate> = candidates
        .iter()
        .filter(|c| c.max_residual <= opts.feas_tol && c.objective.is_finite())
        .collect();
    let n_feasible = feasible.len();
    feasible.sort_by(|a, b| {
        b.objective
            .total_cmp(&a.objective)
            .then(a.index.cmp(&b.index))
    });
    let top = *feasible.first()?;
    // among near-ties prefer the fewest blocks after canonicalization
    let mut best = canonical_candidate(objective, constraints, top, opts);
    for c in feasible
        .iter()
        .skip(1)
        .take_while(|c| c.objective >= top.objective - 1e-12)
    {
        let cc = canonical_candidate(objective, constraints, c, opts);
        if cc.graphon.podality() < best.graphon.podality() && cc.objective >= best.objective - 1e-12
        {
            best = cc;
        }
    }
    let spread = feasible
        .iter()
        .find(|c| {
            dbar_distance(&best.graphon, &c.graphon, 4)
                .map(|d| d.value > 1e-5)
                .unwrap_or(false)
        })
        .map(|c| (best.objective - c.objective).max(0.0));
    Some((best, spread, n_feasible))
}

pub(crate) fn build_result(
    cand: Candidate,
    constraints: &ConstraintVector,
    spread: Option<f64>,
    m: usize,
    starts: usize,
    feasible_starts: usize,
    opts: &OptimizerOptions,
) -> OptimizerResult {
    let q = cand.graphon;
    let residuals = constraints
        .constraints
        .iter()
        .map(|c| (subgraph_density(&q, &c.pattern).expect("checked cap") - c.target).abs())
        .collect();
    let podality = q.podality();
    let flags = ResultFlags {
        symmetric_bipodal: podality == 2
            && (q.masses()[0] - q.masses()[1]).abs() < opts.symmetry_tol
            && (q.value(0, 0) - q.value(1, 1)).abs() < opts.symmetry_tol,
        constant: podality == 1,
    };
    OptimizerResult {
        entropy: cand.objective,
        graphon: q,
        residuals,
        podality,
        flags,
        multistart_spread: spread,
        searched_podality: m,
        starts,
        feasible_starts,
    }
}

fn as_pairs(constraints: &ConstraintVector) -> Vec<(SubgraphPattern, f64)> {
    constraints
        .constraints
        .iter()
        .map(|c| (c.pattern.clone(), c.target))
        .collect()
}

/// Maximize graphon entropy over `m`-podal graphons subject to
/// `t_{H_j}(q) = α_j`.
pub fn maximize_entropy(
    constraints: &ConstraintVector,
    m: usize,
    opts: &OptimizerOptions,
) -> Result<OptimizerResult> {
    maximize_entropy_seeded(constraints, m, &[], opts)
}

/// As [`maximize_entropy`], with extra warm-start graphons tried before the
/// closed-form and random starts.
pub fn maximize_entropy_seeded(
    constraints: &ConstraintVector,
    m: usize,
    warm: &[StepGraphon],
    opts: &OptimizerOptions,
) -> Result<OptimizerResult> {
    check_constraints(constraints, m)?;
    let pairs = as_pairs(constraints);
    let mut seeds = warm.to_vec();
    seeds.extend(closed_form_seeds(constraints));
    let objective = Functional::Entropy;
    let cands = run_starts(&objective, &pairs, m, &seeds, opts);
    let n = cands.len();
    match select_best(&objective, &pairs, &cands, opts) {
        Some((best, spread, nf)) => {
            let mut res = build_result(best, constraints, spread, m, n, nf, opts);
            res.entropy = graphon_entropy(&res.graphon);
            Ok(res)
        }
        None => Err(Error::Infeasible {
            residual: cands
                .iter()
                .map(|c| c.max_residual)
                .fold(f64::INFINITY, f64::min),
            starts: n,
        }),
    }
}

/// Constrained entropy with automatic podality: runs `m = 1, 2, ..` until
/// two consecutive increments gain less than `escalation_tol`, and reports
/// the smallest podality that reached the optimum.
pub fn constrained_entropy(
    constraints: &ConstraintVector,
    opts: &OptimizerOptions,
) -> Result<OptimizerResult> {
    constrained_entropy_seeded(constraints, &[], opts)
}

pub fn constrained_entropy_seeded(
    constraints: &ConstraintVector,
    warm: &[StepGraphon],
    opts: &OptimizerOptions,
) -> Result<OptimizerResult> {
    check_constraints(constraints, opts.max_podality.max(1))?;
    let mut best: Option<OptimizerResult> = None;
    let mut last_err = None;
    let mut flat = 0;
    for m in 1..=opts.max_podality.max(1) {
        let mut seeds: Vec<StepGraphon> = best.iter().map(|b| b.graphon.clone()).collect();
        seeds.extend_from_slice(warm);
        match maximize_entropy_seeded(constraints, m, &seeds, opts) {
            Ok(res) => {
                let gain = best
                    .as_ref()
                    .map_or(f64::INFINITY, |b| res.entropy - b.entropy);
                if gain >= opts.escalation_tol {
                    best = Some(res);
                    flat = 0;
                } else {
                    flat += 1;
                }
            }
            Err(e @ Error::Infeasible { .. }) => {
                last_err = Some(e);
                if best.is_some() {
                    flat += 1;
                }
            }
            Err(e) => return Err(e),
        }
        if flat >= 2 {
            break;
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or(Error::Infeasible {
            residual: f64::INFINITY,
            starts: 0,
        })
    })
}
