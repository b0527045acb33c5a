//! Metropolis sampling of graphs whose injective densities lie in windows.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphon::{
    in_window, injective_count, ConstraintVector, FiniteGraph, StepGraphon, SubgraphPattern,
};
use crate::io::fmt_real;
use crate::optimizer::{constrained_entropy, reference_construction, OptimizerOptions};
use crate::par::{map_indexed, split_seed, Parallelism};

/// Smallest chain size.
pub const MIN_NODES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub n: usize,
    /// Targets and window half-width `δ > 0`.
    pub constraints: ConstraintVector,
    #[serde(default)]
    pub seed: u64,
    /// Toggle proposals before the first sample; default `50 n²`.
    #[serde(default)]
    pub burn_in: Option<u64>,
    /// Toggle proposals between samples; default `n²`.
    #[serde(default)]
    pub interval: Option<u64>,
    pub samples: usize,
    /// Candidate toggles the initial repair may evaluate; default `200 n²`.
    #[serde(default)]
    pub repair_budget: Option<u64>,
}

impl ChainConfig {
    pub fn new(n: usize, constraints: ConstraintVector, seed: u64, samples: usize) -> Self {
        ChainConfig {
            n,
            constraints,
            seed,
            burn_in: None,
            interval: None,
            samples,
            repair_budget: None,
        }
    }

    pub fn burn_in_steps(&self) -> u64 {
        self.burn_in.unwrap_or(50 * (self.n * self.n) as u64)
    }

    pub fn interval_steps(&self) -> u64 {
        self.interval.unwrap_or((self.n * self.n) as u64).max(1)
    }

    fn repair_steps(&self) -> u64 {
        self.repair_budget.unwrap_or(200 * (self.n * self.n) as u64)
    }

    pub fn validate(&self) -> Result<()> {
        self.constraints.validate()?;
        if self.n < MIN_NODES {
            return Err(Error::Domain(format!(
                "chains need n >= {MIN_NODES}, got {}",
                self.n
            )));
        }
        if self.n > u16::MAX as usize {
            return Err(Error::CapExceeded {
                what: "chain node count",
                value: self.n,
                cap: u16::MAX as usize,
            });
        }
        if self.constraints.delta <= 0.0 {
            return Err(Error::Domain(
                "window half-width delta must be positive".into(),
            ));
        }
        for c in &self.constraints.constraints {
            if !c.pattern.is_unsigned() {
                return Err(Error::InvalidPattern(
                    "chain windows take all-present patterns".into(),
                ));
            }
            if c.pattern.vertex_count() > self.n {
                return Err(Error::Domain("pattern larger than the graph".into()));
            }
        }
        Ok(())
    }
}

/// How a pattern's injective count is kept current across toggles.
#[derive(Debug, Clone)]
enum Counter {
    /// `Σ_v (d_v)_k`, which for `k = 1` is twice the edge count.
    Star(usize),
    /// Triangles, counted once each.
    Triangle,
    /// Recount from scratch after every toggle.
    Full(SubgraphPattern),
}

/// Injective pattern counts of a graph, updated per toggle.
#[derive(Debug, Clone)]
pub(crate) struct Tracker {
    counters: Vec<Counter>,
    counts: Vec<u128>,
    /// Injective-map count of each pattern in `K_n`, so density = count·scale/denom.
    denoms: Vec<f64>,
    scales: Vec<u128>,
    degrees: Vec<usize>,
}

fn falling(d: usize, k: usize) -> u128 {
    if d < k {
        return 0;
    }
    (0..k).map(|i| (d - i) as u128).product()
}

impl Tracker {
    pub fn new(g: &FiniteGraph, patterns: &[SubgraphPattern]) -> Self {
        let n = g.node_count();
        let degrees: Vec<usize> = (0..n).map(|u| g.degree(u)).collect();
        let mut counters = Vec::new();
        let mut scales = Vec::new();
        let mut denoms = Vec::new();
        for p in patterns {
            let k = p.vertex_count();
            denoms.push((0..k).map(|i| (n - i) as f64).product());
            if let Some(s) = p.star_size() {
                counters.push(Counter::Star(s));
                scales.push(1);
            } else if p.is_triangle() {
                counters.push(Counter::Triangle);
                scales.push(6);
            } else {
                counters.push(Counter::Full(p.clone()));
                scales.push(1);
            }
        }
        let mut t = Tracker {
            counters,
            counts: Vec::new(),
            denoms,
            scales,
            degrees,
        };
        t.counts = t.counters.iter().map(|c| t.recount(g, c)).collect();
        t
    }

    fn recount(&self, g: &FiniteGraph, c: &Counter) -> u128 {
        match c {
            Counter::Star(k) => self.degrees.iter().map(|&d| falling(d, *k)).sum(),
            Counter::Triangle => g.triangle_count() as u128,
            Counter::Full(p) => injective_count(g, p),
        }
    }

    /// Toggle `{u,v}` in `g` and update every count.
    pub fn toggle(&mut self, g: &mut FiniteGraph, u: usize, v: usize) {
        let common = g.common_neighbors(u, v) as u128;
        let added = g.toggle(u, v);
        let (du, dv) = (self.degrees[u], self.degrees[v]);
        let (nu, nv) = if added {
            (du + 1, dv + 1)
        } else {
            (du - 1, dv - 1)
        };
        self.degrees[u] = nu;
        self.degrees[v] = nv;
        for i in 0..self.counters.len() {
            self.counts[i] = match &self.counters[i] {
                Counter::Star(k) => {
                    self.counts[i] + falling(nu, *k) + falling(nv, *k)
                        - falling(du, *k)
                        - falling(dv, *k)
                }
                Counter::Triangle => {
                    if added {
                        self.counts[i] + common
                    } else {
                        self.counts[i] - common
                    }
                }
                Counter::Full(p) => injective_count(g, p),
            };
        }
    }

    pub fn densities(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(&self.scales)
            .zip(&self.denoms)
            .map(|((&c, &s), &d)| (c * s) as f64 / d)
            .collect()
    }
}

/// Sum over constraints of the distance from the density to the window
/// shrunk by `margin` on each side.
fn violation(d: &[f64], targets: &[f64], delta: f64, margin: f64) -> f64 {
    d.iter()
        .zip(targets)
        .map(|(x, a)| ((x - a).abs() - (delta - margin)).max(0.0))
        .sum()
}

fn inside(d: &[f64], targets: &[f64], delta: f64) -> bool {
    d.iter().zip(targets).all(|(x, a)| in_window(*x, *a, delta))
}

/// Sample a graph on `n` nodes from a step graphon, assigning nodes to
/// blocks in contiguous runs proportional to the masses.
pub fn sample_graph(q: &StepGraphon, n: usize, rng: &mut impl Rng) -> FiniteGraph {
    let labels = block_labels(q.masses(), n);
    let mut g = FiniteGraph::empty(n);
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < q.value(labels[u], labels[v]) {
                g.add_edge(u, v);
            }
        }
    }
    g
}

/// Block of each of `n` nodes: node `u` gets the block containing
/// `(u + ½)/n`.
pub fn block_labels(masses: &[f64], n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    let mut b = 0;
    for u in 0..n {
        let x = (u as f64 + 0.5) / n as f64;
        while b + 1 < masses.len() && x > acc + masses[b] {
            acc += masses[b];
            b += 1;
        }
        out.push(b);
    }
    out
}

/// Graphon the initial graph is drawn from.
fn initial_graphon(c: &ConstraintVector) -> Result<StepGraphon> {
    let eps = c.target_of(SubgraphPattern::is_edge);
    let tau = c.target_of(SubgraphPattern::is_triangle);
    let only_edge_triangle = c
        .constraints
        .iter()
        .all(|k| k.pattern.is_edge() || k.pattern.is_triangle());
    if only_edge_triangle {
        match (eps, tau) {
            (Some(e), None) => return StepGraphon::constant(e),
            (Some(e), Some(t)) => {
                if let Ok(q) = reference_construction(e, t) {
                    return Ok(q);
                }
            }
            (None, None) => return StepGraphon::constant(0.5),
            _ => {}
        }
    }
    let opts = OptimizerOptions {
        starts: 8,
        max_podality: 3,
        parallelism: Parallelism::Sequential,
        ..OptimizerOptions::default()
    };
    let exact = ConstraintVector {
        delta: 0.0,
        ..c.clone()
    };
    constrained_entropy(&exact, &opts)
        .map(|r| r.graphon)
        .map_err(|e| Error::Initialization(format!("no graphon meets the targets: {e}")))
}

/// Draw from the initial graphon, then greedily toggle the best of a few
/// random pairs until every density is inside its window.
pub(crate) fn initialize(
    cfg: &ChainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(FiniteGraph, Tracker)> {
    let patterns: Vec<SubgraphPattern> = cfg
        .constraints
        .constraints
        .iter()
        .map(|c| c.pattern.clone())
        .collect();
    let targets = cfg.constraints.targets();
    let delta = cfg.constraints.delta;
    let margin = 0.5 * delta;
    let q = initial_graphon(&cfg.constraints)?;
    let mut g = sample_graph(&q, cfg.n, rng);
    let mut tracker = Tracker::new(&g, &patterns);
    let budget = cfg.repair_steps();
    const CANDIDATES: usize = 32;
    let mut spent = 0u64;
    let mut current = violation(&tracker.densities(), &targets, delta, margin);
    while !inside(&tracker.densities(), &targets, delta) {
        if spent >= budget {
            return Err(Error::Initialization(format!(
                "no graph inside the windows after {budget} repair evaluations (violation {current:.3e})"
            )));
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for _ in 0..CANDIDATES {
            let (u, v) = random_pair(cfg.n, rng);
            tracker.toggle(&mut g, u, v);
            let score = violation(&tracker.densities(), &targets, delta, margin);
            tracker.toggle(&mut g, u, v);
            spent += 1;
            if best.is_none_or(|(s, _, _)| score < s) {
                best = Some((score, u, v));
            }
        }
        let (score, u, v) = best.expect("at least one candidate");
        // accept sideways moves too, so plateaus of the violation can be crossed
        if score <= current {
            tracker.toggle(&mut g, u, v);
            current = score;
        }
    }
    Ok((g, tracker))
}

fn random_pair(n: usize, rng: &mut impl Rng) -> (usize, usize) {
    let u = rng.random_range(0..n);
    let mut v = rng.random_range(0..n - 1);
    if v >= u {
        v += 1;
    }
    (u.min(v), u.max(v))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSample {
    /// Proposals made since the end of the initial repair.
    pub step: u64,
    pub densities: Vec<f64>,
    pub graph: FiniteGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub samples: Vec<ChainSample>,
    pub proposals: u64,
    pub accepted: u64,
    /// Set when some full sweep of `n(n−1)/2` proposals accepted nothing.
    pub stall_warning: Option<String>,
}

impl ChainOutput {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

/// Run the chain: uniform random pair toggles, accepted iff every density
/// stays strictly inside its window. Proposals are symmetric and the target
/// is an indicator, so the stationary law is uniform on the graphs inside
/// the windows reachable from the start.
pub fn sample_constrained(cfg: &ChainConfig) -> Result<ChainOutput> {
    sample_constrained_with(cfg, |_| {})
}

/// As [`sample_constrained`], calling `visit` with the graph after every
/// proposal past burn-in (whether accepted or not).
pub fn sample_constrained_with(
    cfg: &ChainConfig,
    mut visit: impl FnMut(&FiniteGraph),
) -> Result<ChainOutput> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut g, mut tracker) = initialize(cfg, &mut rng)?;
    let targets = cfg.constraints.targets();
    let delta = cfg.constraints.delta;
    let n = cfg.n;
    let sweep = (n * (n - 1) / 2) as u64;
    let burn = cfg.burn_in_steps();
    let interval = cfg.interval_steps();
    let total = burn + interval * cfg.samples.saturating_sub(1) as u64 + u64::from(cfg.samples > 0);
    let mut out = ChainOutput {
        samples: Vec::with_capacity(cfg.samples),
        proposals: 0,
        accepted: 0,
        stall_warning: None,
    };
    let mut since_accept = 0u64;
    let mut step = 0u64;
    while out.samples.len() < cfg.samples {
        if step >= burn && (step - burn).is_multiple_of(interval) {
            out.samples.push(ChainSample {
                step,
                densities: tracker.densities(),
                graph: g.clone(),
            });
            if out.samples.len() == cfg.samples {
                break;
            }
        }
        let (u, v) = random_pair(n, &mut rng);
        tracker.toggle(&mut g, u, v);
        out.proposals += 1;
        if inside(&tracker.densities(), &targets, delta) {
            out.accepted += 1;
            since_accept = 0;
        } else {
            tracker.toggle(&mut g, u, v);
            since_accept += 1;
            if since_accept == sweep && out.stall_warning.is_none() {
                out.stall_warning = Some(format!(
                    "no toggle accepted during a full sweep of {sweep} proposals ending at step {step}"
                ));
            }
        }
        step += 1;
        if step > burn {
            visit(&g);
        }
        debug_assert!(step <= total);
    }
    Ok(out)
}

/// Independent chains with seeds `split_seed(cfg.seed, i)`, in chain order.
pub fn sample_chains(
    cfg: &ChainConfig,
    chains: usize,
    mode: Parallelism,
) -> Vec<Result<ChainOutput>> {
    map_indexed(chains, mode, |i| {
        let mut c = cfg.clone();
        c.seed = split_seed(cfg.seed, i as u64);
        sample_constrained(&c)
    })
}

/// Write `sample_XXXX.edges` files plus `manifest.csv` (index, step, file,
/// then one column per constraint density) into `dir`.
pub fn write_samples(dir: &Path, cfg: &ChainConfig, out: &ChainOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = csv::Writer::from_path(dir.join("manifest.csv"))?;
    let mut header = vec!["index".to_string(), "step".to_string(), "file".to_string()];
    header.extend((0..cfg.constraints.len()).map(|j| format!("density_{j}")));
    manifest.write_record(&header)?;
    for (i, s) in out.samples.iter().enumerate() {
        let file = format!("sample_{i:04}.edges");
        fs::write(dir.join(&file), s.graph.to_edge_list())?;
        let mut row = vec![i.to_string(), s.step.to_string(), file];
        row.extend(s.densities.iter().map(|&d| fmt_real(d)));
        manifest.write_record(&row)?;
    }
    manifest.flush()?;
    Ok(())
}
