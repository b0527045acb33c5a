use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use phases_core::graphon::{
    cut_distance_upper, dbar_distance, finite_density, graphon_entropy, subgraph_density,
    ConstraintVector, DbarReport, FiniteGraph, StepGraphon, SubgraphPattern,
};
use phases_core::io::to_json_string;
use phases_core::optimizer::{
    constrained_entropy, maximize_entropy, phase_scan, reference_construction, write_csv,
    write_svg, Coloring, GridSpec, Model, OptimizerOptions, ScanOptions,
};
use phases_core::permuton::{
    count_constrained_perms, maximize_permuton_entropy, perm_pattern_density,
    permuton_pattern_density, DensityEstimate, DensityMethod, GridPermuton, Permutation,
    PermutonOptions, StarPattern,
};
use phases_core::sampler::{
    enumerate_z, estimate_block_structure, sample_chains, write_histogram_csv, write_samples,
    BlockEstimate, ChainConfig,
};
use phases_core::Parallelism;

use crate::config::*;

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    emit(out, &to_json_string(value)?)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {what} file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid {what} in {}", path.display()))
}

fn read_graphon(path: &Path) -> Result<StepGraphon> {
    read_json(path, "graphon")
}

fn read_graph(path: &Path) -> Result<FiniteGraph> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read graph file {}", path.display()))?;
    let g = if path.extension().is_some_and(|e| e == "json") {
        let rows: Vec<Vec<u8>> = serde_json::from_str(&text)
            .with_context(|| format!("invalid adjacency JSON in {}", path.display()))?;
        FiniteGraph::from_adjacency(&rows)
    } else {
        FiniteGraph::parse_edge_list(&text)
    };
    g.with_context(|| format!("invalid graph in {}", path.display()))
}

/// A pattern name, or a pattern JSON file when the argument names one.
fn read_pattern(arg: &str) -> Result<SubgraphPattern> {
    let path = Path::new(arg);
    if path.is_file() {
        return read_json(path, "pattern");
    }
    SubgraphPattern::named(arg).map_err(Into::into)
}

fn parse_star(text: &str) -> Result<StarPattern> {
    text.parse()
        .with_context(|| format!("invalid permutation pattern {text:?}"))
}

fn parse_model(name: &str) -> Result<Model> {
    name.parse().map_err(Into::into)
}

/// Model coordinates plus any extra named constraints. Without `--model`,
/// `--eps/--tau` mean edge and triangle densities.
fn build_constraints(t: &TargetArgs) -> Result<(Option<Model>, ConstraintVector)> {
    let mut list = Vec::new();
    let mut model = None;
    match (t.eps, t.tau) {
        (Some(x), Some(y)) => {
            let m = match &t.model {
                Some(name) => parse_model(name)?,
                None => Model::EdgeTriangle,
            };
            let (px, py) = m.patterns()?;
            list.push((px, x));
            list.push((py, y));
            model = Some(m);
        }
        (None, None) if t.model.is_none() => {}
        _ => bail!("--model takes both --eps and --tau"),
    }
    for c in &t.constraints {
        let (name, v) = parse_assignment(c)?;
        list.push((read_pattern(name)?, v));
    }
    if list.is_empty() {
        bail!("no constraints given: use --eps/--tau (with --model) or --constraint NAME=VALUE");
    }
    Ok((model, ConstraintVector::new(list, 0.0)?))
}

#[derive(Serialize)]
struct DensityOut {
    pattern: SubgraphPattern,
    density: f64,
    /// Exact rational, finite graphs only.
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<String>,
}

fn density(a: &DensityArgs) -> Result<()> {
    let pattern = read_pattern(&a.pattern)?;
    let out = match (&a.graphon, &a.graph) {
        (Some(q), None) => DensityOut {
            density: subgraph_density(&read_graphon(q)?, &pattern)?,
            pattern,
            exact: None,
        },
        (None, Some(g)) => {
            let r = finite_density(&read_graph(g)?, &pattern)?;
            DensityOut {
                density: *r.numer() as f64 / *r.denom() as f64,
                exact: Some(format!("{}/{}", r.numer(), r.denom())),
                pattern,
            }
        }
        _ => bail!("give exactly one of --graphon and --graph"),
    };
    emit_json(a.out.as_deref(), &out)
}

#[derive(Serialize)]
struct EntropyOut {
    entropy: f64,
}

fn entropy(a: &EntropyArgs) -> Result<()> {
    let q = read_graphon(&a.graphon)?;
    emit_json(
        a.out.as_deref(),
        &EntropyOut {
            entropy: graphon_entropy(&q),
        },
    )
}

fn optimize(a: &OptimizeArgs, mode: Parallelism) -> Result<()> {
    let (_, c) = build_constraints(&a.target)?;
    let opts = OptimizerOptions {
        starts: a.starts,
        seed: a.seed,
        max_podality: a.max_podality,
        feas_tol: a.feas_tol,
        parallelism: mode,
        ..OptimizerOptions::default()
    };
    let res = match a.podality {
        Some(m) => maximize_entropy(&c, m, &opts)?,
        None => constrained_entropy(&c, &opts)?,
    };
    emit_json(a.out.as_deref(), &res)
}

fn default_ranges(model: Model, relative: bool) -> ((f64, f64), (f64, f64)) {
    match (model, relative) {
        (Model::HalfBlip, false) => ((0.0, 0.25), (0.0, 0.0625)),
        (Model::HalfBlip, true) => ((0.0, 0.25), (-0.0625, 0.0)),
        (_, false) => ((0.05, 0.95), (0.0, 0.9)),
        (_, true) => ((0.05, 0.95), (-0.1, 0.1)),
    }
}

fn scan(a: &ScanArgs, mode: Parallelism) -> Result<()> {
    let model = parse_model(&a.model)?;
    let (nx, ny) = parse_grid(&a.grid)?;
    let (dx, dy) = default_ranges(model, a.relative_to_er);
    let (x_min, x_max) = a
        .x_range
        .as_deref()
        .map_or(Ok(dx), |r| parse_range(r, "x-range"))?;
    let (y_min, y_max) = a
        .y_range
        .as_deref()
        .map_or(Ok(dy), |r| parse_range(r, "y-range"))?;
    let grid = GridSpec {
        x_min,
        x_max,
        y_min,
        y_max,
        nx,
        ny,
        relative_to_er: a.relative_to_er,
    };
    let defaults = ScanOptions::default();
    let opts = ScanOptions {
        optimizer: OptimizerOptions {
            starts: a.starts,
            max_podality: a.max_podality,
            seed: a.seed,
            ..defaults.optimizer
        },
        spike_factor: a.spike_factor,
        warm_start: !a.no_warm_start,
        parallelism: mode,
    };
    let map = phase_scan(model, &grid, &opts)?;
    let csv =
        fs::File::create(&a.out).with_context(|| format!("cannot write {}", a.out.display()))?;
    write_csv(&map, csv)?;
    if let Some(svg) = &a.svg {
        let coloring = match a.color {
            ColorBy::Entropy => Coloring::Entropy,
            ColorBy::Podality => Coloring::Podality,
        };
        let f = fs::File::create(svg).with_context(|| format!("cannot write {}", svg.display()))?;
        write_svg(&map, coloring, f)?;
    }
    if let Some(json) = &a.json {
        emit_json(Some(json), &map)?;
    }
    Ok(())
}

fn reference(a: &ReferenceArgs) -> Result<()> {
    emit_json(a.out.as_deref(), &reference_construction(a.eps, a.tau)?)
}

#[derive(Serialize)]
struct ChainSummary {
    chain: usize,
    dir: String,
    samples: usize,
    proposals: u64,
    accepted: u64,
    acceptance_rate: f64,
    stall_warning: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    blocks: Option<BlockEstimate>,
}

fn sample(a: &SampleArgs, mode: Parallelism) -> Result<()> {
    let (_, c) = build_constraints(&a.target)?;
    let mut cfg = ChainConfig::new(a.n, c.with_delta(a.delta)?, a.seed, a.samples);
    cfg.burn_in = a.burn_in;
    cfg.interval = a.interval;
    cfg.validate()?;
    if a.chains == 0 {
        bail!("--chains must be at least 1");
    }
    let runs = sample_chains(&cfg, a.chains, mode);
    let mut summary = Vec::new();
    for (i, run) in runs.into_iter().enumerate() {
        let out = run?;
        let dir = if a.chains == 1 {
            a.out_dir.clone()
        } else {
            a.out_dir.join(format!("chain_{i:02}"))
        };
        write_samples(&dir, &cfg, &out)?;
        let blocks = match (a.blocks, out.samples.last()) {
            (Some(m), Some(s)) => Some(estimate_block_structure(&s.graph, m, a.seed)?),
            _ => None,
        };
        summary.push(ChainSummary {
            chain: i,
            dir: dir.display().to_string(),
            samples: out.samples.len(),
            proposals: out.proposals,
            accepted: out.accepted,
            acceptance_rate: out.acceptance_rate(),
            stall_warning: out.stall_warning.clone(),
            blocks,
        });
    }
    emit_json(a.summary.as_deref(), &summary)
}

fn enumerate(a: &EnumerateArgs, mode: Parallelism) -> Result<()> {
    let (_, c) = build_constraints(&a.target)?;
    let report = enumerate_z(a.n, &c.with_delta(a.delta)?, mode)?;
    if let Some(h) = &a.histogram {
        let f = fs::File::create(h).with_context(|| format!("cannot write {}", h.display()))?;
        write_histogram_csv(&report, f)?;
    }
    emit_json(a.out.as_deref(), &report)
}

#[derive(Serialize)]
struct PermDensityOut {
    pattern: StarPattern,
    #[serde(flatten)]
    estimate: DensityEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<String>,
}

fn perm_density(a: &PermDensityArgs) -> Result<()> {
    let pattern = parse_star(&a.pattern)?;
    let out = match (&a.perm, &a.permuton) {
        (Some(p), None) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("cannot read permutation file {}", p.display()))?;
            let pi = Permutation::parse(&text)
                .with_context(|| format!("invalid permutation in {}", p.display()))?;
            let r = perm_pattern_density(&pi, &pattern)?;
            PermDensityOut {
                estimate: DensityEstimate {
                    value: *r.numer() as f64 / *r.denom() as f64,
                    std_error: 0.0,
                },
                exact: Some(format!("{}/{}", r.numer(), r.denom())),
                pattern,
            }
        }
        (None, Some(p)) => {
            let g: GridPermuton = read_json(p, "permuton")?;
            let method = match a.method {
                MethodArg::Exact => DensityMethod::Exact,
                MethodArg::Montecarlo => DensityMethod::MonteCarlo {
                    samples: a.samples,
                    seed: a.seed,
                },
            };
            PermDensityOut {
                estimate: permuton_pattern_density(&g, &pattern, method)?,
                exact: None,
                pattern,
            }
        }
        _ => bail!("give exactly one of --perm and --permuton"),
    };
    emit_json(a.out.as_deref(), &out)
}

fn star_constraints(list: &[String]) -> Result<Vec<(StarPattern, f64)>> {
    list.iter()
        .map(|c| {
            let (name, v) = parse_assignment(c)?;
            Ok((parse_star(name)?, v))
        })
        .collect()
}

fn perm_optimize(a: &PermOptimizeArgs, mode: Parallelism) -> Result<()> {
    let constraints = star_constraints(&a.constraints)?;
    let opts = PermutonOptions {
        starts: a.starts,
        seed: a.seed,
        parallelism: mode,
        ..PermutonOptions::default()
    };
    emit_json(
        a.out.as_deref(),
        &maximize_permuton_entropy(&constraints, a.k, &opts)?,
    )
}

fn perm_count(a: &PermCountArgs, mode: Parallelism) -> Result<()> {
    let mut constraints = star_constraints(&a.constraints)?;
    match (&a.pattern, a.alpha) {
        (Some(p), Some(alpha)) => constraints.insert(0, (parse_star(p)?, alpha)),
        (None, None) => {}
        _ => bail!("--pattern and --alpha go together"),
    }
    emit_json(
        a.out.as_deref(),
        &count_constrained_perms(a.n, &constraints, a.delta, mode)?,
    )
}

#[derive(Serialize)]
struct CutOut {
    cut_distance_upper: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dbar: Option<DbarReport>,
}

fn cut_distance(a: &CutDistanceArgs) -> Result<()> {
    let (q1, q2) = (read_graphon(&a.a)?, read_graphon(&a.b)?);
    let out = CutOut {
        cut_distance_upper: cut_distance_upper(&q1, &q2)?,
        dbar: a.dbar.map(|k| dbar_distance(&q1, &q2, k)).transpose()?,
    };
    emit_json(a.out.as_deref(), &out)
}

pub fn execute(cmd: &Command, mode: Parallelism) -> Result<()> {
    match cmd {
        Command::Density(a) => density(a),
        Command::Entropy(a) => entropy(a),
        Command::Optimize(a) => optimize(a, mode),
        Command::Scan(a) => scan(a, mode),
        Command::Reference(a) => reference(a),
        Command::Sample(a) => sample(a, mode),
        Command::Enumerate(a) => enumerate(a, mode),
        Command::PermDensity(a) => perm_density(a),
        Command::PermOptimize(a) => perm_optimize(a, mode),
        Command::PermCount(a) => perm_count(a, mode),
        Command::CutDistance(a) => cut_distance(a),
    }
}
