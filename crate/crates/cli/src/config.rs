//! Subcommand arguments. Every struct doubles as the config-file schema:
//! `phases --config run.toml` reads the same fields (kebab-case keys) with
//! the subcommand named by `command`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Density of a pattern in a step graphon or a finite graph.
    Density(DensityArgs),
    /// Entropy of a step graphon.
    Entropy(EntropyArgs),
    /// Maximize entropy under density constraints.
    Optimize(OptimizeArgs),
    /// Optimize on a grid of constraint points; CSV and SVG phase maps.
    Scan(ScanArgs),
    /// Closed-form edge/triangle graphon.
    Reference(ReferenceArgs),
    /// Metropolis sampling of graphs inside density windows.
    Sample(SampleArgs),
    /// Exhaustive count of small graphs inside density windows.
    Enumerate(EnumerateArgs),
    /// Pattern density in a permutation or a grid permuton.
    PermDensity(PermDensityArgs),
    /// Maximize permuton entropy under pattern-density constraints.
    PermOptimize(PermOptimizeArgs),
    /// Exhaustive count of permutations inside pattern-density windows.
    PermCount(PermCountArgs),
    /// Block-permutation upper bound on the cut distance of two graphons.
    CutDistance(CutDistanceArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Density(_) => "density",
            Command::Entropy(_) => "entropy",
            Command::Optimize(_) => "optimize",
            Command::Scan(_) => "scan",
            Command::Reference(_) => "reference",
            Command::Sample(_) => "sample",
            Command::Enumerate(_) => "enumerate",
            Command::PermDensity(_) => "perm-density",
            Command::PermOptimize(_) => "perm-optimize",
            Command::PermCount(_) => "perm-count",
            Command::CutDistance(_) => "cut-distance",
        }
    }

    /// Main output file, if the run writes one.
    pub fn primary_output(&self) -> Option<&Path> {
        match self {
            Command::Density(a) => a.out.as_deref(),
            Command::Entropy(a) => a.out.as_deref(),
            Command::Optimize(a) => a.out.as_deref(),
            Command::Scan(a) => Some(&a.out),
            Command::Reference(a) => a.out.as_deref(),
            Command::Sample(a) => Some(&a.out_dir),
            Command::Enumerate(a) => a.out.as_deref(),
            Command::PermDensity(a) => a.out.as_deref(),
            Command::PermOptimize(a) => a.out.as_deref(),
            Command::PermCount(a) => a.out.as_deref(),
            Command::CutDistance(a) => a.out.as_deref(),
        }
    }
}

/// Two-coordinate targets for a model, or explicit pattern constraints.
#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct TargetArgs {
    /// edge-triangle, edge-kstar:K (K in 1..=5), edge-2star or half-blip.
    #[arg(long)]
    #[serde(default)]
    pub model: Option<String>,
    /// First model coordinate (edge density; t1 for half-blip).
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default)]
    pub eps: Option<f64>,
    /// Second model coordinate (triangle or k-star density; t2 for half-blip).
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default)]
    pub tau: Option<f64>,
    /// Extra constraint NAME=VALUE, e.g. `C4=0.1`; repeatable.
    #[arg(long = "constraint", value_name = "NAME=VALUE")]
    #[serde(default)]
    pub constraints: Vec<String>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DensityArgs {
    /// Step graphon JSON.
    #[arg(long)]
    #[serde(default)]
    pub graphon: Option<PathBuf>,
    /// Finite graph: edge list ("u v" per line, 0-indexed) or JSON adjacency.
    #[arg(long)]
    #[serde(default)]
    pub graph: Option<PathBuf>,
    /// Pattern name (edge, triangle, 3-star, C4, K4, signed-square, ...) or a pattern JSON file.
    #[arg(long)]
    pub pattern: String,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct EntropyArgs {
    #[arg(long)]
    pub graphon: PathBuf,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_starts() -> usize {
    40
}
fn default_max_podality() -> usize {
    6
}
fn default_feas_tol() -> f64 {
    1e-8
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct OptimizeArgs {
    #[command(flatten)]
    #[serde(default)]
    pub target: TargetArgs,
    #[arg(long, default_value_t = default_starts())]
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    /// Largest podality tried by the escalation.
    #[arg(long, default_value_t = default_max_podality())]
    #[serde(default = "default_max_podality")]
    pub max_podality: usize,
    /// Solve at exactly this many blocks instead of escalating.
    #[arg(long)]
    #[serde(default)]
    pub podality: Option<usize>,
    #[arg(long, default_value_t = default_feas_tol())]
    #[serde(default = "default_feas_tol")]
    pub feas_tol: f64,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorBy {
    Entropy,
    Podality,
}

fn default_grid() -> String {
    "20x20".into()
}
fn default_scan_starts() -> usize {
    8
}
fn default_scan_podality() -> usize {
    4
}
fn default_spike() -> f64 {
    10.0
}
fn default_color() -> ColorBy {
    ColorBy::Podality
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScanArgs {
    #[arg(long)]
    pub model: String,
    /// Cells as NXxNY.
    #[arg(long, default_value_t = default_grid())]
    #[serde(default = "default_grid")]
    pub grid: String,
    /// First-coordinate range LO:HI; defaults depend on the model.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default)]
    pub x_range: Option<String>,
    /// Second-coordinate range LO:HI; defaults depend on the model.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default)]
    pub y_range: Option<String>,
    /// Read the second coordinate as an offset from the constant-graphon curve.
    #[arg(long)]
    #[serde(default)]
    pub relative_to_er: bool,
    #[arg(long, default_value_t = default_scan_starts())]
    #[serde(default = "default_scan_starts")]
    pub starts: usize,
    #[arg(long, default_value_t = default_scan_podality())]
    #[serde(default = "default_scan_podality")]
    pub max_podality: usize,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    #[arg(long, default_value_t = default_spike())]
    #[serde(default = "default_spike")]
    pub spike_factor: f64,
    #[arg(long)]
    #[serde(default)]
    pub no_warm_start: bool,
    #[arg(long, value_enum, default_value_t = default_color())]
    #[serde(default = "default_color")]
    pub color: ColorBy,
    /// CSV output, one row per cell.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(default)]
    pub svg: Option<PathBuf>,
    /// Full phase map as JSON.
    #[arg(long)]
    #[serde(default)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ReferenceArgs {
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub tau: f64,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_samples() -> usize {
    10
}
fn one() -> usize {
    1
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(default)]
    pub target: TargetArgs,
    #[arg(long)]
    pub n: usize,
    /// Window half-width.
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = default_samples())]
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    /// Proposals before the first sample (default 50 n²).
    #[arg(long)]
    #[serde(default)]
    pub burn_in: Option<u64>,
    /// Proposals between samples (default n²).
    #[arg(long)]
    #[serde(default)]
    pub interval: Option<u64>,
    #[arg(long, default_value_t = one())]
    #[serde(default = "one")]
    pub chains: usize,
    /// Estimate an M-block structure from each chain's last sample.
    #[arg(long, value_name = "M")]
    #[serde(default)]
    pub blocks: Option<usize>,
    /// Directory for edge lists and the sample manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Run summary JSON (stdout when absent).
    #[arg(long)]
    #[serde(default)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct EnumerateArgs {
    #[command(flatten)]
    #[serde(default)]
    pub target: TargetArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Joint (edge, triangle) histogram CSV.
    #[arg(long)]
    #[serde(default)]
    pub histogram: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Exact,
    Montecarlo,
}

fn default_method() -> MethodArg {
    MethodArg::Exact
}
fn default_mc_samples() -> u64 {
    100_000
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct PermDensityArgs {
    /// Permutation file: one line of integers.
    #[arg(long)]
    #[serde(default)]
    pub perm: Option<PathBuf>,
    /// Grid permuton JSON.
    #[arg(long)]
    #[serde(default)]
    pub permuton: Option<PathBuf>,
    /// Pattern such as 132 or *2*.
    #[arg(long)]
    pub pattern: String,
    #[arg(long, value_enum, default_value_t = default_method())]
    #[serde(default = "default_method")]
    pub method: MethodArg,
    #[arg(long, default_value_t = default_mc_samples())]
    #[serde(default = "default_mc_samples")]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_k() -> usize {
    20
}
fn default_perm_starts() -> usize {
    4
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct PermOptimizeArgs {
    /// Constraint PATTERN=VALUE, e.g. `12=0.6` or `*2*=0.4`; repeatable.
    #[arg(long = "constraint", value_name = "PATTERN=VALUE", required = true)]
    #[serde(default)]
    pub constraints: Vec<String>,
    /// Grid resolution.
    #[arg(long, default_value_t = default_k())]
    #[serde(default = "default_k")]
    pub k: usize,
    #[arg(long, default_value_t = default_perm_starts())]
    #[serde(default = "default_perm_starts")]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct PermCountArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    #[serde(default)]
    pub pattern: Option<String>,
    #[arg(long)]
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Further constraints PATTERN=VALUE; repeatable.
    #[arg(long = "constraint", value_name = "PATTERN=VALUE")]
    #[serde(default)]
    pub constraints: Vec<String>,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CutDistanceArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Also report the truncated d-bar distance over graphs up to this order.
    #[arg(long)]
    #[serde(default)]
    pub dbar: Option<usize>,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// What every run records next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub threads: usize,
    pub config: Command,
}

/// Read a run config (JSON or TOML by extension, JSON otherwise) or a
/// manifest written by an earlier run.
pub fn load_config(path: &Path) -> Result<Command> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let is_toml = path.extension().is_some_and(|e| e == "toml");
    let value: serde_json::Value = if is_toml {
        let t: toml::Value =
            toml::from_str(&text).with_context(|| format!("invalid TOML in {}", path.display()))?;
        serde_json::to_value(t)?
    } else {
        serde_json::from_str(&text)
            .with_context(|| format!("invalid JSON in {}", path.display()))?
    };
    let parsed = if value.get("tool").is_some() && value.get("config").is_some() {
        serde_json::from_value::<Manifest>(value).map(|m| m.config)
    } else {
        serde_json::from_value::<Command>(value)
    };
    parsed.with_context(|| format!("invalid config in {}", path.display()))
}

pub fn parse_range(text: &str, what: &str) -> Result<(f64, f64)> {
    let (a, b) = text
        .split_once(':')
        .with_context(|| format!("{what} must look like LO:HI, got {text:?}"))?;
    let lo: f64 = a
        .trim()
        .parse()
        .with_context(|| format!("{what}: bad number {a:?}"))?;
    let hi: f64 = b
        .trim()
        .parse()
        .with_context(|| format!("{what}: bad number {b:?}"))?;
    Ok((lo, hi))
}

pub fn parse_grid(text: &str) -> Result<(usize, usize)> {
    let Some((a, b)) = text.split_once(['x', 'X']) else {
        bail!("grid must look like NXxNY, got {text:?}");
    };
    Ok((
        a.trim()
            .parse()
            .with_context(|| format!("grid: bad count {a:?}"))?,
        b.trim()
            .parse()
            .with_context(|| format!("grid: bad count {b:?}"))?,
    ))
}

/// Split `NAME=VALUE` at the last `=`.
pub fn parse_assignment(text: &str) -> Result<(&str, f64)> {
    let (name, value) = text
        .rsplit_once('=')
        .with_context(|| format!("constraint must look like NAME=VALUE, got {text:?}"))?;
    let v: f64 = value
        .trim()
        .parse()
        .with_context(|| format!("constraint {text:?}: bad value {value:?}"))?;
    Ok((name.trim(), v))
}
