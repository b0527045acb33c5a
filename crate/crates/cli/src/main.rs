//! `phases`: command-line front end for the constrained-entropy library.
//!
//! Exit codes: 0 on success, 2 when the constraints are infeasible, 1 on
//! usage, config or input errors.

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;

use config::{load_config, Command, Manifest};
use phases_core::Parallelism;

#[derive(Parser, Debug)]
#[command(
    name = "phases",
    version,
    about = "Constrained-entropy optimizers for graphons and permutons"
)]
struct Cli {
    /// Run config (JSON or TOML) or a manifest from an earlier run. Replaces the subcommand and its flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; 1 runs everything on the calling thread.
    #[arg(long, global = true, env = "PHASES_THREADS")]
    threads: Option<usize>,
    /// Where to write the run manifest.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

fn is_infeasible(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(
            c.downcast_ref::<phases_core::Error>(),
            Some(phases_core::Error::Infeasible { .. } | phases_core::Error::Initialization(_))
        )
    })
}

/// Default manifest location: inside a sample output directory, next to
/// any other main output file, else `phases-<command>.manifest.json` in the
/// working directory.
fn manifest_path(cmd: &Command) -> PathBuf {
    match (cmd, cmd.primary_output()) {
        (Command::Sample(a), _) => a.out_dir.join("run.manifest.json"),
        (_, Some(p)) => {
            let mut name = p.file_name().map(|s| s.to_os_string()).unwrap_or_default();
            name.push(".manifest.json");
            p.with_file_name(name)
        }
        (_, None) => PathBuf::from(format!("phases-{}.manifest.json", cmd.name())),
    }
}

fn write_manifest(path: &Path, cmd: &Command, threads: usize) -> Result<()> {
    let m = Manifest {
        tool: "phases".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        threads,
        config: cmd.clone(),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, phases_core::io::to_json_string(&m)?)
        .with_context(|| format!("cannot write manifest {}", path.display()))
}

fn configure_threads(requested: Option<usize>) -> Result<(Parallelism, usize)> {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let n = match requested {
        Some(0) => bail!("--threads must be at least 1"),
        Some(n) => n,
        None => available,
    };
    #[cfg(feature = "parallel")]
    {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let mode = if n == 1 {
        Parallelism::Sequential
    } else {
        Parallelism::Parallel
    };
    Ok((mode, n))
}

fn run(cli: Cli) -> Result<()> {
    let cmd = match (cli.config, cli.command) {
        (Some(path), None) => load_config(&path)?,
        (None, Some(cmd)) => cmd,
        (Some(_), Some(_)) => {
            bail!("--config replaces the subcommand and its flags; give one or the other")
        }
        (None, None) => bail!("no subcommand given (try --help)"),
    };
    let (mode, threads) = configure_threads(cli.threads)?;
    let result = run::execute(&cmd, mode);
    let manifest = cli.manifest.unwrap_or_else(|| manifest_path(&cmd));
    write_manifest(&manifest, &cmd, threads)?;
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_infeasible(&e) { 2 } else { 1 })
        }
    }
}
