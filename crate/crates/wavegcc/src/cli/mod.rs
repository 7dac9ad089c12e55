//! Config-driven experiment runner: `wavegcc run | validate | list`.
//!
//! A run writes one CSV per table, `manifest.json` (config echo, library
//! version, wall time, assertion outcomes, summary) and `plot.py` into the
//! output directory. The exit status is nonzero iff an assertion fails.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{ExperimentConfig, ExperimentKind, GramianMode, ManifoldSpec, Params, SolverSpec};
pub use output::{Assertion, Cell, Table};

use crate::error::{Error, Result};
use crate::gramian::{DENSE_LIMIT, MAX_GRID};
use clap::{Parser, Subcommand};
use serde::Serialize;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Memory above which `validate` reports an error.
pub const MEMORY_BUDGET: u64 = 4 << 30;

pub fn list_experiments() -> Vec<(&'static str, &'static str)> {
    ExperimentKind::ALL.iter().map(|k| (k.name(), k.description())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Info,
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub level: Level,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    /// Dimension `2 (2K+1)^2` of the Gramian.
    pub matrix_dim: u64,
    pub dense: bool,
    pub estimated_bytes: u64,
    pub diagnostics: Vec<Diagnostic>,
}

impl Validation {
    pub fn ok(&self) -> bool {
        self.diagnostics.iter().all(|d| d.level != Level::Error)
    }
}

/// Dry run: builds the manifold and region, and estimates the Gramian
/// dimension and memory.
pub fn validate(cfg: &ExperimentConfig) -> Validation {
    let mut diags = Vec::new();
    let mut push = |level, message: String| diags.push(Diagnostic { level, message });
    match cfg.manifold.build() {
        Ok(m) => {
            if let Err(e) = cfg.region.validate_for(&m) {
                push(Level::Error, format!("region: {e}"));
            }
            if cfg.experiment.needs_flat_torus() && !matches!(m, crate::Manifold::FlatTorus { .. }) {
                push(Level::Error, format!("{} needs a flat torus, got {}", cfg.experiment.name(), m.name()));
            }
        }
        Err(e) => push(Level::Error, format!("manifold: {e}")),
    }
    let sv = &cfg.solver;
    let side = 2 * sv.k_max as u64 + 1;
    let n = side * side;
    let dim = 2 * n;
    let dense = match sv.gramian {
        GramianMode::Dense => true,
        GramianMode::MatrixFree => false,
        GramianMode::Auto => dim <= DENSE_LIMIT as u64,
    };
    let uses_gramian = matches!(
        cfg.experiment,
        ExperimentKind::LowerBound | ExperimentKind::Shell | ExperimentKind::BlowupScan | ExperimentKind::Hum
    );
    let bytes = if !uses_gramian {
        0
    } else if dense {
        dim.saturating_mul(dim).saturating_mul(16)
    } else {
        (sv.eig_max_iter as u64 + 4).saturating_mul(dim).saturating_mul(16)
            + (MAX_GRID as u64).pow(2).saturating_mul(16)
    };
    if uses_gramian {
        push(
            Level::Info,
            format!(
                "Gramian dimension {dim} ({}), about {:.3} GiB",
                if dense { "dense" } else { "matrix-free" },
                bytes as f64 / (1u64 << 30) as f64
            ),
        );
        if bytes > MEMORY_BUDGET {
            push(
                Level::Error,
                format!(
                    "estimated memory {:.1} GiB exceeds the memory budget of {} GiB; use gramian = \"matrix-free\" or a smaller k_max",
                    bytes as f64 / (1u64 << 30) as f64,
                    MEMORY_BUDGET >> 30
                ),
            );
        } else if dense && dim > DENSE_LIMIT as u64 {
            push(Level::Error, format!("dense assembly is limited to dimension {DENSE_LIMIT}"));
        }
        if !dense && dim > 20_000 {
            push(Level::Warning, format!("matrix-free Gramian of dimension {dim}: each product is slow"));
        }
    }
    if !(sv.dt > 0.0 && sv.dt.is_finite()) {
        push(Level::Error, format!("solver.dt must be positive, got {}", sv.dt));
    }
    if sv.nx == 0 || sv.na == 0 {
        push(Level::Error, "solver.nx and solver.na must be positive".into());
    }
    let lot = &cfg.lower_order;
    if let Err(e) = lot.validate() {
        push(Level::Error, format!("lower_order: {e}"));
    }
    let has_lot = !(lot.b0.is_zero() && lot.b1.iter().all(|f| f.is_zero()));
    if has_lot && cfg.experiment != ExperimentKind::KofTScan {
        push(Level::Warning, format!("lower_order is only read by kofT-scan; {} ignores it", cfg.experiment.name()));
    }
    Validation { matrix_dim: if uses_gramian { dim } else { 0 }, dense, estimated_bytes: bytes, diagnostics: diags }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableEntry {
    pub name: String,
    pub file: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub tables: Vec<TableEntry>,
    pub plot_script: String,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
    pub summary: serde_json::Value,
    pub wall_time_seconds: f64,
}

/// Runs the configured experiment and writes its outputs into `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    let start = Instant::now();
    let outcome = experiments::run_experiment(cfg)?;
    std::fs::create_dir_all(out)?;
    for t in &outcome.tables {
        output::write_text(&out.join(t.file_name()), &t.to_csv())?;
    }
    output::write_text(&out.join("plot.py"), &output::plot_script(&outcome.tables))?;
    let manifest = Manifest {
        experiment: cfg.experiment.name().into(),
        version: crate::VERSION.into(),
        seed: cfg.seed,
        config: cfg.clone(),
        tables: outcome
            .tables
            .iter()
            .map(|t| TableEntry { name: t.name.clone(), file: t.file_name(), rows: t.rows.len() })
            .collect(),
        plot_script: "plot.py".into(),
        passed: outcome.assertions.iter().all(|a| a.passed),
        assertions: outcome.assertions,
        summary: outcome.summary,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    output::write_text(&out.join("manifest.json"), &(text + "\n"))?;
    Ok(manifest)
}

#[derive(Debug, Parser)]
#[command(name = "wavegcc", version, about = "Geometric control and observability experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker thread cap.
        #[arg(long)]
        threads: Option<usize>,
        /// Seed (overrides `seed` in the config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse a config and estimate its resources without running it.
    Validate {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the available experiments.
    List,
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    Ok(())
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Entry point of the `wavegcc` binary; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            // the message already carries its context chain
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::List => {
            for (name, desc) in list_experiments() {
                println!("{name:<16} {desc}");
            }
            Ok(0)
        }
        Command::Validate { config, threads, seed, .. } => {
            set_threads(threads)?;
            let cfg = load(&config, seed)?;
            let v = validate(&cfg);
            for d in &v.diagnostics {
                let tag = match d.level {
                    Level::Info => "info",
                    Level::Warning => "warning",
                    Level::Error => "error",
                };
                println!("{tag}: {}", d.message);
            }
            println!("{}: {}", config.display(), if v.ok() { "ok" } else { "invalid" });
            Ok(if v.ok() { 0 } else { 1 })
        }
        Command::Run { config, out, threads, seed } => {
            set_threads(threads)?;
            let cfg = load(&config, seed)?;
            let v = validate(&cfg);
            if !v.ok() {
                for d in v.diagnostics.iter().filter(|d| d.level == Level::Error) {
                    eprintln!("error: {}", d.message);
                }
                return Ok(1);
            }
            let dir =
                out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out").join(cfg.experiment.name()));
            let m = run(&cfg, &dir)?;
            for a in &m.assertions {
                println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
            }
            println!("{} -> {} ({:.2} s)", m.experiment, dir.display(), m.wall_time_seconds);
            Ok(if m.passed { 0 } else { 1 })
        }
    }
}
