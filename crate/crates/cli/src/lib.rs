//! Command-line driver for monitored free-fermion ladder simulations.

pub mod commands;
pub mod config;
pub mod error;
pub mod expr;
pub mod figures;
pub mod manifest;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ladder_core::engine::Checkpoint;
use ladder_core::parallel::with_workers;
use serde_json::json;

use crate::commands::Artifact;
use crate::config::{parse_config, Config};
use crate::error::{CliError, Result};
use crate::figures::FigureId;
use crate::manifest::{unix_now, verify_manifest, Manifest, OutputDir, MANIFEST_SCHEMA, SEED_POLICY};
use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "ladder", version, about = "Monitored free-fermion ladder simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "LADDER_WORKERS", default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trajectory-averaged observables at one parameter point.
    Trajectory(ConfigArgs),
    /// delta S or delta E over a (t12, t2) grid.
    Scan(ConfigArgs),
    /// Negativity against subsystem length.
    Negativity(ConfigArgs),
    /// Trace-distance non-Markovianity from the averaged channel.
    Blp(ConfigArgs),
    /// Quadratic-distance non-Markovianity from trajectory ensembles.
    D2(ConfigArgs),
    /// Scaling fits of a table of averages against L.
    Fit(ConfigArgs),
    /// Tables behind one published figure at desk scale.
    ReproduceFigure(FigureArgs),
    /// Recomputes the digests listed in a manifest.
    Verify {
        /// Output directory holding manifest.json.
        dir: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatChoice {
    Csv,
    Json,
    Both,
}

impl FormatChoice {
    fn formats(self) -> &'static [Format] {
        match self {
            FormatChoice::Csv => &[Format::Csv],
            FormatChoice::Json => &[Format::Json],
            FormatChoice::Both => &[Format::Csv, Format::Json],
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output directory; must not exist or be empty.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatChoice::Csv)]
    pub format: FormatChoice,
    /// Directory for per-trajectory checkpoints, reused across runs.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    #[arg(long, value_parser = parse_figure)]
    pub figure: FigureId,
    /// Multiplies trajectory and pair counts.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn parse_figure(s: &str) -> std::result::Result<FigureId, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

/// What a run produced.
#[derive(Debug)]
pub enum Outcome {
    Written(Box<Manifest>),
    Verified { dir: PathBuf, mismatches: Vec<String> },
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    with_workers(cli.workers, || dispatch(cli))
}

fn checkpoint(args: &OutputArgs, key: &str) -> Result<Option<Checkpoint>> {
    args.checkpoint.as_ref().map(|d| Checkpoint::new(d, key).map_err(CliError::from)).transpose()
}

fn load(args: &ConfigArgs) -> Result<Config> {
    let mut cfg = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.run.base_seed = seed;
        cfg.file.run.seed = Some(seed);
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let started = unix_now();
    let (name, output, artifacts, config, seed, figure) = match &cli.command {
        Command::Verify { dir } => {
            let mismatches = verify_manifest(dir)?;
            return Ok(Outcome::Verified { dir: dir.clone(), mismatches });
        }
        Command::ReproduceFigure(a) => {
            OutputDir::ensure_fresh(&a.output.out)?;
            let cp = checkpoint(&a.output, a.figure.name())?;
            let r = figures::reproduce(a.figure, a.scale, a.seed, cp.as_ref())?;
            ("reproduce-figure", &a.output, r.artifacts, r.settings, a.seed, Some(r.info))
        }
        cmd => {
            let (name, args, f): (_, _, fn(&Config, Option<&Checkpoint>) -> Result<Vec<Artifact>>) = match cmd {
                Command::Trajectory(a) => ("trajectory", a, commands::trajectory),
                Command::Scan(a) => ("scan", a, commands::scan),
                Command::Negativity(a) => ("negativity", a, commands::negativity),
                Command::Blp(a) => ("blp", a, |c, _| commands::blp(c)),
                Command::D2(a) => ("d2", a, |c, _| commands::d2(c)),
                Command::Fit(a) => ("fit", a, |c, _| commands::fit(c)),
                Command::ReproduceFigure(_) | Command::Verify { .. } => unreachable!(),
            };
            let cfg = load(args)?;
            OutputDir::ensure_fresh(&args.output.out)?;
            let cp = checkpoint(&args.output, name)?;
            let artifacts = f(&cfg, cp.as_ref())?;
            let snapshot = json!({
                "source": args.config.display().to_string(),
                "file": cfg.file,
                "params": cfg.params,
                "run": cfg.run,
            });
            (name, &args.output, artifacts, snapshot, cfg.run.base_seed, None)
        }
    };
    let mut dir = OutputDir::create(&output.out)?;
    write_artifacts(&mut dir, &artifacts, output.format.formats())?;
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA,
        tool: "ladder".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: name.into(),
        config,
        seed,
        seed_policy: SEED_POLICY.into(),
        workers: ladder_core::parallel::current_workers(),
        started_unix: started,
        finished_unix: started,
        figure,
        files: Vec::new(),
    };
    Ok(Outcome::Written(Box::new(dir.finish(manifest)?)))
}

pub fn write_artifacts(dir: &mut OutputDir, artifacts: &[Artifact], formats: &[Format]) -> Result<()> {
    for a in artifacts {
        dir.write_table(&a.stem, &a.table, formats, &a.description)?;
    }
    Ok(())
}

/// Output directory of a finished run, for messages.
pub fn describe(outcome: &Outcome, out: Option<&Path>) -> String {
    match outcome {
        Outcome::Written(m) => format!(
            "{} wrote {} file(s) to {}",
            m.command,
            m.files.len(),
            out.map_or_else(String::new, |p| p.display().to_string())
        ),
        Outcome::Verified { dir, mismatches } if mismatches.is_empty() => {
            format!("{}: all digests verify", dir.display())
        }
        Outcome::Verified { dir, mismatches } => {
            format!("{}: mismatched or unlisted files: {}", dir.display(), mismatches.join(", "))
        }
    }
}
