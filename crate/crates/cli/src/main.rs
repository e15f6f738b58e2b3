//! `subibp`: Monte Carlo experiments for SDEs driven by subordinate
//! Brownian motion.
//!
//! Exit codes: 0 all checks pass, 1 a certification failed, 2 bad input,
//! 3 simulation failure rate exceeded, 4 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use subibp_core::BernsteinSpec;

use crate::commands::{Context, Summary};
use crate::config::{parse_grid, parse_vector, ExperimentConfig};

#[derive(Debug)]
pub enum CliError {
    Schema(String),
    FailureRate(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) | CliError::Io(_) => 2,
            CliError::FailureRate(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Schema(m) => write!(f, "invalid configuration: {m}"),
            CliError::FailureRate(m) => write!(f, "simulation failure rate exceeded: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<subibp_core::Error> for CliError {
    fn from(e: subibp_core::Error) -> Self {
        use subibp_core::Error as E;
        match e {
            E::FailureRate { .. } => CliError::FailureRate(e.to_string()),
            E::Parameter(_) | E::Dimension { .. } | E::Singular(_) => CliError::Schema(e.to_string()),
            E::Io(_) | E::Csv(_) => CliError::Io(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "subibp", version, about = "Integration-by-parts weights and bounds for subordinate SDEs")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of Monte Carlo paths.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Euler steps per path.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Stable index; switches the subordinator to the stable one.
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Horizon T.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Also write summary.json.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Args, Default)]
struct FunctionArgs {
    /// Test function, e.g. sin, gauss, 2+sin, 1+0.5gauss (repeatable).
    #[arg(long = "f")]
    f: Vec<String>,
    /// Direction as a comma list, e.g. 1 or 0.5,-1 (repeatable).
    #[arg(long, allow_hyphen_values = true)]
    v: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths and report terminal statistics.
    Simulate {
        /// Write this many full paths as CSV.
        #[arg(long)]
        dump_paths: Option<usize>,
    },
    /// Check P_T(∇_v f) = E[f(X_T) M_T^v / S(T)] on common paths.
    VerifyIbp {
        #[command(flatten)]
        fa: FunctionArgs,
    },
    /// Certify the gradient, entropy and L^p bounds.
    Bounds {
        #[command(flatten)]
        fa: FunctionArgs,
        #[arg(long)]
        delta: Vec<f64>,
        #[arg(long)]
        p: Vec<f64>,
        /// Horizons for the L^p constant fit.
        #[arg(long)]
        lp_horizons: Vec<f64>,
    },
    /// Certify the shift-Harnack inequality and the heat-kernel bound.
    Harnack {
        #[command(flatten)]
        fa: FunctionArgs,
        #[arg(long)]
        p: Vec<f64>,
    },
    /// Kernel density of X_T and its log-derivative.
    Density {
        #[arg(long, allow_hyphen_values = true)]
        v: Vec<String>,
        /// Points: lo:hi:n, or a comma list per point (repeatable).
        #[arg(long, allow_hyphen_values = true)]
        grid: Vec<String>,
        #[arg(long)]
        bandwidth: Option<f64>,
    },
    /// Negative moments E S(T)^(-p): closed form against Monte Carlo.
    Moments {
        #[arg(long)]
        p: Vec<f64>,
    },
    /// Weight gap between a sampled path and its small-jump truncations.
    TruncationStudy {
        #[arg(long)]
        eps: Vec<f64>,
        #[arg(long)]
        streams: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        v: Vec<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::VerifyIbp { .. } => "verify-ibp",
            Command::Bounds { .. } => "bounds",
            Command::Harnack { .. } => "harnack",
            Command::Density { .. } => "density",
            Command::Moments { .. } => "moments",
            Command::TruncationStudy { .. } => "truncation-study",
        }
    }
}

fn set_if_given<T: Clone>(target: &mut Vec<T>, given: &[T]) {
    if !given.is_empty() {
        *target = given.to_vec();
    }
}

fn set_directions(cfg: &mut ExperimentConfig, v: &[String]) -> Result<(), CliError> {
    if !v.is_empty() {
        cfg.task.v = v.iter().map(|s| parse_vector(s)).collect::<Result<_, _>>()?;
    }
    Ok(())
}

fn apply_overrides(cfg: &mut ExperimentConfig, common: &Common, command: &Command) -> Result<(), CliError> {
    if let Some(s) = common.seed {
        cfg.run.seed = s;
    }
    if let Some(n) = common.paths {
        cfg.run.n_paths = n;
    }
    if let Some(n) = common.steps {
        cfg.run.n_steps = n;
    }
    if let Some(w) = common.workers {
        cfg.run.workers = w;
    }
    if let Some(dir) = &common.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(alpha) = common.alpha {
        cfg.model.subordinator = BernsteinSpec::Stable { alpha };
    }
    if let Some(t) = common.horizon {
        cfg.model.horizon = t;
    }
    cfg.output.json |= common.json;

    match command {
        Command::Simulate { dump_paths } => {
            if let Some(n) = dump_paths {
                cfg.task.dump_paths = *n;
            }
        }
        Command::VerifyIbp { fa } => {
            set_if_given(&mut cfg.task.f, &fa.f);
            set_directions(cfg, &fa.v)?;
        }
        Command::Bounds { fa, delta, p, lp_horizons } => {
            set_if_given(&mut cfg.task.f, &fa.f);
            set_directions(cfg, &fa.v)?;
            set_if_given(&mut cfg.task.delta, delta);
            set_if_given(&mut cfg.task.p, p);
            set_if_given(&mut cfg.task.lp_horizons, lp_horizons);
        }
        Command::Harnack { fa, p } => {
            set_if_given(&mut cfg.task.f, &fa.f);
            set_directions(cfg, &fa.v)?;
            set_if_given(&mut cfg.task.p, p);
        }
        Command::Density { v, grid, bandwidth } => {
            set_directions(cfg, v)?;
            if !grid.is_empty() {
                cfg.task.eval_grid = parse_grid(grid)?;
            }
            if bandwidth.is_some() {
                cfg.task.bandwidth = *bandwidth;
            }
        }
        Command::Moments { p } => set_if_given(&mut cfg.task.moment_p, p),
        Command::TruncationStudy { eps, streams, v } => {
            set_if_given(&mut cfg.task.eps, eps);
            set_directions(cfg, v)?;
            if let Some(k) = streams {
                cfg.task.streams = *k;
            }
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Summary, CliError> {
    let mut cfg = ExperimentConfig::load(cli.common.config.as_deref())?;
    apply_overrides(&mut cfg, &cli.common, &cli.command)?;
    cfg.validate()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.workers)
        .build_global()
        .map_err(|e| CliError::Io(format!("worker pool: {e}")))?;

    let hash = cfg.config_hash();
    let ctx = Context { cfg: &cfg, hash: &hash };
    let mut summary = match &cli.command {
        Command::Simulate { .. } => commands::simulate_cmd(&ctx)?,
        Command::VerifyIbp { .. } => commands::verify_ibp(&ctx)?,
        Command::Bounds { .. } => commands::bounds(&ctx)?,
        Command::Harnack { .. } => commands::harnack(&ctx)?,
        Command::Density { .. } => commands::density(&ctx)?,
        Command::Moments { .. } => commands::moments(&ctx)?,
        Command::TruncationStudy { .. } => commands::truncation_study(&ctx)?,
    };
    summary.lines.insert(
        0,
        format!(
            "{} seed={} paths={} steps={} config_hash={hash}",
            cli.command.name(),
            cfg.run.seed,
            cfg.run.n_paths,
            cfg.run.n_steps
        ),
    );
    commands::write_summary(&cfg.output.dir, cli.command.name(), &hash, &summary, cfg.output.json)?;
    Ok(summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            if summary.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
