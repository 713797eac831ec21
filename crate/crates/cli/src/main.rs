use std::path::PathBuf;
use std::process::ExitCode;

use arcmean::RuleKind;
use clap::{Parser, Subcommand};
use thiserror::Error;

mod commands;
mod config;
mod report;

use config::{override_rule, parse_curve_arg, Command, RunConfig};

/// Arc-distance functionals of closed curves on the unit sphere.
///
/// All angles (colatitude theta, longitude phi, curve parameters) are in
/// radians. Flags override the matching fields of `--config`.
#[derive(Debug, Parser)]
#[command(name = "arcmean", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Sub>,

    /// JSON run config; its `command` is used when no subcommand is given.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Curve spec as inline JSON or a path to a JSON file, e.g.
    /// '{"family": "tennis_ball", "params": {"A": 0.7037}}'.
    #[arg(long, global = true)]
    curve: Option<String>,

    /// Quadrature rule: trapezoid, gauss_legendre or monte_carlo. Applies to
    /// the sphere rule (verify, eval, optimize) or the arc-length rule (calibrate).
    #[arg(long, global = true)]
    rule: Option<RuleKind>,

    /// Rule size; for `sample`, the number of rows.
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Rule tolerance; for `calibrate`, the tolerance on |L - 4pi|.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file (JSON report, or CSV for `sample`); stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Sphere point THETA,PHI (radians) at which `eval` reports S~; repeatable.
    #[arg(long = "point", global = true, value_parser = parse_point)]
    points: Vec<[f64; 2]>,

    /// Optimizer objective: M_tilde, sup_dev_from_half_pi or mean_min.
    #[arg(long, global = true)]
    objective: Option<String>,

    #[arg(long, global = true)]
    max_evals: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Sub {
    /// Run every acceptance check; exit 1 if any fails.
    Verify,
    /// Evaluate the functionals on a curve.
    Eval,
    /// Write curve points as CSV (t,x,y,z).
    Sample,
    /// Calibrate the curve family's scale to arc-length 4pi.
    Calibrate,
    /// Minimize an objective over the curve's family at fixed arc-length 4pi.
    Optimize,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Verify => Command::Verify,
            Sub::Eval => Command::Eval,
            Sub::Sample => Command::Sample,
            Sub::Calibrate => Command::Calibrate,
            Sub::Optimize => Command::Optimize,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or("expected THETA,PHI")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v}: {e}"));
    Ok([parse(a)?, parse(b)?])
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(sub) = cli.command {
        let c = Command::from(sub);
        if let Some(existing) = cfg.command.filter(|e| *e != c) {
            return Err(CliError::Config(format!("config is for `{existing}`, but `{c}` was requested")));
        }
        cfg.command = Some(c);
    }
    let command = cfg.command.ok_or_else(|| CliError::Config("no command given".into()))?;

    if let Some(c) = &cli.curve {
        cfg.curve = Some(parse_curve_arg(c)?);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.optimizer.seed = seed;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if !cli.points.is_empty() {
        cfg.points = cli.points.clone();
    }
    if let Some(o) = &cli.objective {
        cfg.optimizer.objective = serde_json::from_value(serde_json::Value::String(o.clone()))
            .map_err(|_| CliError::Config(format!("unknown objective '{o}'")))?;
    }
    if let Some(m) = cli.max_evals {
        cfg.optimizer.max_evals = m;
    }

    let (kind, n, tol, seed) = (cli.rule, cli.n, cli.tol, cli.seed);
    match command {
        Command::Verify | Command::Eval => {
            cfg.sphere_rule = override_rule(cfg.sphere_rule, kind, n, tol, seed)?;
        }
        Command::Optimize => {
            cfg.optimizer.sphere_rule = override_rule(cfg.optimizer.sphere_rule, kind, n, tol, seed)?;
        }
        Command::Calibrate => {
            let c = &mut cfg.optimizer.calibration;
            c.rule = override_rule(c.rule, kind, n, None, None)?;
            if let Some(t) = tol {
                c.tol = t;
            }
        }
        Command::Sample => {
            if kind.is_some() || tol.is_some() {
                return Err(CliError::Config("`sample` takes no quadrature rule".into()));
            }
            if let Some(n) = n {
                cfg.samples = n;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(&cli).and_then(|cfg| commands::run(&cfg));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("arcmean: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
