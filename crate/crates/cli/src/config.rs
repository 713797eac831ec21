use std::fmt;
use std::path::{Path, PathBuf};

use arcmean::curves::CurveSpec;
use arcmean::{OptimizerConfig, QuadratureRule, RuleKind};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Verify,
    Eval,
    Sample,
    Calibrate,
    Optimize,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Verify => "verify",
            Command::Eval => "eval",
            Command::Sample => "sample",
            Command::Calibrate => "calibrate",
            Command::Optimize => "optimize",
        };
        f.write_str(s)
    }
}

/// Everything a run depends on. Reports embed the resolved config, so a
/// report's `config` can be fed back with `--config` to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub curve: Option<CurveSpec>,
    /// Rule for integrals along the curve.
    pub curve_rule: QuadratureRule,
    /// Rule for integrals over the sphere.
    pub sphere_rule: QuadratureRule,
    pub optimizer: OptimizerConfig,
    /// Sphere points `[theta, phi]` at which `eval` reports S~.
    pub points: Vec<[f64; 2]>,
    /// Rows written by `sample`.
    pub samples: usize,
    /// Monte Carlo points for the mean nearest distance.
    pub mean_min_points: usize,
    pub seed: u64,
    /// Where the report goes; not part of the embedded config, so reports
    /// written to different places stay byte-identical.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            curve: None,
            curve_rule: QuadratureRule::curve_default(),
            sphere_rule: QuadratureRule::sphere_default(),
            optimizer: OptimizerConfig::default(),
            points: Vec::new(),
            samples: 1024,
            mean_min_points: 10_000,
            seed: 42,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    /// Checks that the config is complete for its command.
    pub fn validate(&self) -> Result<(), CliError> {
        let command = self.command.ok_or_else(|| CliError::Config("no command given".into()))?;
        let needs_curve = matches!(command, Command::Eval | Command::Sample | Command::Calibrate | Command::Optimize);
        match &self.curve {
            Some(spec) => {
                spec.build().map_err(|e| CliError::Config(format!("curve: {e}")))?;
            }
            None if needs_curve => return Err(CliError::Config(format!("`{command}` needs a curve (--curve)"))),
            None => {}
        }
        if command == Command::Sample && self.samples < 2 {
            return Err(CliError::Config(format!("sample needs at least 2 rows, got {}", self.samples)));
        }
        if command == Command::Eval && self.mean_min_points < 100 {
            return Err(CliError::Config("mean_min_points must be at least 100".into()));
        }
        for p in &self.points {
            arcmean::SpherePoint::new(p[0], p[1]).map_err(|e| CliError::Config(format!("point {p:?}: {e}")))?;
        }
        self.optimizer.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }
}

/// Reads `--curve`: inline JSON when it starts with `{`, otherwise a path.
pub fn parse_curve_arg(arg: &str) -> Result<CurveSpec, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| CliError::Config(format!("cannot read curve {arg}: {e}")))?
    };
    CurveSpec::parse(&text).map_err(|e| CliError::Config(format!("curve: {e}")))
}

/// Applies `--rule`, `--n`, `--tol` and `--seed` to a rule. A new kind
/// without `--n` starts from that kind's default size.
pub fn override_rule(
    rule: QuadratureRule,
    kind: Option<RuleKind>,
    n: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
) -> Result<QuadratureRule, CliError> {
    let new_kind = kind.unwrap_or(rule.kind());
    let n = n.unwrap_or(if new_kind == rule.kind() {
        rule.n()
    } else {
        match new_kind {
            RuleKind::PeriodicTrapezoid => 512,
            RuleKind::GaussLegendre => 128,
            RuleKind::MonteCarlo => 10_000,
        }
    });
    let r = QuadratureRule::new(new_kind, n, tol.unwrap_or(rule.tol()))
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(r.with_seed(seed.unwrap_or(rule.seed())))
}
