use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use heavyball::lyapunov::MIN_POINTS;
use heavyball::{Distribution, UpdateRule};

use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Linreg,
    Logreg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Hb,
    Cyclic,
    Stochastic,
    Decentralized,
}

/// Descent factor: a fixed `c` or the unit-step preset (`γ = 1/L`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepChoice {
    Paper,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialPoint {
    Zero,
    Gaussian,
}

macro_rules! keyword_enum {
    ($ty:ident { $($name:literal => $variant:ident),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($name => Ok(Self::$variant),)+
                    other => Err(format!(
                        "unknown value `{other}` (expected one of: {})",
                        [$($name),+].join(", ")
                    )),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self {
                    $(Self::$variant => $name,)+
                })
            }
        }
    };
}

keyword_enum!(ProblemKind { "linreg" => Linreg, "logreg" => Logreg });
keyword_enum!(SolverKind {
    "hb" => Hb,
    "cyclic" => Cyclic,
    "stochastic" => Stochastic,
    "decentralized" => Decentralized,
});
keyword_enum!(InitialPoint { "zero" => Zero, "gaussian" => Gaussian });

impl FromStr for StepChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("paper") {
            return Ok(Self::Paper);
        }
        s.parse::<f64>()
            .map(Self::Fixed)
            .map_err(|_| format!("`{s}` is neither a number nor `paper`"))
    }
}

impl fmt::Display for StepChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Paper => f.write_str("paper"),
            Self::Fixed(c) => write!(f, "{c}"),
        }
    }
}

impl SolverKind {
    pub fn rule(self) -> UpdateRule {
        match self {
            Self::Cyclic => UpdateRule::Cyclic,
            Self::Stochastic => UpdateRule::Stochastic,
            Self::Hb | Self::Decentralized => UpdateRule::Full,
        }
    }

    pub fn default_blocks(self) -> usize {
        match self {
            Self::Hb | Self::Decentralized => 1,
            Self::Cyclic => 4,
            Self::Stochastic => 10,
        }
    }
}

/// Everything an experiment needs. `n` is the number of features and `m`
/// the number of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub data: Distribution,
    pub solver: SolverKind,
    pub n: usize,
    pub m: usize,
    pub betas: Vec<f64>,
    /// Power-decay exponent; each `β` becomes `β_k = β/k^θ`.
    pub theta: Option<f64>,
    pub c: StepChoice,
    pub iters: usize,
    pub seed: u64,
    pub lambda: f64,
    pub replicates: usize,
    pub blocks: Option<usize>,
    pub network: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub x0: InitialPoint,
    pub out: PathBuf,
    pub svg: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Linreg,
            data: Distribution::Gaussian,
            solver: SolverKind::Hb,
            n: 100,
            m: 150,
            betas: vec![0.3],
            theta: None,
            c: StepChoice::Paper,
            iters: 1000,
            seed: 1,
            lambda: 1e-3,
            replicates: 200,
            blocks: None,
            network: None,
            alpha: None,
            x0: InitialPoint::Zero,
            out: PathBuf::from("out"),
            svg: false,
        }
    }
}

pub const KEYS: &[&str] = &[
    "problem",
    "data",
    "solver",
    "n",
    "m",
    "beta",
    "theta",
    "c",
    "iters",
    "seed",
    "lambda",
    "replicates",
    "blocks",
    "network",
    "alpha",
    "x0",
    "out",
    "svg",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::usage(format!("{key} = {value}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(CliError::usage(format!(
            "{key} = {other}: expected true or false"
        ))),
    }
}

fn optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    let v = value.trim();
    if v.is_empty() || v.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        parse(key, v).map(Some)
    }
}

impl ExperimentConfig {
    /// Sets one field from its textual form.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "problem" => self.problem = parse(key, value)?,
            "data" => self.data = parse(key, value)?,
            "solver" => self.solver = parse(key, value)?,
            "n" => self.n = parse(key, value)?,
            "m" => self.m = parse(key, value)?,
            "beta" => {
                self.betas = value
                    .split(',')
                    .map(|b| parse::<f64>(key, b))
                    .collect::<Result<_>>()?
            }
            "theta" => self.theta = optional(key, value)?,
            "c" => self.c = parse(key, value)?,
            "iters" => self.iters = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "replicates" => self.replicates = parse(key, value)?,
            "blocks" => self.blocks = optional(key, value)?,
            "network" => self.network = optional(key, value)?,
            "alpha" => self.alpha = optional(key, value)?,
            "x0" => self.x0 = parse(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "svg" => self.svg = parse_bool(key, value)?,
            other => {
                return Err(CliError::usage(format!(
                    "unknown key `{other}` (known keys: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies a flat `key = value` text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!("line {}: expected `key = value`, got `{line}`", idx + 1))
            })?;
            self.apply(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }

    /// The configuration in the file format; loading it back gives `self`.
    pub fn to_text(&self) -> String {
        let betas = self
            .betas
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(",");
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        let mut out = String::new();
        let pairs = [
            ("problem", self.problem.to_string()),
            ("data", self.data.to_string()),
            ("solver", self.solver.to_string()),
            ("n", self.n.to_string()),
            ("m", self.m.to_string()),
            ("beta", betas),
            ("theta", opt(self.theta.map(|t| t.to_string()))),
            ("c", self.c.to_string()),
            ("iters", self.iters.to_string()),
            ("seed", self.seed.to_string()),
            ("lambda", self.lambda.to_string()),
            ("replicates", self.replicates.to_string()),
            ("blocks", opt(self.blocks.map(|b| b.to_string()))),
            (
                "network",
                opt(self.network.as_ref().map(|p| p.display().to_string())),
            ),
            ("alpha", opt(self.alpha.map(|a| a.to_string()))),
            ("x0", self.x0.to_string()),
            ("out", self.out.display().to_string()),
            ("svg", self.svg.to_string()),
        ];
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn blocks(&self) -> usize {
        self.blocks.unwrap_or_else(|| self.solver.default_blocks())
    }

    pub fn is_sweep(&self) -> bool {
        self.betas.len() > 1
    }

    /// Checks the constraints that do not need the data. Parameter bounds
    /// that depend on the network are checked when the run is built.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::usage(msg));
        if self.n == 0 || self.m == 0 {
            return bad(format!("n = {} and m = {} must be positive", self.n, self.m));
        }
        if self.iters + 1 < MIN_POINTS {
            return bad(format!(
                "iters = {} leaves fewer than {MIN_POINTS} records",
                self.iters
            ));
        }
        if self.betas.is_empty() {
            return bad("beta needs at least one value".into());
        }
        let blocks = self.blocks();
        if blocks == 0 || blocks > self.n {
            return bad(format!("blocks = {blocks} must lie in 1..={}", self.n));
        }
        if self.problem == ProblemKind::Logreg && !(self.lambda > 0.0) {
            return bad(format!("lambda = {} must be positive for logreg", self.lambda));
        }
        if let Some(theta) = self.theta {
            if !(theta > 1.0) {
                return bad(format!("theta = {theta} must exceed 1 for a summable schedule"));
            }
            if self.solver == SolverKind::Decentralized {
                return bad("theta: the decentralized scheme supports constant beta only".into());
            }
        }
        if self.solver == SolverKind::Stochastic && self.replicates < 2 {
            return bad(format!("replicates = {} must be at least 2", self.replicates));
        }
        if self.network.is_some() && self.solver != SolverKind::Decentralized {
            return bad("network applies to the decentralized solver only".into());
        }
        if let Some(alpha) = self.alpha {
            if !(alpha > 0.0) {
                return bad(format!("alpha = {alpha} must be positive"));
            }
        }
        let root_m = (blocks as f64).sqrt();
        for &beta in &self.betas {
            if !(beta >= 0.0) {
                return bad(format!("beta = {beta} must be non-negative"));
            }
            let scaled = match self.solver {
                SolverKind::Stochastic => beta / root_m,
                _ => beta,
            };
            if self.solver != SolverKind::Decentralized {
                if scaled >= 1.0 {
                    return bad(match self.solver {
                        SolverKind::Stochastic => {
                            format!("beta = {beta} violates beta < sqrt(blocks) = {root_m}")
                        }
                        _ => format!("beta = {beta} violates beta < 1"),
                    });
                }
                match self.c {
                    StepChoice::Paper if scaled >= 0.5 => {
                        return bad(match self.solver {
                            SolverKind::Stochastic => {
                                format!(
                                    "c = paper requires beta < sqrt(blocks)/2 = {}, got {beta}",
                                    root_m / 2.0
                                )
                            }
                            _ => format!("c = paper requires beta < 0.5, got {beta}"),
                        })
                    }
                    StepChoice::Fixed(c) if !(c > 0.0 && c < 1.0) => {
                        return bad(format!("c = {c} must lie in (0, 1)"));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

/// Heavy-ball experiment runner.
///
/// Settings come from the defaults, then `--config`, then explicit flags.
#[derive(Debug, Parser)]
#[command(name = "heavyball", version, about)]
pub struct Cli {
    /// Flat `key = value` file; flags given here override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// linreg | logreg
    #[arg(long)]
    pub problem: Option<String>,
    /// gaussian | bernoulli
    #[arg(long)]
    pub data: Option<String>,
    /// hb | cyclic | stochastic | decentralized
    #[arg(long)]
    pub solver: Option<String>,
    /// Number of features.
    #[arg(long)]
    pub n: Option<String>,
    /// Number of samples.
    #[arg(long)]
    pub m: Option<String>,
    /// Momentum, or a comma-separated list for a sweep.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// Power-decay exponent: beta_k = beta / k^theta.
    #[arg(long)]
    pub theta: Option<String>,
    /// Descent factor in (0, 1), or `paper` for gamma = 1/L.
    #[arg(long)]
    pub c: Option<String>,
    #[arg(long)]
    pub iters: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Logistic ridge weight.
    #[arg(long)]
    pub lambda: Option<String>,
    /// Stochastic replicates (seeds seed, seed+1, ...).
    #[arg(long)]
    pub replicates: Option<String>,
    /// Coordinate blocks (default 1, 4 for cyclic, 10 for stochastic).
    #[arg(long)]
    pub blocks: Option<String>,
    /// Edge-list file: node count, then one `i j` pair per line.
    #[arg(long)]
    pub network: Option<String>,
    /// Decentralized step (default 0.9 of its upper bound).
    #[arg(long)]
    pub alpha: Option<String>,
    /// zero | gaussian
    #[arg(long)]
    pub x0: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
    /// Also write plot.svg.
    #[arg(long)]
    pub svg: bool,
}

impl Cli {
    pub fn into_config(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("problem", self.problem),
            ("data", self.data),
            ("solver", self.solver),
            ("n", self.n),
            ("m", self.m),
            ("beta", self.beta),
            ("theta", self.theta),
            ("c", self.c),
            ("iters", self.iters),
            ("seed", self.seed),
            ("lambda", self.lambda),
            ("replicates", self.replicates),
            ("blocks", self.blocks),
            ("network", self.network),
            ("alpha", self.alpha),
            ("x0", self.x0),
            ("out", self.out),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.apply(key, &v)?;
            }
        }
        if self.svg {
            cfg.svg = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
