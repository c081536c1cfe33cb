//! Experiment configuration: a sectioned `key = value` text format.
//!
//! ```text
//! # comment
//! [problem]
//! kind = sensing
//! m = 40
//! ```
//!
//! Blank lines and lines starting with `#` are ignored, as is anything after
//! a `#` on a value line. Keys outside a section, unknown sections and
//! unknown keys are errors. A key given twice keeps the last value.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::solvers::SolverConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("`{field}` out of range: {message}")]
    OutOfRange { field: &'static str, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Sensing,
    Quadratic,
    Regression,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Sensing => "sensing",
            ProblemKind::Quadratic => "quadratic",
            ProblemKind::Regression => "regression",
        }
    }
}

impl FromStr for ProblemKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sensing" => Ok(ProblemKind::Sensing),
            "quadratic" => Ok(ProblemKind::Quadratic),
            "regression" => Ok(ProblemKind::Regression),
            _ => Err(format!("unknown problem kind `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    Balanced,
    ZeroB,
}

impl InitScheme {
    pub fn name(self) -> &'static str {
        match self {
            InitScheme::Balanced => "balanced",
            InitScheme::ZeroB => "zero_b",
        }
    }
}

impl FromStr for InitScheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "balanced" => Ok(InitScheme::Balanced),
            "zero_b" => Ok(InitScheme::ZeroB),
            _ => Err(format!("unknown init scheme `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub m: usize,
    pub n: usize,
    pub o: usize,
    pub r: usize,
    pub delta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitConfig {
    pub scheme: InitScheme,
    pub scale: f64,
    pub perturbation: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    pub eps_ratio: bool,
    pub balance: bool,
    pub certificate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: String,
    pub run_label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub init: InitConfig,
    pub solver: SolverConfig,
    pub diagnostics: DiagnosticsConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemConfig { kind: ProblemKind::Sensing, m: 40, n: 40, o: 40, r: 4, delta: 0.05, seed: 0 },
            init: InitConfig { scheme: InitScheme::Balanced, scale: 0.9, perturbation: 0.1, seed: 0 },
            solver: SolverConfig::default(),
            diagnostics: DiagnosticsConfig { eps_ratio: true, balance: true, certificate: true },
            output: OutputConfig { directory: "out".into(), run_label: "run".into() },
        }
    }
}

impl ExperimentConfig {
    /// Replaces both the problem and the init seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.problem.seed = seed;
        self.init.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.problem;
        let range = |field, message: String| Err(ConfigError::OutOfRange { field, message });
        for (field, v) in [("m", p.m), ("n", p.n), ("o", p.o), ("r", p.r)] {
            if v == 0 {
                return range(field, "must be positive".into());
            }
        }
        if p.r > p.m.min(p.n) {
            return range("r", format!("{} exceeds min(m, n) = {}", p.r, p.m.min(p.n)));
        }
        if p.o > p.n {
            return range("o", format!("{} exceeds n = {}", p.o, p.n));
        }
        if !(0.0..1.0).contains(&p.delta) {
            return range("delta", format!("{} not in [0, 1)", p.delta));
        }
        if !self.init.scale.is_finite() {
            return range("scale", "must be finite".into());
        }
        if !(self.init.perturbation.is_finite() && self.init.perturbation >= 0.0) {
            return range("perturbation", "must be finite and nonnegative".into());
        }
        let s = &self.solver;
        if !(s.h.is_finite() && s.h > 0.0) {
            return range("h", format!("{} is not a positive step", s.h));
        }
        if !(s.eps.is_finite() && s.eps >= 0.0) {
            return range("eps", format!("{} is not a nonnegative regularizer", s.eps));
        }
        if self.output.run_label.is_empty() || self.output.run_label.contains(['/', '\\']) {
            return range("run_label", "must be a nonempty plain name".into());
        }
        Ok(())
    }
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| ConfigError::Parse { line, message: format!("bad value `{raw}` for `{key}`: {e}") })
}

/// Parses the configuration text, filling omitted keys with defaults, and
/// validates the result.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut section: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Parse { line, message: "unterminated section header".into() })?
                .trim();
            if !["problem", "init", "solver", "diagnostics", "output"].contains(&name) {
                return Err(ConfigError::Parse { line, message: format!("unknown section [{name}]") });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, raw) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse { line, message: format!("expected key = value, got `{content}`") })?;
        let (key, raw) = (key.trim(), raw.trim());
        let sec = section
            .as_deref()
            .ok_or_else(|| ConfigError::Parse { line, message: format!("key `{key}` outside any section") })?;
        match (sec, key) {
            ("problem", "kind") => cfg.problem.kind = value(line, key, raw)?,
            ("problem", "m") => cfg.problem.m = value(line, key, raw)?,
            ("problem", "n") => cfg.problem.n = value(line, key, raw)?,
            ("problem", "o") => cfg.problem.o = value(line, key, raw)?,
            ("problem", "r") => cfg.problem.r = value(line, key, raw)?,
            ("problem", "delta") => cfg.problem.delta = value(line, key, raw)?,
            ("problem", "seed") => cfg.problem.seed = value(line, key, raw)?,
            ("init", "scheme") => cfg.init.scheme = value(line, key, raw)?,
            ("init", "scale") => cfg.init.scale = value(line, key, raw)?,
            ("init", "perturbation") => cfg.init.perturbation = value(line, key, raw)?,
            ("init", "seed") => cfg.init.seed = value(line, key, raw)?,
            ("solver", "scheme") => cfg.solver.scheme = value(line, key, raw)?,
            ("solver", "h") => cfg.solver.h = value(line, key, raw)?,
            ("solver", "iterations") => cfg.solver.iterations = value(line, key, raw)?,
            ("solver", "eps") => cfg.solver.eps = value(line, key, raw)?,
            ("diagnostics", "eps_ratio") => cfg.diagnostics.eps_ratio = value(line, key, raw)?,
            ("diagnostics", "balance") => cfg.diagnostics.balance = value(line, key, raw)?,
            ("diagnostics", "certificate") => cfg.diagnostics.certificate = value(line, key, raw)?,
            ("output", "directory") => cfg.output.directory = raw.to_string(),
            ("output", "run_label") => cfg.output.run_label = raw.to_string(),
            _ => {
                return Err(ConfigError::UnknownKey { line, section: sec.to_string(), key: key.to_string() })
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes every key explicitly; floats use the shortest representation that
/// parses back to the same value.
impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.problem;
        writeln!(f, "[problem]")?;
        writeln!(f, "kind = {}", p.kind.name())?;
        writeln!(f, "m = {}", p.m)?;
        writeln!(f, "n = {}", p.n)?;
        writeln!(f, "o = {}", p.o)?;
        writeln!(f, "r = {}", p.r)?;
        writeln!(f, "delta = {:?}", p.delta)?;
        writeln!(f, "seed = {}", p.seed)?;
        writeln!(f)?;
        writeln!(f, "[init]")?;
        writeln!(f, "scheme = {}", self.init.scheme.name())?;
        writeln!(f, "scale = {:?}", self.init.scale)?;
        writeln!(f, "perturbation = {:?}", self.init.perturbation)?;
        writeln!(f, "seed = {}", self.init.seed)?;
        writeln!(f)?;
        writeln!(f, "[solver]")?;
        writeln!(f, "scheme = {}", self.solver.scheme)?;
        writeln!(f, "h = {:?}", self.solver.h)?;
        writeln!(f, "iterations = {}", self.solver.iterations)?;
        writeln!(f, "eps = {:?}", self.solver.eps)?;
        writeln!(f)?;
        writeln!(f, "[diagnostics]")?;
        writeln!(f, "eps_ratio = {}", self.diagnostics.eps_ratio)?;
        writeln!(f, "balance = {}", self.diagnostics.balance)?;
        writeln!(f, "certificate = {}", self.diagnostics.certificate)?;
        writeln!(f)?;
        writeln!(f, "[output]")?;
        writeln!(f, "directory = {}", self.output.directory)?;
        write!(f, "run_label = {}", self.output.run_label)?;
        writeln!(f)
    }
}
