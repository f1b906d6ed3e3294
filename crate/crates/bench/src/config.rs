//! Experiment configuration: a plain `key = value` file plus command-line overrides.
//!
//! Lines starting with `#` and blank lines are ignored. Later assignments win, and CLI
//! flags are applied after the file.

use std::fmt;
use std::path::{Path, PathBuf};

use pdsg::ScheduleKind;

use crate::error::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Qcqp,
    ScenarioLp,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Qcqp => "qcqp",
            Family::ScenarioLp => "scenario_lp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "qcqp" => Some(Family::Qcqp),
            "scenario_lp" => Some(Family::ScenarioLp),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Pdsg,
    MirrorProx,
    Reference,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pdsg => "pdsg",
            Method::MirrorProx => "mirror_prox",
            Method::Reference => "reference",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pdsg" => Some(Method::Pdsg),
            "mirror_prox" => Some(Method::MirrorProx),
            "reference" => Some(Method::Reference),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub big_n: usize,
    pub m: usize,
    /// Recourse block size of the scenario family; defaults to `max(1, n/2)`.
    pub second_stage_dim: Option<usize>,
    pub instance_seed: u64,
    /// Load the instance from this file instead of generating it.
    pub instance: Option<PathBuf>,

    pub methods: Vec<Method>,
    pub schedule: ScheduleKind,
    pub alpha: f64,
    pub rho: f64,
    /// Strong-convexity modulus for the schedule; defaults to the computed one.
    pub mu: Option<f64>,
    /// Mirror-prox step constants; steps are `const/sqrt(K)`.
    pub mp_alpha: f64,
    pub mp_rho: f64,

    pub epochs: u64,
    /// Measurement cadence in epochs.
    pub cadence: u64,
    pub seeds: Vec<u64>,

    pub out: PathBuf,
    pub csv_name: String,
    /// Run even if the schedule validator reports a violated condition.
    pub force: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: Family::Qcqp,
            n: 20,
            p: 15,
            big_n: 200,
            m: 200,
            second_stage_dim: None,
            instance_seed: 0,
            instance: None,
            methods: vec![Method::Pdsg],
            schedule: ScheduleKind::FixedHorizon,
            alpha: 1.0,
            rho: 1.0,
            mu: None,
            mp_alpha: 1.0,
            mp_rho: 1.0,
            epochs: 50,
            cadence: 1,
            seeds: vec![0],
            out: PathBuf::from("."),
            csv_name: "results.csv".into(),
            force: false,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, BenchError> {
    value.parse().map_err(|_| BenchError::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, BenchError> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse_num(key, s)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, BenchError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(BenchError::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

impl ExperimentConfig {
    /// Sets one key. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), BenchError> {
        let value = value.trim();
        match key {
            "family" => {
                self.family =
                    Family::parse(value).ok_or_else(|| BenchError::Config(format!("unknown family {value:?}")))?
            }
            "n" => self.n = parse_num(key, value)?,
            "p" => self.p = parse_num(key, value)?,
            "N" => self.big_n = parse_num(key, value)?,
            "m" => self.m = parse_num(key, value)?,
            "second_stage_dim" => self.second_stage_dim = Some(parse_num(key, value)?),
            "seed" => self.instance_seed = parse_num(key, value)?,
            "instance" => self.instance = Some(PathBuf::from(value)),
            "method" | "methods" => {
                self.methods = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| Method::parse(s).ok_or_else(|| BenchError::Config(format!("unknown method {s:?}"))))
                    .collect::<Result<_, _>>()?
            }
            "schedule" => {
                self.schedule = ScheduleKind::parse(value)
                    .ok_or_else(|| BenchError::Config(format!("unknown schedule {value:?}")))?
            }
            "alpha" => self.alpha = parse_num(key, value)?,
            "rho" => self.rho = parse_num(key, value)?,
            "mu" => self.mu = Some(parse_num(key, value)?),
            "mp_alpha" => self.mp_alpha = parse_num(key, value)?,
            "mp_rho" => self.mp_rho = parse_num(key, value)?,
            "epochs" => self.epochs = parse_num(key, value)?,
            "cadence" => self.cadence = parse_num(key, value)?,
            "seeds" => self.seeds = parse_list(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "csv" => self.csv_name = value.to_string(),
            "force" => self.force = parse_bool(key, value)?,
            _ => return Err(BenchError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies every assignment of a `key = value` text.
    pub fn apply_text(&mut self, text: &str) -> Result<(), BenchError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| BenchError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.instance.is_none() && (self.n == 0 || self.m == 0 || self.p == 0 || self.big_n == 0) {
            return Err(BenchError::Usage("dimensions n, p, N, m must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(BenchError::Usage("epochs must be at least 1".into()));
        }
        if self.cadence == 0 {
            return Err(BenchError::Usage("cadence must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(BenchError::Usage("at least one seed is required".into()));
        }
        if self.methods.is_empty() {
            return Err(BenchError::Usage("at least one method is required".into()));
        }
        for (name, v) in [("alpha", self.alpha), ("rho", self.rho), ("mp_alpha", self.mp_alpha), ("mp_rho", self.mp_rho)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(BenchError::Usage(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(mu) = self.mu {
            if !(mu.is_finite() && mu >= 0.0) {
                return Err(BenchError::Usage(format!("mu must be nonnegative, got {mu}")));
            }
        }
        Ok(())
    }
}
