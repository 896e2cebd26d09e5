//! Run configuration: treatments, model and protocol selections, seeds and
//! sizes. Values come from an optional flat `key=value` file with command
//! line flags taking precedence.

use std::path::{Path, PathBuf};

use eigencycle::abm::DecisionMethod;
use eigencycle::dynamics::{DynamicsModel, LogitConvention};
use eigencycle::error::{Error, Result};

/// The five labelled mean-field models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelCode {
    T1,
    T2,
    T3,
    T4,
    T5,
    /// Logit with a user-chosen noise level (`--model logit --noise X`).
    CustomLogit,
}

impl ModelCode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "T1" | "REPLICATOR" => Ok(ModelCode::T1),
            "T2" | "MS-REPLICATOR" | "MSREPLICATOR" => Ok(ModelCode::T2),
            "T3" => Ok(ModelCode::T3),
            "T4" => Ok(ModelCode::T4),
            "T5" => Ok(ModelCode::T5),
            "LOGIT" => Ok(ModelCode::CustomLogit),
            other => Err(Error::InvalidParameter(format!(
                "unknown model {other:?}; expected T1..T5, replicator, ms-replicator or logit"
            ))),
        }
    }

    pub fn label(&self, noise: f64) -> String {
        match self {
            ModelCode::T1 => "T1".into(),
            ModelCode::T2 => "T2".into(),
            ModelCode::T3 => "T3".into(),
            ModelCode::T4 => "T4".into(),
            ModelCode::T5 => "T5".into(),
            ModelCode::CustomLogit => format!("logit[{noise}]"),
        }
    }

    pub fn to_model(self, convention: LogitConvention, noise: f64) -> Result<DynamicsModel> {
        Ok(match self {
            ModelCode::T1 => DynamicsModel::Replicator,
            ModelCode::T2 => DynamicsModel::MsReplicator,
            ModelCode::T3 => DynamicsModel::logit_with(0.001, convention)?,
            ModelCode::T4 => DynamicsModel::logit_with(0.05, convention)?,
            ModelCode::T5 => DynamicsModel::logit_with(300.0, convention)?,
            ModelCode::CustomLogit => DynamicsModel::logit_with(noise, convention)?,
        })
    }
}

/// The five labelled population protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolCode {
    S1,
    S2,
    S3,
    S4,
    S5,
    CustomLogit,
}

impl ProtocolCode {
    pub const ALL: [ProtocolCode; 5] =
        [ProtocolCode::S1, ProtocolCode::S2, ProtocolCode::S3, ProtocolCode::S4, ProtocolCode::S5];

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S1" | "PAIRWISE-DIFFERENCE" => Ok(ProtocolCode::S1),
            "S2" | "POSITIVE-PROPORTIONAL" => Ok(ProtocolCode::S2),
            "S3" => Ok(ProtocolCode::S3),
            "S4" => Ok(ProtocolCode::S4),
            "S5" => Ok(ProtocolCode::S5),
            "LOGIT" => Ok(ProtocolCode::CustomLogit),
            other => Err(Error::InvalidParameter(format!(
                "unknown protocol {other:?}; expected S1..S5, pairwise-difference, \
                 positive-proportional or logit"
            ))),
        }
    }

    pub fn label(&self, noise: f64) -> String {
        match self {
            ProtocolCode::S1 => "S1".into(),
            ProtocolCode::S2 => "S2".into(),
            ProtocolCode::S3 => "S3".into(),
            ProtocolCode::S4 => "S4".into(),
            ProtocolCode::S5 => "S5".into(),
            ProtocolCode::CustomLogit => format!("abm-logit[{noise}]"),
        }
    }

    pub fn to_decision(self, convention: LogitConvention, noise: f64) -> DecisionMethod {
        match self {
            ProtocolCode::S1 => DecisionMethod::PairwiseDifference,
            ProtocolCode::S2 => DecisionMethod::PositiveProportional,
            ProtocolCode::S3 => DecisionMethod::Logit { noise: 0.001, convention },
            ProtocolCode::S4 => DecisionMethod::Logit { noise: 0.05, convention },
            ProtocolCode::S5 => DecisionMethod::Logit { noise: 300.0, convention },
            ProtocolCode::CustomLogit => DecisionMethod::Logit { noise, convention },
        }
    }
}

/// Reference point used when measuring a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OriginChoice {
    /// The model's rest point (the interior equilibrium for the replicator
    /// family).
    #[default]
    FixedPoint,
    /// The empirical mean of the series.
    Mean,
}

impl OriginChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed-point" => Ok(OriginChoice::FixedPoint),
            "mean" => Ok(OriginChoice::Mean),
            other => Err(Error::InvalidParameter(format!(
                "unknown origin {other:?}; expected fixed-point or mean"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub treatments: Vec<f64>,
    pub models: Vec<ModelCode>,
    pub protocols: Vec<ProtocolCode>,
    pub noise: f64,
    pub seed: u64,
    pub steps: usize,
    pub dt: f64,
    pub ticks: usize,
    pub sessions: usize,
    pub periods: usize,
    pub out: PathBuf,
    pub logit_convention: LogitConvention,
    pub origin: OriginChoice,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            treatments: vec![0.25, 4.0],
            models: vec![ModelCode::T1, ModelCode::T2, ModelCode::T3, ModelCode::T4, ModelCode::T5],
            protocols: ProtocolCode::ALL.to_vec(),
            noise: 0.05,
            seed: 1,
            steps: 100_000,
            dt: 0.01,
            ticks: 10_000,
            sessions: 8,
            periods: 1000,
            out: PathBuf::from("out"),
            logit_convention: LogitConvention::Temperature,
            origin: OriginChoice::FixedPoint,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.treatments.is_empty() {
            return Err(Error::InvalidParameter("no treatments selected".into()));
        }
        for &a in &self.treatments {
            if !a.is_finite() || a <= 0.0 {
                return Err(Error::InvalidParameter(format!("treatment a={a} must be positive")));
            }
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::InvalidParameter(format!("dt={} must be positive", self.dt)));
        }
        Ok(())
    }

    /// Applies a flat `key = value` configuration file. Lines starting with
    /// `#` are comments; list values are comma separated.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let (key, value) = l.split_once('=').ok_or_else(|| Error::Parse {
                line,
                detail: format!("expected key=value, got {l:?}"),
            })?;
            self.apply_kv(key.trim(), value.trim(), line)?;
        }
        Ok(())
    }

    fn apply_kv(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let bad = |detail: String| Error::Parse { line, detail };
        match key {
            "a" => {
                self.treatments = split_list(value)
                    .map(|v| v.parse::<f64>().map_err(|e| bad(format!("a: {e}"))))
                    .collect::<Result<_>>()?;
            }
            "models" => {
                self.models = split_list(value).map(ModelCode::parse).collect::<Result<_>>()?;
            }
            "protocols" => {
                self.protocols =
                    split_list(value).map(ProtocolCode::parse).collect::<Result<_>>()?;
            }
            "noise" => self.noise = value.parse().map_err(|e| bad(format!("noise: {e}")))?,
            "seed" => self.seed = value.parse().map_err(|e| bad(format!("seed: {e}")))?,
            "steps" => self.steps = value.parse().map_err(|e| bad(format!("steps: {e}")))?,
            "dt" => self.dt = value.parse().map_err(|e| bad(format!("dt: {e}")))?,
            "ticks" => self.ticks = value.parse().map_err(|e| bad(format!("ticks: {e}")))?,
            "sessions" => {
                self.sessions = value.parse().map_err(|e| bad(format!("sessions: {e}")))?
            }
            "periods" => self.periods = value.parse().map_err(|e| bad(format!("periods: {e}")))?,
            "out" => self.out = PathBuf::from(value),
            "logit-convention" => {
                self.logit_convention = parse_convention(value)?;
            }
            "origin" => self.origin = OriginChoice::parse(value)?,
            other => return Err(bad(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

pub fn parse_convention(s: &str) -> Result<LogitConvention> {
    match s.trim().to_ascii_lowercase().as_str() {
        "temperature" => Ok(LogitConvention::Temperature),
        "gain" => Ok(LogitConvention::Gain),
        other => Err(Error::InvalidParameter(format!(
            "unknown logit convention {other:?}; expected temperature or gain"
        ))),
    }
}

/// Deterministic per-run seed derived from the root seed and a run label, so
/// adding runs never perturbs existing ones.
pub fn child_seed(root: u64, label: &str) -> u64 {
    // FNV-1a over the label, then a splitmix64 finalizer over the pair
    let mut h: u64 = 0xcbf29ce484222325;
    for b in label.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut z = root.wrapping_add(h).wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Treatment tag used in file names, e.g. `a0.25`.
pub fn a_tag(a: f64) -> String {
    format!("a{a}")
}
