use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::net::DEFAULT_HEAD_HIDDEN;

/// Default GRL scale.
pub const DEFAULT_LAMBDA: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Mode {
    Teacher,
    Ts,
    Ats,
    Mfa,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Teacher => "teacher",
            Mode::Ts => "ts",
            Mode::Ats => "ats",
            Mode::Mfa => "mfa",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "teacher" => Ok(Mode::Teacher),
            "ts" => Ok(Mode::Ts),
            "ats" => Ok(Mode::Ats),
            "mfa" => Ok(Mode::Mfa),
            other => Err(Error::config(format!("unknown mode `{other}` (expected teacher, ts, ats or mfa)"))),
        }
    }

    pub fn is_adversarial(self) -> bool {
        matches!(self, Mode::Ats | Mode::Mfa)
    }
}

impl core::fmt::Display for Mode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub mode: Mode,
    pub lambda: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
    /// Factors that get a condition head (ats: exactly one; mfa: one or more).
    pub factors: Vec<String>,
    /// Per-factor weights on the condition losses; empty means all 1.
    pub factor_weights: Vec<f64>,
    /// Epochs between metric records; 0 records only the final epoch.
    pub eval_every: usize,
    /// Teacher hidden widths (teacher mode only).
    pub hidden_dims: Vec<usize>,
    /// Hidden layers in the feature extractor; `None` taps after the last one.
    pub split_index: Option<usize>,
    pub head_hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Ts,
            lambda: DEFAULT_LAMBDA,
            lr: 0.05,
            batch_size: 32,
            epochs: 10,
            seed: 0,
            shuffle: true,
            factors: Vec::new(),
            factor_weights: Vec::new(),
            eval_every: 0,
            hidden_dims: alloc::vec![32, 32],
            split_index: None,
            head_hidden: DEFAULT_HEAD_HIDDEN.to_vec(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::config(format!("lr must be positive, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if self.mode.is_adversarial() && (!(self.lambda >= 0.0) || !self.lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        match self.mode {
            Mode::Ats if self.factors.len() != 1 => {
                return Err(Error::config(format!("mode ats needs exactly one factor, got {:?}", self.factors)));
            }
            Mode::Mfa if self.factors.is_empty() => {
                return Err(Error::config("mode mfa needs at least one factor"));
            }
            _ => {}
        }
        if self.mode.is_adversarial() {
            if !self.factor_weights.is_empty() && self.factor_weights.len() != self.factors.len() {
                return Err(Error::config("factor_weights must have one entry per selected factor"));
            }
            if self.factor_weights.iter().any(|w| !(*w >= 0.0)) {
                return Err(Error::config("factor_weights must be nonnegative"));
            }
            for (i, f) in self.factors.iter().enumerate() {
                if self.factors[..i].contains(f) {
                    return Err(Error::config(format!("factor `{f}` selected twice")));
                }
            }
        }
        if self.mode == Mode::Teacher && (self.hidden_dims.is_empty() || self.hidden_dims.contains(&0)) {
            return Err(Error::config("teacher hidden_dims must be nonempty and positive"));
        }
        Ok(())
    }

    /// Factors that carry a condition head in this mode.
    pub fn active_factors(&self) -> &[String] {
        if self.mode.is_adversarial() {
            &self.factors
        } else {
            &[]
        }
    }

    pub fn weight(&self, r: usize) -> f64 {
        self.factor_weights.get(r).copied().unwrap_or(1.0)
    }

    /// GRL scale in effect; plain T/S ignores the configured value.
    pub fn effective_lambda(&self) -> f64 {
        if self.mode.is_adversarial() {
            self.lambda
        } else {
            0.0
        }
    }
}
