//! Verbalizes classifier probabilities as an image description.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::ClassifierOutput;

pub const DEFAULT_THRESHOLD: f64 = 0.2;

/// How probabilities become text.
///
/// `Threshold` emits one presence/absence sentence per observation, present
/// when the probability is strictly above the threshold. `Probability`
/// emits one line per observation with the percentage to two decimals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DescriptionMode {
    Threshold { threshold: f64 },
    #[default]
    Probability,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DescriptionModeError {
    #[error("threshold {0} is outside [0, 1]")]
    Threshold(f64),
    #[error("unknown description mode {0:?} (expected threshold or probability)")]
    Unknown(String),
}

impl DescriptionMode {
    /// Threshold mode at [`DEFAULT_THRESHOLD`].
    pub fn default_threshold() -> Self {
        DescriptionMode::Threshold { threshold: DEFAULT_THRESHOLD }
    }

    pub fn threshold(threshold: f64) -> Result<Self, DescriptionModeError> {
        if (0.0..=1.0).contains(&threshold) {
            Ok(DescriptionMode::Threshold { threshold })
        } else {
            Err(DescriptionModeError::Threshold(threshold))
        }
    }

    pub fn validate(&self) -> Result<(), DescriptionModeError> {
        match *self {
            DescriptionMode::Threshold { threshold } => Self::threshold(threshold).map(|_| ()),
            DescriptionMode::Probability => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DescriptionMode::Threshold { .. } => "threshold",
            DescriptionMode::Probability => "probability",
        }
    }
}

impl fmt::Display for DescriptionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses a bare mode name; threshold mode gets [`DEFAULT_THRESHOLD`].
impl FromStr for DescriptionMode {
    type Err = DescriptionModeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "threshold" => Ok(DescriptionMode::Threshold { threshold: DEFAULT_THRESHOLD }),
            "probability" => Ok(DescriptionMode::Probability),
            other => Err(DescriptionModeError::Unknown(other.to_string())),
        }
    }
}

pub fn describe(probs: &ClassifierOutput, mode: DescriptionMode) -> String {
    match mode {
        DescriptionMode::Threshold { threshold } => probs
            .iter()
            .map(|(o, p)| {
                if p > threshold {
                    format!("It seems there is {o} in the image.")
                } else {
                    format!("It seems there is no {o} in the image.")
                }
            })
            .collect::<Vec<_>>()
            .join(" "),
        DescriptionMode::Probability => probs
            .iter()
            .map(|(o, p)| format!("There is {o} in the image in {:.2} probability.", p * 100.0))
            .collect::<Vec<_>>()
            .join("\n"),
    }
}
