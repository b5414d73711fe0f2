//! JSON run configuration.
//!
//! ```json
//! {
//!   "matrices": [[[-0.92, 0.0], [0.0, 0.77]], [[1.24, 0.0], [0.0, 0.89]]],
//!   "delta": 2,
//!   "Delta": 3,
//!   "lambda": 0.001,
//!   "seed": 0
//! }
//! ```
//!
//! Matrices are row-major. Unknown fields are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::SwitchedFamily;
use crate::linalg::Matrix;

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_HORIZON: usize = 200;
pub const DEFAULT_NUM_SIGNALS: usize = 1000;
pub const DEFAULT_X0_BOX: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub matrices: Vec<Vec<Vec<f64>>>,
    pub delta: u32,
    #[serde(rename = "Delta")]
    pub max_dwell: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_num_signals")]
    pub num_signals: usize,
    #[serde(default = "default_x0_box")]
    pub x0_box: f64,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_horizon() -> usize {
    DEFAULT_HORIZON
}
fn default_num_signals() -> usize {
    DEFAULT_NUM_SIGNALS
}
fn default_x0_box() -> f64 {
    DEFAULT_X0_BOX
}

impl Config {
    pub fn new(matrices: Vec<Vec<Vec<f64>>>, delta: u32, max_dwell: u32) -> Self {
        Self {
            matrices,
            delta,
            max_dwell,
            lambda: None,
            seed: DEFAULT_SEED,
            horizon: DEFAULT_HORIZON,
            num_signals: DEFAULT_NUM_SIGNALS,
            x0_box: DEFAULT_X0_BOX,
        }
    }

    /// Parses and validates; a config that does not describe a valid family
    /// is rejected here.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Config =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.family()?;
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::Config(format!("lambda must be positive, got {l}")));
            }
        }
        if !(self.x0_box.is_finite() && self.x0_box > 0.0) {
            return Err(Error::Config(format!(
                "x0_box must be positive, got {}",
                self.x0_box
            )));
        }
        Ok(())
    }

    pub fn family(&self) -> Result<SwitchedFamily> {
        let matrices = self
            .matrices
            .iter()
            .enumerate()
            .map(|(i, rows)| {
                Matrix::from_rows(rows).map_err(|e| Error::Config(format!("matrix {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        SwitchedFamily::new(matrices, self.delta, self.max_dwell)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_defaults() {
        let c = Config::from_json(
            r#"{"matrices": [[[0.5, 0], [0, 0.2]], [[1.1, 0], [0, 0.3]]], "delta": 1, "Delta": 2}"#,
        )
        .unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.horizon, 200);
        assert_eq!(c.num_signals, 1000);
        assert_eq!(c.x0_box, 100.0);
        assert_eq!(c.lambda, None);
        assert_eq!(c.family().unwrap().len(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = [
            "{not json",
            r#"{"matrices": [[[1]]], "delta": 1, "Delta": 2, "colour": 3}"#,
            r#"{"matrices": [[[1, 2], [3]]], "delta": 1, "Delta": 2}"#,
            r#"{"matrices": [[[1]], [[1, 0], [0, 1]]], "delta": 1, "Delta": 2}"#,
            r#"{"matrices": [[[1]]], "delta": 3, "Delta": 2}"#,
            r#"{"matrices": [], "delta": 1, "Delta": 2}"#,
            r#"{"matrices": [[[1]]], "delta": 1, "Delta": 2, "lambda": -1}"#,
        ];
        for text in bad {
            assert!(Config::from_json(text).is_err(), "accepted {text}");
        }
    }
}
