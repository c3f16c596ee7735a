use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ordered quantile levels predicted by the model's output nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct QuantileSpec {
    levels: Vec<f64>,
    median: Option<usize>,
}

impl QuantileSpec {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Config("at least one quantile is required".into()));
        }
        if let Some(q) = levels.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            return Err(Error::Config(format!("quantile {q} is outside (0, 1)")));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "quantiles must be strictly increasing, got {levels:?}"
            )));
        }
        let median = levels.iter().position(|&q| (q - 0.5).abs() < 1e-12);
        Ok(QuantileSpec { levels, median })
    }

    /// `{0.1, 0.5, 0.9}`
    pub fn default_three() -> Self {
        QuantileSpec::new(vec![0.1, 0.5, 0.9]).expect("valid")
    }

    /// `{0.5}`
    pub fn median_only() -> Self {
        QuantileSpec::new(vec![0.5]).expect("valid")
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Index of the 0.5 node, if present.
    pub fn median_index(&self) -> Option<usize> {
        self.median
    }
}

impl Default for QuantileSpec {
    fn default() -> Self {
        QuantileSpec::default_three()
    }
}

impl TryFrom<Vec<f64>> for QuantileSpec {
    type Error = Error;

    fn try_from(levels: Vec<f64>) -> Result<Self> {
        QuantileSpec::new(levels)
    }
}

impl From<QuantileSpec> for Vec<f64> {
    fn from(spec: QuantileSpec) -> Self {
        spec.levels
    }
}
