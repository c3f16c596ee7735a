//! Pinball loss and the multi-node quantile loss.
//!
//! For a node at level `q`, over-prediction (`y_hat >= y`) costs `q` per unit
//! and under-prediction costs `1 - q` per unit. The expected loss of a
//! constant prediction `c` therefore has derivative `F(c) - (1 - q)`, so its
//! minimizer is the `(1 - q)`-quantile of the target distribution. The two
//! conventions coincide at `q = 0.5`, where the loss is half the absolute
//! error (same minimizer as L1).
//!
//! Subgradients at the kink `y_hat == y` are taken as 0.

use crate::nnet::QuantileSpec;
use crate::{Error, Result};

fn check_level(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidValue(format!("quantile {q} is outside (0, 1)")))
    }
}

#[inline]
fn pinball_unchecked(q: f64, y: f64, y_hat: f64) -> f64 {
    let r = (y_hat - y).abs();
    if y_hat >= y {
        q * r
    } else {
        (1.0 - q) * r
    }
}

#[inline]
fn pinball_grad_unchecked(q: f64, y: f64, y_hat: f64) -> f64 {
    if y_hat > y {
        q
    } else if y_hat < y {
        -(1.0 - q)
    } else {
        0.0
    }
}

/// Node-wise pinball loss.
pub fn pinball(q: f64, y: f64, y_hat: f64) -> Result<f64> {
    check_level(q)?;
    Ok(pinball_unchecked(q, y, y_hat))
}

/// Subgradient of [`pinball`] with respect to `y_hat`.
pub fn pinball_grad(q: f64, y: f64, y_hat: f64) -> Result<f64> {
    check_level(q)?;
    Ok(pinball_grad_unchecked(q, y, y_hat))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    /// Mean of `per_node`.
    pub value: f64,
    pub per_node: Vec<f64>,
    /// d value / d y_hat, one entry per node.
    pub gradient: Vec<f64>,
}

/// Mean pinball loss over the K nodes of one prediction.
pub fn quantile_loss(y: f64, y_hat: &[f64], spec: &QuantileSpec) -> Result<LossValue> {
    let k = spec.len();
    if y_hat.len() != k {
        return Err(Error::shape(format!("{k} predictions"), y_hat.len()));
    }
    let per_node: Vec<f64> = spec
        .levels()
        .iter()
        .zip(y_hat)
        .map(|(&q, &p)| pinball_unchecked(q, y, p))
        .collect();
    let gradient = spec
        .levels()
        .iter()
        .zip(y_hat)
        .map(|(&q, &p)| pinball_grad_unchecked(q, y, p) / k as f64)
        .collect();
    let value = per_node.iter().sum::<f64>() / k as f64;
    Ok(LossValue {
        value,
        per_node,
        gradient,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchLoss {
    pub value: f64,
    /// Row-major `(B, K)` gradient of `value` with respect to the predictions.
    pub gradient: Vec<f64>,
}

/// Mean of [`quantile_loss`] over a batch.
///
/// `predictions` is row-major `(B, K)`.
pub fn batch_loss(labels: &[f64], predictions: &[f64], spec: &QuantileSpec) -> Result<BatchLoss> {
    let k = spec.len();
    let b = labels.len();
    if b == 0 {
        return Err(Error::Empty("batch loss over zero samples".into()));
    }
    if predictions.len() != b * k {
        return Err(Error::shape(
            format!("{b}x{k} predictions"),
            format!("{} values", predictions.len()),
        ));
    }
    let mut value = 0.0;
    let mut gradient = Vec::with_capacity(b * k);
    for (y, row) in labels.iter().zip(predictions.chunks_exact(k)) {
        let l = quantile_loss(*y, row, spec)?;
        value += l.value;
        gradient.extend(l.gradient.iter().map(|g| g / b as f64));
    }
    Ok(BatchLoss {
        value: value / b as f64,
        gradient,
    })
}
