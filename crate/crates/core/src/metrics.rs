//! Unevenness and improvement statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spread of a per-PE quantity: `rho = (t_max - t_min) / t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnevennessReport {
    pub t_max: f64,
    pub t_min: f64,
    pub rho: f64,
}

pub fn unevenness(values: &[f64]) -> Result<UnevennessReport> {
    if values.len() < 2 {
        return Err(Error::TooFewValues);
    }
    if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Config(format!("unevenness needs positive values, got {bad}")));
    }
    let t_max = values.iter().copied().fold(f64::MIN, f64::max);
    let t_min = values.iter().copied().fold(f64::MAX, f64::min);
    Ok(UnevennessReport {
        t_max,
        t_min,
        rho: (t_max - t_min) / t_max,
    })
}

/// Unevenness over the PEs that ran at least one task.
pub fn unevenness_active(values: &[f64]) -> Result<UnevennessReport> {
    let active: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    unevenness(&active)
}

/// Percentage by which `candidate` undercuts `baseline`.
pub fn improvement(baseline: f64, candidate: f64) -> Result<f64> {
    if !(baseline > 0.0) {
        return Err(Error::Config(format!("improvement baseline must be positive, got {baseline}")));
    }
    Ok((baseline - candidate) / baseline * 100.0)
}
