use serde::{Deserialize, Serialize};

use super::{Result, StatError};

/// Count, mean and sample standard deviation (n − 1 denominator).
///
/// `sd` is `None` for a single observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub sd: Option<f64>,
}

pub fn mean(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(StatError::EmptySample);
    }
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample variance with the n − 1 denominator. Needs two observations.
pub fn variance(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(StatError::InsufficientSample { needed: 2, got: xs.len() });
    }
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Ok(ss / (xs.len() - 1) as f64)
}

pub fn sample_stats(xs: &[f64]) -> Result<SampleStats> {
    let m = mean(xs)?;
    let sd = if xs.len() >= 2 { Some(variance(xs)?.sqrt()) } else { None };
    Ok(SampleStats { n: xs.len(), mean: m, sd })
}
