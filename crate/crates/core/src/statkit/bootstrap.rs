//! Seeded, schedule-independent bootstrap.
//!
//! Replicate `i` draws from a ChaCha stream keyed by `(seed, i)`, so the
//! replicate values do not depend on which thread computes them or in what
//! order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Result, StatError};
use crate::par::{map_range, Execution};

pub type ReplicateRng = ChaCha8Rng;

/// Fraction of undefined replicates tolerated before giving up.
const MAX_SKIPPED_FRACTION: f64 = 0.10;

/// Counter-based generator for replicate `index` under `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ReplicateRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub iterations: usize,
    pub seed: u64,
    pub ci_level: f64,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { iterations: 10_000, seed: 0, ci_level: 0.95, execution: Execution::Parallel }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub point_estimate: f64,
    /// Defined replicate values in replicate-index order.
    pub replicates: Vec<f64>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub iterations: usize,
    /// Replicates on which the statistic was undefined.
    pub skipped: usize,
    pub ci_level: f64,
}

/// Linear-interpolation quantile of already sorted data.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Draw `data.len()` values with replacement.
pub fn resample<T: Copy>(rng: &mut ReplicateRng, data: &[T]) -> Vec<T> {
    (0..data.len()).map(|_| data[rng.gen_range(0..data.len())]).collect()
}

/// Run `replicate` once per iteration and summarize with a percentile CI.
///
/// `replicate` performs both the resampling and the statistic; returning
/// `None` marks the statistic undefined on that replicate.
pub fn bootstrap<F>(point_estimate: f64, config: &BootstrapConfig, replicate: F) -> Result<BootstrapResult>
where
    F: Fn(&mut ReplicateRng) -> Option<f64> + Sync + Send,
{
    if config.iterations < 100 {
        return Err(StatError::InvalidArgument(format!(
            "bootstrap needs at least 100 iterations, got {}",
            config.iterations
        )));
    }
    if !(config.ci_level > 0.0 && config.ci_level < 1.0) {
        return Err(StatError::InvalidArgument(format!("ci_level {} not in (0, 1)", config.ci_level)));
    }
    let seed = config.seed;
    let draws = map_range(config.iterations, config.execution, |i| {
        let mut rng = replicate_rng(seed, i as u64);
        replicate(&mut rng).filter(|v| v.is_finite())
    });
    let replicates: Vec<f64> = draws.iter().flatten().copied().collect();
    let skipped = config.iterations - replicates.len();
    if skipped as f64 > MAX_SKIPPED_FRACTION * config.iterations as f64 {
        return Err(StatError::UnstableStatistic { skipped, iterations: config.iterations });
    }
    let mut sorted = replicates.clone();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - config.ci_level) / 2.0;
    Ok(BootstrapResult {
        point_estimate,
        ci_low: percentile_sorted(&sorted, tail),
        ci_high: percentile_sorted(&sorted, 1.0 - tail),
        replicates,
        seed,
        iterations: config.iterations,
        skipped,
        ci_level: config.ci_level,
    })
}

/// How a two-group bootstrap draws its replicate samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resampling {
    /// Resample each group separately, keeping group sizes fixed.
    #[default]
    Stratified,
    /// Resample the pooled cases with their labels; group sizes vary.
    Pooled,
}

/// Bootstrap a two-sample statistic under the given resampling scheme.
pub fn bootstrap_two_sample<F>(
    a: &[f64],
    b: &[f64],
    scheme: Resampling,
    config: &BootstrapConfig,
    statistic: F,
) -> Result<BootstrapResult>
where
    F: Fn(&[f64], &[f64]) -> Option<f64> + Sync + Send,
{
    let point =
        statistic(a, b).ok_or(StatError::InvalidArgument("statistic undefined on the original sample".into()))?;
    match scheme {
        Resampling::Stratified => bootstrap(point, config, |rng| {
            let ra = resample(rng, a);
            let rb = resample(rng, b);
            statistic(&ra, &rb)
        }),
        Resampling::Pooled => {
            let pooled: Vec<(bool, f64)> = a.iter().map(|&v| (true, v)).chain(b.iter().map(|&v| (false, v))).collect();
            bootstrap(point, config, |rng| {
                let draw = resample(rng, &pooled);
                let ra: Vec<f64> = draw.iter().filter(|c| c.0).map(|c| c.1).collect();
                let rb: Vec<f64> = draw.iter().filter(|c| !c.0).map(|c| c.1).collect();
                statistic(&ra, &rb)
            })
        }
    }
}
