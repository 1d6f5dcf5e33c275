//! Synthetic response policies and Monte-Carlo validation of the tier rules.
//!
//! Every iteration redraws item correctness from the item accuracies and
//! then applies the policy rule independently per item. Iteration `i` of
//! policy `p` uses its own counter-based stream, so the matrix does not
//! depend on thread scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{tier1_flags_with_margin, TierThresholds, TriggeredRule};
use crate::data::{
    consensus_items, BetDecision, ItemNorm, ItemNorms, KeepDecision, ProbeRecord, ProspectiveChoice, Track,
    EXPECTED_TRACK_SIZES,
};
use crate::indices::{compute_profile, IndexName, IndexValues, ProfileConfig};
use crate::par::{map_range, Execution};
use crate::statkit::{percentile_sorted, replicate_rng, sample_stats, ReplicateRng};

/// Fewest iterations accepted when a policy draws its decisions at random.
pub const MIN_STOCHASTIC_ITERATIONS: usize = 100;

/// Stream reserved for item-accuracy sampling.
const ACCURACY_STREAM: u64 = u64::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum SyntheticError {
    #[error("invalid policy parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid accuracy model: {0}")]
    Config(String),
    #[error("{got} iterations requested; stochastic policies need at least {needed}")]
    TooFewIterations { needed: usize, got: usize },
    #[error("item pool is empty")]
    EmptyPool,
}

pub type Result<T> = std::result::Result<T, SyntheticError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Policy {
    AlwaysKeepBet,
    AlwaysWithdrawNoBet,
    Random5050,
    Random80Keep,
    PerfectMonitor,
    NoisyMonitor,
    InvertedMonitor,
    R1Like,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Flagged,
    Passed,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Flagged => "Flagged",
            Verdict::Passed => "Passed",
        })
    }
}

impl Policy {
    pub const ALL: [Policy; 8] = [
        Policy::AlwaysKeepBet,
        Policy::AlwaysWithdrawNoBet,
        Policy::Random5050,
        Policy::Random80Keep,
        Policy::PerfectMonitor,
        Policy::NoisyMonitor,
        Policy::InvertedMonitor,
        Policy::R1Like,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::AlwaysKeepBet => "AlwaysKeepBet",
            Policy::AlwaysWithdrawNoBet => "AlwaysWithdrawNoBet",
            Policy::Random5050 => "Random5050",
            Policy::Random80Keep => "Random80Keep",
            Policy::PerfectMonitor => "PerfectMonitor",
            Policy::NoisyMonitor => "NoisyMonitor",
            Policy::InvertedMonitor => "InvertedMonitor",
            Policy::R1Like => "R1Like",
        }
    }

    fn ordinal(self) -> u64 {
        Policy::ALL.iter().position(|p| *p == self).expect("listed") as u64
    }

    pub fn expected_verdict(self) -> Verdict {
        match self {
            Policy::Random80Keep | Policy::PerfectMonitor | Policy::NoisyMonitor => Verdict::Passed,
            _ => Verdict::Flagged,
        }
    }

    /// True when the decisions, not just correctness, are random.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Policy::Random5050 | Policy::Random80Keep | Policy::NoisyMonitor)
    }

    pub fn default_params(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            Policy::Random5050 => &[("keep_prob", 0.5)],
            Policy::Random80Keep => &[("keep_prob", 0.8)],
            Policy::NoisyMonitor => &[("keep_on_correct", 0.8), ("withdraw_on_incorrect", 0.6)],
            _ => &[],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = SyntheticError;
    fn from_str(s: &str) -> Result<Policy> {
        Policy::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| SyntheticError::InvalidParameter(format!("unknown policy `{s}`")))
    }
}

/// A policy with its probability parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub policy: Policy,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl PolicySpec {
    pub fn new(policy: Policy) -> PolicySpec {
        PolicySpec { policy, params: policy.default_params() }
    }

    pub fn battery() -> Vec<PolicySpec> {
        Policy::ALL.into_iter().map(PolicySpec::new).collect()
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Result<PolicySpec> {
        self.params.insert(name.to_string(), value);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let known = self.policy.default_params();
        for (k, v) in &self.params {
            if !known.contains_key(k) {
                return Err(SyntheticError::InvalidParameter(format!("{} has no parameter `{k}`", self.policy)));
            }
            if !(0.0..=1.0).contains(v) {
                return Err(SyntheticError::InvalidParameter(format!(
                    "{}.{k} = {v} is not a probability",
                    self.policy
                )));
            }
        }
        Ok(())
    }

    fn param(&self, name: &str) -> f64 {
        self.params.get(name).copied().unwrap_or_else(|| self.policy.default_params()[name])
    }

    /// KEEP and BET for one item.
    fn decide(&self, correct: bool, rng: &mut ReplicateRng) -> (bool, bool) {
        let keep = match self.policy {
            Policy::AlwaysKeepBet => true,
            Policy::AlwaysWithdrawNoBet => false,
            Policy::Random5050 | Policy::Random80Keep => rng.gen_bool(self.param("keep_prob")),
            Policy::PerfectMonitor => correct,
            Policy::NoisyMonitor if correct => rng.gen_bool(self.param("keep_on_correct")),
            Policy::NoisyMonitor => !rng.gen_bool(self.param("withdraw_on_incorrect")),
            Policy::InvertedMonitor | Policy::R1Like => !correct,
        };
        let bet = if self.policy == Policy::R1Like { true } else { keep };
        (keep, bet)
    }
}

/// Source of per-item accuracies for synthetic datasets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum AccuracyModel {
    FromNorms,
    Beta { a: f64, b: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Default for AccuracyModel {
    /// Mean 6/7, close to the accuracy level of current frontier models.
    fn default() -> Self {
        AccuracyModel::Beta { a: 6.0, b: 1.0 }
    }
}

/// Item ids laid out over the six tracks in battery proportions.
pub fn synthetic_item_ids(n_items: usize) -> Vec<(String, Track)> {
    let total: usize = EXPECTED_TRACK_SIZES.iter().map(|(_, n)| n).sum();
    let exact: Vec<f64> = EXPECTED_TRACK_SIZES.iter().map(|(_, n)| (*n * n_items) as f64 / total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    // largest remainder, ties to the earlier track
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let short = n_items - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    EXPECTED_TRACK_SIZES
        .iter()
        .zip(counts)
        .flat_map(|((track, _), c)| (1..=c).map(move |i| (format!("{track}-{i:03}"), *track)))
        .collect()
}

/// Per-item accuracies. `FromNorms` passes the norms' mean accuracies
/// through and ignores `n_items`.
pub fn sample_item_accuracies(
    model: &AccuracyModel,
    n_items: usize,
    seed: u64,
    norms: Option<&ItemNorms>,
) -> Result<BTreeMap<String, f64>> {
    let mut rng = replicate_rng(seed, ACCURACY_STREAM);
    let ids = synthetic_item_ids(n_items);
    match *model {
        AccuracyModel::FromNorms => {
            let norms = norms.ok_or_else(|| SyntheticError::Config("from_norms needs a norms file".into()))?;
            Ok(norms.iter().map(|(k, n)| (k.clone(), n.mean_accuracy)).collect())
        }
        AccuracyModel::Beta { a, b } => {
            let dist = Beta::new(a, b).map_err(|e| SyntheticError::Config(format!("beta({a}, {b}): {e}")))?;
            Ok(ids.into_iter().map(|(id, _)| (id, dist.sample(&mut rng))).collect())
        }
        AccuracyModel::Uniform { lo, hi } => {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(SyntheticError::Config(format!("uniform({lo}, {hi}) must satisfy 0 <= lo <= hi <= 1")));
            }
            Ok(ids.into_iter().map(|(id, _)| (id, lo + (hi - lo) * rng.gen::<f64>())).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticItem {
    pub item_id: String,
    pub track: Track,
    pub accuracy: f64,
}

/// Items, their accuracies, and the consensus set used for F.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemPool {
    pub items: Vec<SyntheticItem>,
    pub consensus: BTreeSet<String>,
}

impl ItemPool {
    /// Consensus items are those answered correctly at or above `threshold`.
    pub fn from_accuracies(accuracies: &BTreeMap<String, f64>, threshold: f64) -> Result<ItemPool> {
        let consensus = accuracies.iter().filter(|(_, a)| **a >= threshold - 1e-12).map(|(k, _)| k.clone()).collect();
        Self::build(accuracies, consensus, |_| None)
    }

    /// Accuracies and consensus set taken from derivation-sample norms.
    /// Tracks come from `tracks` when known, else from the item-id prefix.
    pub fn from_norms(norms: &ItemNorms, threshold: f64, tracks: &BTreeMap<String, Track>) -> Result<ItemPool> {
        let accuracies = norms.iter().map(|(k, n)| (k.clone(), n.mean_accuracy)).collect();
        Self::build(&accuracies, consensus_items(norms, threshold), |id| tracks.get(id).copied())
    }

    fn build<T>(accuracies: &BTreeMap<String, f64>, consensus: BTreeSet<String>, track_of: T) -> Result<ItemPool>
    where
        T: Fn(&str) -> Option<Track>,
    {
        if accuracies.is_empty() {
            return Err(SyntheticError::EmptyPool);
        }
        let mut items = Vec::with_capacity(accuracies.len());
        for (id, &accuracy) in accuracies {
            if !(0.0..=1.0).contains(&accuracy) {
                return Err(SyntheticError::Config(format!("item {id}: accuracy {accuracy} outside [0, 1]")));
            }
            let track = track_of(id).or_else(|| Track::from_item_prefix(id)).unwrap_or(Track::T1);
            items.push(SyntheticItem { item_id: id.clone(), track, accuracy });
        }
        Ok(ItemPool { items, consensus })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Norms an ideal monitor would produce on this pool: every endorsement
    /// rate equals the item's accuracy.
    pub fn to_norms(&self) -> ItemNorms {
        ItemNorms(
            self.items
                .iter()
                .map(|i| {
                    let norm = ItemNorm { n: 0, p_keep: i.accuracy, p_bet: i.accuracy, mean_accuracy: i.accuracy };
                    (i.item_id.clone(), norm)
                })
                .collect(),
        )
    }

    pub fn mean_accuracy(&self) -> f64 {
        self.items.iter().map(|i| i.accuracy).sum::<f64>() / self.items.len() as f64
    }
}

/// Stream for iteration `iteration` of `policy`.
pub fn policy_rng(seed: u64, policy: Policy, iteration: u64) -> ReplicateRng {
    replicate_rng(seed, (policy.ordinal() << 40) | iteration)
}

/// One record per pool item for a model following `spec`.
pub fn generate_records(
    spec: &PolicySpec,
    pool: &ItemPool,
    model_id: &str,
    rng: &mut ReplicateRng,
) -> Vec<ProbeRecord> {
    pool.items
        .iter()
        .map(|item| {
            let correct = rng.gen_bool(item.accuracy);
            let (keep, bet) = spec.decide(correct, rng);
            ProbeRecord {
                model_id: model_id.to_string(),
                track: item.track,
                item_id: item.item_id.clone(),
                domain: "synthetic".to_string(),
                correct,
                keep: if keep { KeepDecision::Keep } else { KeepDecision::Withdraw },
                bet: if bet { BetDecision::Bet } else { BetDecision::NoBet },
                prospective: item.track.is_prospective().then_some(if keep {
                    ProspectiveChoice::Answer
                } else {
                    ProspectiveChoice::Decline
                }),
            }
        })
        .collect()
}

/// A single seeded dataset for `spec`, with the policy name as model id.
pub fn generate_policy_dataset(spec: &PolicySpec, pool: &ItemPool, seed: u64) -> Vec<ProbeRecord> {
    generate_records(spec, pool, spec.policy.as_str(), &mut policy_rng(seed, spec.policy, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationConfig {
    pub iterations: usize,
    pub seed: u64,
    pub thresholds: TierThresholds,
    /// Width of the Monte-Carlo tie band in standard errors of the mean.
    pub mc_z: f64,
    pub execution: Execution,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            iterations: 1000,
            seed: 0,
            thresholds: TierThresholds::default(),
            mc_z: 4.0,
            execution: Execution::Parallel,
        }
    }
}

/// Distribution of one index over iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSummary {
    pub index: String,
    pub n_defined: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

impl IndexSummary {
    fn from_values(index: &str, mut values: Vec<f64>) -> IndexSummary {
        let stats = sample_stats(&values).ok();
        values.sort_by(f64::total_cmp);
        let q = |p: f64| (!values.is_empty()).then(|| percentile_sorted(&values, p));
        IndexSummary {
            index: index.to_string(),
            n_defined: values.len(),
            mean: stats.map(|s| s.mean),
            sd: stats.and_then(|s| s.sd),
            ci_low: q(0.025),
            ci_high: q(0.975),
        }
    }

    /// Half-width of the band within which the mean is tied with a cut-off.
    fn tie_band(&self, z: f64) -> f64 {
        match self.sd {
            Some(sd) if self.n_defined > 0 => z * sd / (self.n_defined as f64).sqrt(),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyValidation {
    pub policy: Policy,
    pub params: BTreeMap<String, f64>,
    /// The twelve indices, then ICN and L_prosp.
    pub summaries: Vec<IndexSummary>,
    pub mean_profile: IndexValues,
    pub verdict: Verdict,
    pub expected: Verdict,
    pub pass: bool,
    pub triggered_rules: Vec<TriggeredRule>,
    pub tie_bands: BTreeMap<IndexName, f64>,
    /// Share of iterations on which each Tier 1 rule fired at the exact cut-off.
    pub flag_rates: BTreeMap<IndexName, f64>,
    /// Share of iterations with at least one Tier 1 rule.
    pub tier1_rate: f64,
}

impl PolicyValidation {
    pub fn summary(&self, index: &str) -> Option<&IndexSummary> {
        self.summaries.iter().find(|s| s.index == index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationMatrix {
    pub seed: u64,
    pub iterations: usize,
    pub mc_z: f64,
    pub thresholds: TierThresholds,
    pub n_items: usize,
    pub n_consensus: usize,
    pub mean_item_accuracy: f64,
    pub policies: Vec<PolicyValidation>,
}

impl ValidationMatrix {
    pub fn get(&self, policy: Policy) -> Option<&PolicyValidation> {
        self.policies.iter().find(|p| p.policy == policy)
    }

    pub fn all_pass(&self) -> bool {
        self.policies.iter().all(|p| p.pass)
    }

    pub fn failures(&self) -> Vec<Policy> {
        self.policies.iter().filter(|p| !p.pass).map(|p| p.policy).collect()
    }

    /// One row per policy × index, preceded by `#` metadata lines.
    pub fn write_csv<W: Write>(&self, mut sink: W, meta: &[(String, String)]) -> std::io::Result<()> {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for (k, v) in meta {
            writeln!(sink, "# {k}={v}")?;
        }
        writeln!(sink, "# seed={}", self.seed)?;
        writeln!(sink, "# iterations={}", self.iterations)?;
        writeln!(sink, "policy,index,n_defined,mean,sd,ci_low,ci_high,verdict,expected,pass")?;
        for p in &self.policies {
            for s in &p.summaries {
                writeln!(
                    sink,
                    "{},{},{},{},{},{},{},{},{},{}",
                    p.policy,
                    s.index,
                    s.n_defined,
                    opt(s.mean),
                    opt(s.sd),
                    opt(s.ci_low),
                    opt(s.ci_high),
                    p.verdict,
                    p.expected,
                    p.pass
                )?;
            }
        }
        Ok(())
    }
}

struct IterationOutcome {
    values: IndexValues,
    icn: Option<usize>,
    l_prosp: Option<f64>,
    fired: Vec<IndexName>,
}

pub fn run_policy_validation(
    specs: &[PolicySpec],
    pool: &ItemPool,
    config: &ValidationConfig,
) -> Result<ValidationMatrix> {
    if pool.is_empty() {
        return Err(SyntheticError::EmptyPool);
    }
    for spec in specs {
        spec.validate()?;
    }
    let needed = if specs.iter().any(|s| s.policy.is_stochastic()) { MIN_STOCHASTIC_ITERATIONS } else { 1 };
    if config.iterations < needed {
        return Err(SyntheticError::TooFewIterations { needed, got: config.iterations });
    }
    config.thresholds.validate().map_err(|e| SyntheticError::Config(e.to_string()))?;

    let profile_config = ProfileConfig::default();
    let policies = specs
        .iter()
        .map(|spec| {
            let outcomes = map_range(config.iterations, config.execution, |i| {
                let mut rng = policy_rng(config.seed, spec.policy, i as u64);
                let records = generate_records(spec, pool, spec.policy.as_str(), &mut rng);
                let profile = compute_profile(spec.policy.as_str(), &records, &pool.consensus, &profile_config);
                let fired = tier1_flags_with_margin(&profile.overall, &config.thresholds, |_| 0.0)
                    .into_iter()
                    .map(|r| r.index)
                    .collect();
                IterationOutcome { values: profile.overall, icn: profile.icn, l_prosp: profile.l_prosp, fired }
            });
            summarize(spec, &outcomes, config)
        })
        .collect();

    Ok(ValidationMatrix {
        seed: config.seed,
        iterations: config.iterations,
        mc_z: config.mc_z,
        thresholds: config.thresholds,
        n_items: pool.len(),
        n_consensus: pool.consensus.len(),
        mean_item_accuracy: pool.mean_accuracy(),
        policies,
    })
}

fn summarize(spec: &PolicySpec, outcomes: &[IterationOutcome], config: &ValidationConfig) -> PolicyValidation {
    let mut summaries: Vec<IndexSummary> = IndexName::ALL
        .iter()
        .map(|name| {
            IndexSummary::from_values(name.as_str(), outcomes.iter().filter_map(|o| name.get(&o.values)).collect())
        })
        .collect();
    summaries.push(IndexSummary::from_values("ICN", outcomes.iter().filter_map(|o| o.icn.map(|c| c as f64)).collect()));
    summaries.push(IndexSummary::from_values("L_prosp", outcomes.iter().filter_map(|o| o.l_prosp).collect()));

    let mut mean_profile = outcomes[0].values;
    let mut tie_bands = BTreeMap::new();
    for (name, s) in IndexName::ALL.iter().zip(&summaries) {
        *name.slot_mut(&mut mean_profile) = s.mean;
        tie_bands.insert(*name, s.tie_band(config.mc_z));
    }
    let n = outcomes.len() as f64;
    mean_profile.n_correct = (outcomes.iter().map(|o| o.values.n_correct as f64).sum::<f64>() / n).round() as usize;
    mean_profile.n_incorrect = mean_profile.n.saturating_sub(mean_profile.n_correct);

    let triggered_rules = tier1_flags_with_margin(&mean_profile, &config.thresholds, |i| tie_bands[&i]);
    let verdict = if triggered_rules.is_empty() { Verdict::Passed } else { Verdict::Flagged };
    let expected = spec.policy.expected_verdict();

    let flag_rates = [IndexName::Rbs, IndexName::L, IndexName::F, IndexName::Fp]
        .into_iter()
        .map(|i| (i, outcomes.iter().filter(|o| o.fired.contains(&i)).count() as f64 / n))
        .collect();
    let tier1_rate = outcomes.iter().filter(|o| !o.fired.is_empty()).count() as f64 / n;

    PolicyValidation {
        policy: spec.policy,
        params: spec.params.clone(),
        summaries,
        mean_profile,
        verdict,
        expected,
        pass: verdict == expected,
        triggered_rules,
        tie_bands,
        flag_rates,
        tier1_rate,
    }
}
