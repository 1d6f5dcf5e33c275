//! Tiered validity classification.
//!
//! Tier 1 rules are fixed construct-level cut-offs and depend only on the
//! model's own profile. Tier 2 compares each remaining model with the mean
//! and SD of the non-Tier-1 sample.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indices::{IndexName, IndexValues, ValidityProfile};
use crate::par::{map_slice, Execution};
use crate::statkit::sample_stats;

/// Fewest reference models for which Tier 2 statistics are computed.
pub const MIN_TIER2_REFERENCE: usize = 5;

/// Indices screened against the Tier 2 reference distribution.
pub const TIER2_INDICES: [IndexName; 5] = [IndexName::L, IndexName::K, IndexName::F, IndexName::Fp, IndexName::Trin];

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("every model is Tier 1; no reference group remains")]
    EmptyReferenceGroup,
    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),
    #[error("bad grid `{0}`: expected lo:hi:step")]
    BadGrid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TierThresholds {
    pub rbs_gt: f64,
    pub l_min: f64,
    pub f_min: f64,
    pub fp_min: f64,
    pub tier2_elevated_sd: f64,
    pub tier2_marked_sd: f64,
}

impl Default for TierThresholds {
    fn default() -> Self {
        TierThresholds {
            rbs_gt: 0.0,
            l_min: 0.95,
            f_min: 0.50,
            fp_min: 0.50,
            tier2_elevated_sd: 1.5,
            tier2_marked_sd: 2.0,
        }
    }
}

impl TierThresholds {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let bad = |m: String| Err(ClassifyError::InvalidThreshold(m));
        for (name, v) in [("l_min", self.l_min), ("f_min", self.f_min), ("fp_min", self.fp_min)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} = {v} must lie in (0, 1]"));
            }
        }
        if !(-1.0..1.0).contains(&self.rbs_gt) {
            return bad(format!("rbs_gt = {} must lie in [-1, 1)", self.rbs_gt));
        }
        if self.tier2_elevated_sd.is_nan() || self.tier2_elevated_sd <= 0.0 {
            return bad(format!("tier2_elevated_sd = {} must be positive", self.tier2_elevated_sd));
        }
        if self.tier2_marked_sd < self.tier2_elevated_sd {
            return bad("tier2_marked_sd must be at least tier2_elevated_sd".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    Valid,
    #[serde(rename = "Tier2-Elevated")]
    Tier2Elevated,
    #[serde(rename = "Tier2-Marked")]
    Tier2Marked,
    #[serde(rename = "Tier1-Invalid")]
    Tier1Invalid,
    /// Every index undefined; outside the two-tier scheme.
    Unclassifiable,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Valid => "Valid",
            Tier::Tier2Elevated => "Tier2-Elevated",
            Tier::Tier2Marked => "Tier2-Marked",
            Tier::Tier1Invalid => "Tier1-Invalid",
            Tier::Unclassifiable => "Unclassifiable",
        }
    }

    /// Non-Tier-1 models with a usable profile.
    pub fn is_valid_side(self) -> bool {
        matches!(self, Tier::Valid | Tier::Tier2Elevated | Tier::Tier2Marked)
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Tier1,
    Tier2Elevated,
    Tier2Marked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggeredRule {
    pub index: IndexName,
    pub value: f64,
    pub threshold: f64,
    pub kind: RuleKind,
    /// Comparison that fired, e.g. `>` or `>=`.
    pub comparison: String,
}

/// Tier 1 rules that fire for a profile. Undefined indices never fire.
pub fn tier1_flags(profile: &ValidityProfile, t: &TierThresholds) -> Vec<TriggeredRule> {
    tier1_flags_with_margin(&profile.overall, t, |_| 0.0)
}

/// Tier 1 rules with a per-index tie band: values within `margin(index)`
/// of a cut-off are treated as equal to it. Used for Monte-Carlo means.
pub fn tier1_flags_with_margin<M>(values: &IndexValues, t: &TierThresholds, margin: M) -> Vec<TriggeredRule>
where
    M: Fn(IndexName) -> f64,
{
    let rule = |index: IndexName, threshold: f64, strict: bool| {
        let value = index.get(values)?;
        let band = margin(index);
        let fires = if strict { value > threshold + band } else { value >= threshold - band };
        fires.then(|| TriggeredRule {
            index,
            value,
            threshold,
            kind: RuleKind::Tier1,
            comparison: if strict { ">" } else { ">=" }.to_string(),
        })
    };
    [
        rule(IndexName::Rbs, t.rbs_gt, true),
        rule(IndexName::L, t.l_min, false),
        rule(IndexName::F, t.f_min, false),
        rule(IndexName::Fp, t.fp_min, false),
    ]
    .into_iter()
    .flatten()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStat {
    pub n: usize,
    pub mean: f64,
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierAssignment {
    pub model_id: String,
    pub tier: Tier,
    pub triggered_rules: Vec<TriggeredRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub assignments: Vec<TierAssignment>,
    /// Tier 2 reference M/SD per index, over non-Tier-1 models only.
    pub reference_stats: BTreeMap<IndexName, ReferenceStat>,
    pub warnings: Vec<String>,
}

impl Classification {
    pub fn tier_of(&self, model: &str) -> Option<Tier> {
        self.assignments.iter().find(|a| a.model_id == model).map(|a| a.tier)
    }

    pub fn models_in(&self, tier: Tier) -> BTreeSet<String> {
        self.assignments.iter().filter(|a| a.tier == tier).map(|a| a.model_id.clone()).collect()
    }

    pub fn has_tier1(&self) -> bool {
        self.assignments.iter().any(|a| a.tier == Tier::Tier1Invalid)
    }
}

fn all_undefined(p: &ValidityProfile) -> bool {
    IndexName::SCALES.iter().all(|i| p.get(*i).is_none())
}

pub fn classify_sample(profiles: &[ValidityProfile], t: &TierThresholds) -> Result<Classification, ClassifyError> {
    t.validate()?;
    let mut warnings = Vec::new();
    let mut assignments = classify_tier1_only(profiles, t).assignments;

    let reference: Vec<&ValidityProfile> = profiles
        .iter()
        .filter(|p| assignments.iter().any(|a| a.model_id == p.model_id && a.tier == Tier::Valid))
        .collect();
    if reference.is_empty() && !profiles.is_empty() && assignments.iter().all(|a| a.tier == Tier::Tier1Invalid) {
        return Err(ClassifyError::EmptyReferenceGroup);
    }

    let mut reference_stats = BTreeMap::new();
    for index in TIER2_INDICES {
        let values: Vec<f64> = reference.iter().filter_map(|p| p.get(index)).collect();
        if let Ok(s) = sample_stats(&values) {
            reference_stats.insert(index, ReferenceStat { n: s.n, mean: s.mean, sd: s.sd });
        }
    }

    if reference.len() < MIN_TIER2_REFERENCE {
        warnings.push(format!(
            "Tier 2 skipped: {} non-Tier-1 models, need at least {MIN_TIER2_REFERENCE}",
            reference.len()
        ));
        return Ok(Classification { assignments, reference_stats, warnings });
    }

    for a in assignments.iter_mut().filter(|a| a.tier == Tier::Valid) {
        let profile = profiles.iter().find(|p| p.model_id == a.model_id).expect("profile present");
        for index in TIER2_INDICES {
            let (Some(value), Some(stat)) = (profile.get(index), reference_stats.get(&index)) else {
                continue;
            };
            let Some(sd) = stat.sd else { continue };
            // a tie with the mean never flags, even when SD is zero
            let over = |k: f64| value > stat.mean && value >= stat.mean + k * sd;
            let (kind, threshold) = if over(t.tier2_marked_sd) {
                (RuleKind::Tier2Marked, stat.mean + t.tier2_marked_sd * sd)
            } else if over(t.tier2_elevated_sd) {
                (RuleKind::Tier2Elevated, stat.mean + t.tier2_elevated_sd * sd)
            } else {
                continue;
            };
            a.triggered_rules.push(TriggeredRule { index, value, threshold, kind, comparison: ">=".into() });
        }
        if a.triggered_rules.iter().any(|r| r.kind == RuleKind::Tier2Marked) {
            a.tier = Tier::Tier2Marked;
        } else if !a.triggered_rules.is_empty() {
            a.tier = Tier::Tier2Elevated;
        }
    }
    Ok(Classification { assignments, reference_stats, warnings })
}

/// Tier 1 assignments only, for samples where no reference group remains.
pub fn classify_tier1_only(profiles: &[ValidityProfile], t: &TierThresholds) -> Classification {
    let mut assignments: Vec<TierAssignment> = profiles
        .iter()
        .map(|p| {
            let rules = tier1_flags(p, t);
            let tier = if !rules.is_empty() {
                Tier::Tier1Invalid
            } else if all_undefined(p) {
                Tier::Unclassifiable
            } else {
                Tier::Valid
            };
            TierAssignment { model_id: p.model_id.clone(), tier, triggered_rules: rules }
        })
        .collect();
    assignments.sort_by(|a, b| a.model_id.cmp(&b.model_id));
    Classification {
        assignments,
        reference_stats: BTreeMap::new(),
        warnings: vec!["Tier 2 not computed: no non-Tier-1 reference group".into()],
    }
}

/// [`classify_sample`], falling back to [`classify_tier1_only`] when every
/// model is Tier 1.
pub fn classify_or_tier1(profiles: &[ValidityProfile], t: &TierThresholds) -> Result<Classification, ClassifyError> {
    match classify_sample(profiles, t) {
        Err(ClassifyError::EmptyReferenceGroup) => Ok(classify_tier1_only(profiles, t)),
        other => other,
    }
}

/// Inclusive arithmetic grid parsed from `lo:hi:step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid(pub Vec<f64>);

impl Grid {
    pub fn parse(spec: &str) -> Result<Grid, ClassifyError> {
        let bad = || ClassifyError::BadGrid(spec.to_string());
        let parts: Vec<f64> =
            spec.split(':').map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        match parts.as_slice() {
            [v] => Ok(Grid(vec![*v])),
            [lo, hi, step] if *step > 0.0 && hi >= lo => {
                let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
                // round to kill accumulated binary noise in the labels
                Ok(Grid((0..count).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9).collect()))
            }
            _ => Err(bad()),
        }
    }

    pub fn single(v: f64) -> Grid {
        Grid(vec![v])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub l_min: f64,
    /// Applied to both F and Fp.
    pub f_min: f64,
    pub tier1: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub stable: bool,
    pub always_flagged: BTreeSet<String>,
    pub ever_flagged: BTreeSet<String>,
}

/// Tier 1 membership over an L × F/Fp grid of cut-offs.
pub fn threshold_sweep(
    profiles: &[ValidityProfile],
    l_grid: &Grid,
    f_grid: &Grid,
    base: &TierThresholds,
    exec: Execution,
) -> Result<SweepResult, ClassifyError> {
    if l_grid.0.is_empty() || f_grid.0.is_empty() {
        return Err(ClassifyError::BadGrid("empty grid".into()));
    }
    let mut combos = Vec::new();
    for &l in &l_grid.0 {
        for &f in &f_grid.0 {
            let t = TierThresholds { l_min: l, f_min: f, fp_min: f, ..*base };
            t.validate()?;
            combos.push(t);
        }
    }
    let points = map_slice(&combos, exec, |t| SweepPoint {
        l_min: t.l_min,
        f_min: t.f_min,
        tier1: profiles.iter().filter(|p| !tier1_flags(p, t).is_empty()).map(|p| p.model_id.clone()).collect(),
    });
    let ever: BTreeSet<String> = points.iter().flat_map(|p| p.tier1.iter().cloned()).collect();
    let always: BTreeSet<String> =
        ever.iter().filter(|m| points.iter().all(|p| p.tier1.contains(*m))).cloned().collect();
    Ok(SweepResult { stable: ever == always, points, always_flagged: always, ever_flagged: ever })
}
