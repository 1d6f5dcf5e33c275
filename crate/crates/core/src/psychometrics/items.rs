//! Item-level analyses: which items separate valid from invalid profiles,
//! and the KEEP × BET joint distribution per model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::{Classification, Tier};
use crate::data::{Dataset, ProbeRecord, Track};
use crate::par::{map_slice, Execution};
use crate::statkit::point_biserial;

/// Fewest models per group on an item before it is tested.
pub const MIN_MODELS_PER_GROUP: usize = 3;
pub const DISCRIMINATOR_ALPHA: f64 = 0.05;

/// Item-level response correlated with group membership.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscriminatorOutcome {
    #[default]
    Keep,
    Bet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItemDiscriminator {
    pub track: Track,
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackCount {
    pub significant: usize,
    pub tested: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorBlock {
    pub outcome: DiscriminatorOutcome,
    pub per_item: BTreeMap<String, ItemDiscriminator>,
    pub by_track: BTreeMap<Track, TrackCount>,
    pub n_tested: usize,
    pub n_significant: usize,
    /// Items with a single-class outcome across models.
    pub n_undefined: usize,
    /// Items seen by fewer than the minimum number of models in a group.
    pub n_insufficient: usize,
}

/// Uncorrected point-biserial r per item between valid-side membership
/// (1 = Valid or Tier 2, 0 = Tier 1) and the chosen item-level response.
pub fn item_discriminators(
    ds: &Dataset,
    classification: &Classification,
    outcome: DiscriminatorOutcome,
    exec: Execution,
) -> DiscriminatorBlock {
    let group: BTreeMap<&str, bool> = classification
        .assignments
        .iter()
        .filter(|a| a.tier != Tier::Unclassifiable)
        .map(|a| (a.model_id.as_str(), a.tier.is_valid_side()))
        .collect();
    let mut cases: BTreeMap<&str, (Track, Vec<bool>, Vec<f64>)> = BTreeMap::new();
    for r in ds.records() {
        let Some(&valid) = group.get(r.model_id.as_str()) else { continue };
        let response = match outcome {
            DiscriminatorOutcome::Keep => r.kept(),
            DiscriminatorOutcome::Bet => r.bet(),
        };
        let entry = cases.entry(r.item_id.as_str()).or_insert_with(|| (r.track, Vec::new(), Vec::new()));
        entry.1.push(valid);
        entry.2.push(if response { 1.0 } else { 0.0 });
    }
    let items: Vec<_> = cases.into_iter().collect();

    enum Status {
        Tested(ItemDiscriminator),
        Undefined,
        Insufficient,
    }
    let results = map_slice(&items, exec, |(_, (track, membership, response))| {
        let n_valid = membership.iter().filter(|v| **v).count();
        if n_valid < MIN_MODELS_PER_GROUP || membership.len() - n_valid < MIN_MODELS_PER_GROUP {
            return Status::Insufficient;
        }
        match point_biserial(membership, response) {
            Ok(c) => Status::Tested(ItemDiscriminator { track: *track, r: c.r, p: c.p_two_tailed, n: c.n }),
            Err(_) => Status::Undefined,
        }
    });

    let mut block = DiscriminatorBlock {
        outcome,
        per_item: BTreeMap::new(),
        by_track: BTreeMap::new(),
        n_tested: 0,
        n_significant: 0,
        n_undefined: 0,
        n_insufficient: 0,
    };
    for ((item, _), status) in items.iter().zip(results) {
        match status {
            Status::Tested(d) => {
                let count = block.by_track.entry(d.track).or_default();
                count.tested += 1;
                block.n_tested += 1;
                if d.p < DISCRIMINATOR_ALPHA {
                    count.significant += 1;
                    block.n_significant += 1;
                }
                block.per_item.insert(item.to_string(), d);
            }
            Status::Undefined => block.n_undefined += 1,
            Status::Insufficient => block.n_insufficient += 1,
        }
    }
    block
}

/// Joint KEEP/WITHDRAW × BET/NO-BET counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contingency {
    pub keep_bet: usize,
    pub keep_no_bet: usize,
    pub withdraw_bet: usize,
    pub withdraw_no_bet: usize,
}

impl Contingency {
    pub fn n(&self) -> usize {
        self.keep_bet + self.keep_no_bet + self.withdraw_bet + self.withdraw_no_bet
    }

    /// P(WITHDRAW ∧ BET).
    pub fn contradiction_rate(&self) -> Option<f64> {
        (self.n() > 0).then(|| self.withdraw_bet as f64 / self.n() as f64)
    }

    fn push(&mut self, r: &ProbeRecord) {
        match (r.kept(), r.bet()) {
            (true, true) => self.keep_bet += 1,
            (true, false) => self.keep_no_bet += 1,
            (false, true) => self.withdraw_bet += 1,
            (false, false) => self.withdraw_no_bet += 1,
        }
    }
}

pub fn contingency_table<'a, I>(records: I) -> Contingency
where
    I: IntoIterator<Item = &'a ProbeRecord>,
{
    let mut c = Contingency::default();
    records.into_iter().for_each(|r| c.push(r));
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelContingency {
    /// Every record of the model.
    pub all: Contingency,
    /// T1–T5, the scope of the overall indices.
    pub retrospective: Contingency,
    pub per_track: BTreeMap<Track, Contingency>,
}

pub fn model_contingency(records: &[ProbeRecord]) -> ModelContingency {
    let mut per_track: BTreeMap<Track, Contingency> = BTreeMap::new();
    for r in records {
        per_track.entry(r.track).or_default().push(r);
    }
    ModelContingency {
        all: contingency_table(records),
        retrospective: contingency_table(records.iter().filter(|r| !r.track.is_prospective())),
        per_track,
    }
}
