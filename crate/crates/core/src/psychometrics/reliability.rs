//! Internal consistency across tracks and odd/even split-half reliability.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::complete_pairs;
use crate::data::{Dataset, Track};
use crate::indices::{IndexName, Tally, ValidityProfile};
use crate::statkit::{cronbach_alpha, pearson, spearman_brown};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaResult {
    pub index: IndexName,
    pub alpha: Option<f64>,
    /// Tracks used as parts.
    pub parts: Vec<Track>,
    pub n_models: usize,
    /// Models dropped for an undefined track value.
    pub n_dropped: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitHalf {
    pub index: IndexName,
    pub track: Track,
    pub n_models: usize,
    pub r: Option<f64>,
    pub r_sb: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBlock {
    pub alphas: Vec<AlphaResult>,
    pub split_half: Vec<SplitHalf>,
}

impl ReliabilityBlock {
    pub fn alpha(&self, index: IndexName) -> Option<f64> {
        self.alphas.iter().find(|a| a.index == index).and_then(|a| a.alpha)
    }

    pub fn split(&self, index: IndexName, track: Track) -> Option<&SplitHalf> {
        self.split_half.iter().find(|s| s.index == index && s.track == track)
    }
}

/// α per scale with tracks as parts and models as cases, plus an odd/even
/// split-half grid over scales × tracks.
pub fn reliability_suite(ds: &Dataset, profiles: &[ValidityProfile], consensus: &BTreeSet<String>) -> ReliabilityBlock {
    let tracks: Vec<Track> = Track::ALL.into_iter().filter(|t| ds.track_sizes().contains_key(t)).collect();
    let alphas = IndexName::SCALES.iter().map(|&index| alpha_for(index, &tracks, profiles)).collect();

    // item position is its lexicographic rank within the track
    let mut odd: BTreeSet<&str> = BTreeSet::new();
    for &track in &tracks {
        let ids = ds.items().iter().filter(|(_, info)| info.track == track).map(|(id, _)| id.as_str());
        odd.extend(ids.enumerate().filter(|(i, _)| i % 2 == 0).map(|(_, id)| id));
    }
    let mut halves: BTreeMap<(Track, bool), Vec<Tally>> = BTreeMap::new();
    for (_, records) in ds.by_model() {
        let mut tallies: BTreeMap<(Track, bool), Tally> =
            tracks.iter().flat_map(|t| [((*t, true), Tally::default()), ((*t, false), Tally::default())]).collect();
        for r in records {
            let slot = tallies.get_mut(&(r.track, odd.contains(r.item_id.as_str()))).expect("known track");
            slot.push(r, consensus.contains(&r.item_id));
        }
        for (key, t) in tallies {
            halves.entry(key).or_default().push(t);
        }
    }

    let mut split_half = Vec::new();
    for &index in &IndexName::SCALES {
        for &track in &tracks {
            let value = |odd: bool| -> Vec<Option<f64>> {
                halves[&(track, odd)].iter().map(|t| index.get(&t.values())).collect()
            };
            let (a, b) = complete_pairs(&value(true), &value(false));
            let mut entry = SplitHalf { index, track, n_models: a.len(), r: None, r_sb: None, note: None };
            match pearson(&a, &b) {
                Ok(c) => {
                    entry.r = Some(c.r);
                    match spearman_brown(c.r) {
                        Ok(sb) => entry.r_sb = Some(sb),
                        Err(e) => entry.note = Some(e.to_string()),
                    }
                }
                Err(e) => entry.note = Some(e.to_string()),
            }
            split_half.push(entry);
        }
    }
    ReliabilityBlock { alphas, split_half }
}

fn alpha_for(index: IndexName, tracks: &[Track], profiles: &[ValidityProfile]) -> AlphaResult {
    let rows: Vec<Vec<f64>> = profiles
        .iter()
        .filter_map(|p| tracks.iter().map(|t| p.per_track.get(t).and_then(|v| index.get(v))).collect())
        .collect();
    let mut out = AlphaResult {
        index,
        alpha: None,
        parts: tracks.to_vec(),
        n_models: rows.len(),
        n_dropped: profiles.len() - rows.len(),
        note: None,
    };
    if tracks.len() < 2 {
        out.note = Some("fewer than two tracks".into());
    } else if rows.len() < 3 {
        out.note = Some(format!("{} complete models, need 3", rows.len()));
    } else {
        match cronbach_alpha(&rows) {
            Ok(a) => out.alpha = Some(a),
            Err(e) => out.note = Some(e.to_string()),
        }
    }
    out
}
