use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{DataError, ProbeRecord, Result, Track};

/// Item counts per track in the complete battery (524 items).
pub const EXPECTED_TRACK_SIZES: [(Track, usize); 6] =
    [(Track::T1, 98), (Track::T2, 90), (Track::T3, 116), (Track::T4, 60), (Track::T5, 88), (Track::T6, 72)];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemInfo {
    pub track: Track,
    pub domain: String,
}

/// Validated, indexed probe records.
///
/// Records are held sorted by `(model_id, item_id)`; each model's records
/// form one contiguous slice.
#[derive(Debug, Clone)]
pub struct Dataset {
    records: Vec<ProbeRecord>,
    models: BTreeMap<String, Range<usize>>,
    items: BTreeMap<String, ItemInfo>,
    track_sizes: BTreeMap<Track, usize>,
}

impl Dataset {
    pub fn build(mut records: Vec<ProbeRecord>) -> Result<Dataset> {
        if records.is_empty() {
            return Err(DataError::EmptyInput);
        }
        records.sort_by(|a, b| (&a.model_id, &a.item_id).cmp(&(&b.model_id, &b.item_id)));
        if let Some(w) = records.windows(2).find(|w| w[0].model_id == w[1].model_id && w[0].item_id == w[1].item_id) {
            return Err(DataError::DuplicateRecord { model: w[0].model_id.clone(), item: w[0].item_id.clone() });
        }

        let mut items: BTreeMap<String, ItemInfo> = BTreeMap::new();
        for r in &records {
            match items.get(&r.item_id) {
                Some(info) if info.track != r.track => {
                    return Err(DataError::InconsistentItem {
                        item: r.item_id.clone(),
                        first: info.track,
                        second: r.track,
                    })
                }
                Some(_) => {}
                None => {
                    items.insert(r.item_id.clone(), ItemInfo { track: r.track, domain: r.domain.clone() });
                }
            }
        }
        let mut track_sizes = BTreeMap::new();
        for info in items.values() {
            *track_sizes.entry(info.track).or_insert(0) += 1;
        }

        let mut models = BTreeMap::new();
        let mut start = 0;
        for i in 1..=records.len() {
            if i == records.len() || records[i].model_id != records[start].model_id {
                models.insert(records[start].model_id.clone(), start..i);
                start = i;
            }
        }
        Ok(Dataset { records, models, items, track_sizes })
    }

    pub fn records(&self) -> &[ProbeRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn model_ids(&self) -> Vec<String> {
        self.models.keys().cloned().collect()
    }

    pub fn model_records(&self, model: &str) -> Option<&[ProbeRecord]> {
        self.models.get(model).map(|r| &self.records[r.clone()])
    }

    /// `(model_id, records)` pairs in model order.
    pub fn by_model(&self) -> impl Iterator<Item = (&str, &[ProbeRecord])> {
        self.models.iter().map(|(m, r)| (m.as_str(), &self.records[r.clone()]))
    }

    pub fn items(&self) -> &BTreeMap<String, ItemInfo> {
        &self.items
    }

    pub fn item_track(&self, item: &str) -> Option<Track> {
        self.items.get(item).map(|i| i.track)
    }

    pub fn track_sizes(&self) -> &BTreeMap<Track, usize> {
        &self.track_sizes
    }

    /// Items administered to each model.
    pub fn coverage(&self) -> BTreeMap<String, usize> {
        self.models.iter().map(|(m, r)| (m.clone(), r.len())).collect()
    }

    /// Deviations from the full battery layout and from complete coverage.
    /// These are informational; partial batteries are valid input.
    pub fn battery_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (track, expected) in EXPECTED_TRACK_SIZES {
            let got = self.track_sizes.get(&track).copied().unwrap_or(0);
            if got != expected {
                out.push(format!("{track}: {got} items (full battery has {expected})"));
            }
        }
        let total = self.items.len();
        for (model, n) in self.coverage() {
            if n != total {
                out.push(format!("model `{model}` has {n} of {total} items"));
            }
        }
        out
    }
}
