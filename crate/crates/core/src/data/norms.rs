use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Dataset, Result};

/// Inclusive P(KEEP) cut-off for consensus-endorsed items.
pub const DEFAULT_CONSENSUS_THRESHOLD: f64 = 0.85;

/// Reference rates for one item across the derivation sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemNorm {
    /// Number of models that saw the item.
    pub n: usize,
    pub p_keep: f64,
    pub p_bet: f64,
    pub mean_accuracy: f64,
}

/// Per-item norms keyed by item id. Serializes as the norms-file JSON object.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemNorms(pub BTreeMap<String, ItemNorm>);

#[derive(Default, Clone, Copy)]
struct Counts {
    n: usize,
    keep: usize,
    bet: usize,
    correct: usize,
}

impl ItemNorms {
    /// Norms over every model in the dataset.
    pub fn compute(ds: &Dataset) -> ItemNorms {
        Self::compute_excluding(ds, None)
    }

    /// Norms with one model left out, for contamination-sensitive analyses.
    pub fn compute_excluding(ds: &Dataset, excluded: Option<&str>) -> ItemNorms {
        let mut counts: BTreeMap<&str, Counts> = BTreeMap::new();
        for r in ds.records() {
            if Some(r.model_id.as_str()) == excluded {
                continue;
            }
            let c = counts.entry(&r.item_id).or_default();
            c.n += 1;
            c.keep += r.kept() as usize;
            c.bet += r.bet() as usize;
            c.correct += r.correct as usize;
        }
        ItemNorms(
            counts
                .into_iter()
                .map(|(item, c)| {
                    let n = c.n as f64;
                    (
                        item.to_string(),
                        ItemNorm {
                            n: c.n,
                            p_keep: c.keep as f64 / n,
                            p_bet: c.bet as f64 / n,
                            mean_accuracy: c.correct as f64 / n,
                        },
                    )
                })
                .collect(),
        )
    }

    pub fn get(&self, item: &str) -> Option<&ItemNorm> {
        self.0.get(item)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ItemNorm)> {
        self.0.iter()
    }

    pub fn read_json<R: Read>(source: R) -> Result<ItemNorms> {
        Ok(serde_json::from_reader(source)?)
    }

    pub fn write_json<W: Write>(&self, sink: W) -> Result<()> {
        serde_json::to_writer_pretty(sink, self)?;
        Ok(())
    }
}

/// Items whose P(KEEP) is at or above `threshold`.
pub fn consensus_items(norms: &ItemNorms, threshold: f64) -> BTreeSet<String> {
    // tolerance absorbs the rounding of k/n against a decimal threshold
    norms.iter().filter(|(_, n)| n.p_keep >= threshold - 1e-12).map(|(id, _)| id.clone()).collect()
}
