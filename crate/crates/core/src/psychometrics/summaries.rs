//! Per-family index summaries and paired-model deltas.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PsychError;
use crate::indices::{IndexName, ValidityProfile};
use crate::statkit::sample_stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexSpread {
    pub n: usize,
    pub mean: f64,
    /// Undefined for a single defined value.
    pub sd: Option<f64>,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub family: String,
    pub models: Vec<String>,
    pub indices: BTreeMap<IndexName, IndexSpread>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDelta {
    pub model_a: String,
    pub model_b: String,
    /// `b − a` per index; absent when either side is undefined.
    pub deltas: BTreeMap<IndexName, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summaries {
    pub families: Vec<FamilySummary>,
    pub paired_deltas: Vec<PairedDelta>,
}

pub fn family_and_paired_summaries(
    profiles: &[ValidityProfile],
    family_map: &BTreeMap<String, String>,
    pairs: &[(String, String)],
) -> Result<Summaries, PsychError> {
    let by_id: BTreeMap<&str, &ValidityProfile> = profiles.iter().map(|p| (p.model_id.as_str(), p)).collect();
    let lookup = |m: &str| by_id.get(m).copied().ok_or_else(|| PsychError::Config(format!("unknown model `{m}`")));

    let mut members: BTreeMap<&str, Vec<&ValidityProfile>> = BTreeMap::new();
    for (model, family) in family_map {
        members.entry(family.as_str()).or_default().push(lookup(model)?);
    }
    let families = members
        .into_iter()
        .map(|(family, ps)| FamilySummary {
            family: family.to_string(),
            models: ps.iter().map(|p| p.model_id.clone()).collect(),
            indices: IndexName::ALL
                .iter()
                .filter_map(|&i| {
                    let xs: Vec<f64> = ps.iter().filter_map(|p| p.get(i)).collect();
                    let s = sample_stats(&xs).ok()?;
                    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
                    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    Some((i, IndexSpread { n: s.n, mean: s.mean, sd: s.sd, min, max }))
                })
                .collect(),
        })
        .collect();

    let paired_deltas = pairs
        .iter()
        .map(|(a, b)| {
            let (pa, pb) = (lookup(a)?, lookup(b)?);
            let deltas = IndexName::ALL.iter().filter_map(|&i| Some((i, pb.get(i)? - pa.get(i)?))).collect();
            Ok(PairedDelta { model_a: a.clone(), model_b: b.clone(), deltas })
        })
        .collect::<Result<_, PsychError>>()?;
    Ok(Summaries { families, paired_deltas })
}
