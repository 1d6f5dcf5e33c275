//! The validation battery run over a sample of validity profiles.

mod groups;
mod items;
mod reliability;
mod structure;
mod summaries;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use groups::{
    group_comparison, incremental_fit, incremental_regression, item_sensitivity, GroupComparison, IncrementalResult,
    ItemSensitivity, LeaveOneOut, MIN_REGRESSION_MODELS,
};
pub use items::{
    contingency_table, item_discriminators, model_contingency, Contingency, DiscriminatorBlock, DiscriminatorOutcome,
    ItemDiscriminator, ModelContingency, TrackCount, DISCRIMINATOR_ALPHA, MIN_MODELS_PER_GROUP,
};
pub use reliability::{reliability_suite, AlphaResult, ReliabilityBlock, SplitHalf};
pub use structure::{
    pca_indices, scale_correlations, CorrelationBlock, NamedPair, PairCorrelation, PairKind, PcaResult,
    MIN_CORRELATION_MODELS, MIN_PCA_MODELS, NAMED_PAIRS,
};
pub use summaries::{family_and_paired_summaries, FamilySummary, IndexSpread, PairedDelta, Summaries};

use crate::classify::Classification;
use crate::data::Dataset;
use crate::indices::{IndexName, ValidityProfile};
use crate::par::Execution;
use crate::statkit::{BootstrapConfig, Resampling, StatError};

#[derive(Debug, Error, PartialEq)]
pub enum PsychError {
    #[error("{analysis}: {got} models usable, need {needed}")]
    TooFewModels { analysis: &'static str, needed: usize, got: usize },
    #[error("{analysis}: {source}")]
    Stat { analysis: &'static str, source: StatError },
    #[error("configuration: {0}")]
    Config(String),
}

/// Values of one index across profiles, in profile order.
pub(crate) fn column(profiles: &[ValidityProfile], index: IndexName) -> Vec<Option<f64>> {
    profiles.iter().map(|p| p.get(index)).collect()
}

/// Positions where both series are defined.
pub(crate) fn complete_pairs(a: &[Option<f64>], b: &[Option<f64>]) -> (Vec<f64>, Vec<f64>) {
    a.iter().zip(b).filter_map(|(x, y)| Some(((*x)?, (*y)?))).unzip()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsychConfig {
    pub bootstrap: BootstrapConfig,
    pub resampling: Resampling,
    pub discriminator_outcome: DiscriminatorOutcome,
    pub family_map: BTreeMap<String, String>,
    pub pairs: Vec<(String, String)>,
    pub execution: Execution,
}

impl Default for PsychConfig {
    fn default() -> Self {
        PsychConfig {
            bootstrap: BootstrapConfig::default(),
            resampling: Resampling::Stratified,
            discriminator_outcome: DiscriminatorOutcome::Keep,
            family_map: BTreeMap::new(),
            pairs: Vec::new(),
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetroProspective {
    #[serde(rename = "L_retro")]
    pub l_retro: Option<f64>,
    #[serde(rename = "L_prosp")]
    pub l_prosp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsychometricReport {
    pub n_models: usize,
    pub reliability: ReliabilityBlock,
    pub scale_correlations: CorrelationBlock,
    pub pca: Option<PcaResult>,
    pub item_sensitivity: ItemSensitivity,
    pub group_comparison: Option<GroupComparison>,
    pub incremental: Vec<IncrementalResult>,
    pub contingency: BTreeMap<String, ModelContingency>,
    pub paired_deltas: Vec<PairedDelta>,
    pub retro_prospective: BTreeMap<String, RetroProspective>,
    pub families: Vec<FamilySummary>,
    pub discriminators: DiscriminatorBlock,
    /// Analyses skipped or degraded, with the reason.
    pub warnings: Vec<String>,
}

/// Run every analysis. Failures of individual analyses become warnings;
/// only configuration errors abort.
pub fn psychometric_report(
    ds: &Dataset,
    profiles: &[ValidityProfile],
    consensus: &std::collections::BTreeSet<String>,
    classification: &Classification,
    config: &PsychConfig,
) -> Result<PsychometricReport, PsychError> {
    let mut warnings = Vec::new();
    let exec = config.execution;

    let reliability = reliability_suite(ds, profiles, consensus);
    for a in reliability.alphas.iter().filter(|a| a.alpha.is_none()) {
        warnings.push(format!("alpha({}): {}", a.index, a.note.as_deref().unwrap_or("undefined")));
    }
    let scale_correlations = scale_correlations(profiles);
    let pca = match pca_indices(profiles) {
        Ok(p) => {
            for i in &p.dropped {
                warnings.push(format!("pca: {i} is constant across models and was dropped"));
            }
            Some(p)
        }
        Err(e) => {
            warnings.push(format!("{e}; PCA skipped"));
            None
        }
    };

    let item_sensitivity = item_sensitivity(ds, exec);
    for (m, why) in &item_sensitivity.undefined {
        warnings.push(format!("item sensitivity undefined for {m}: {why}"));
    }
    let r = item_sensitivity.r_values();
    let boot = BootstrapConfig { execution: exec, ..config.bootstrap };
    let group_comparison = match groups::group_comparison(&r, classification, &boot, config.resampling) {
        Ok(g) => Some(g),
        Err(e) => {
            warnings.push(format!("{e}; group comparison skipped"));
            None
        }
    };
    let mut incremental = Vec::new();
    for result in incremental_regression(profiles, &r) {
        match result {
            Ok(block) => incremental.push(block),
            Err(e) => warnings.push(e.to_string()),
        }
    }

    let contingency = ds.by_model().map(|(m, recs)| (m.to_string(), model_contingency(recs))).collect();
    let retro_prospective = profiles
        .iter()
        .map(|p| (p.model_id.clone(), RetroProspective { l_retro: p.l_retro, l_prosp: p.l_prosp }))
        .collect();
    let summaries = family_and_paired_summaries(profiles, &config.family_map, &config.pairs)?;
    let discriminators = item_discriminators(ds, classification, config.discriminator_outcome, exec);
    if discriminators.n_tested == 0 {
        warnings.push("item discriminators: no item had enough models in both groups".into());
    }

    Ok(PsychometricReport {
        n_models: profiles.len(),
        reliability,
        scale_correlations,
        pca,
        item_sensitivity,
        group_comparison,
        incremental,
        contingency,
        paired_deltas: summaries.paired_deltas,
        retro_prospective,
        families: summaries.families,
        discriminators,
        warnings,
    })
}
