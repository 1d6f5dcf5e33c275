//! Inter-scale correlations and principal components of the six scales.

use serde::{Deserialize, Serialize};

use super::{column, complete_pairs, PsychError};
use crate::indices::{IndexName, ValidityProfile};
use crate::statkit::{pearson, symmetric_eigen, StatError};

pub const MIN_CORRELATION_MODELS: usize = 4;
pub const MIN_PCA_MODELS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    Convergent,
    Discriminant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedPair {
    pub a: IndexName,
    pub b: IndexName,
    pub kind: PairKind,
    pub result: Option<PairCorrelation>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationBlock {
    pub indices: Vec<IndexName>,
    /// `cells[i][j]` correlates `indices[i]` with `indices[j]`; `None` when undefined.
    pub cells: Vec<Vec<Option<PairCorrelation>>>,
    pub named_pairs: Vec<NamedPair>,
}

impl CorrelationBlock {
    pub fn get(&self, a: IndexName, b: IndexName) -> Option<PairCorrelation> {
        let i = self.indices.iter().position(|x| *x == a)?;
        let j = self.indices.iter().position(|x| *x == b)?;
        self.cells[i][j]
    }
}

pub const NAMED_PAIRS: [(IndexName, IndexName, PairKind); 5] = [
    (IndexName::L, IndexName::K, PairKind::Convergent),
    (IndexName::F, IndexName::Fp, PairKind::Convergent),
    (IndexName::WithdrawDelta, IndexName::BetDelta, PairKind::Convergent),
    (IndexName::L, IndexName::F, PairKind::Discriminant),
    (IndexName::L, IndexName::Accuracy, PairKind::Discriminant),
];

fn correlate(profiles: &[ValidityProfile], a: IndexName, b: IndexName) -> Result<PairCorrelation, StatError> {
    let (x, y) = complete_pairs(&column(profiles, a), &column(profiles, b));
    if x.len() < MIN_CORRELATION_MODELS {
        return Err(StatError::InsufficientSample { needed: MIN_CORRELATION_MODELS, got: x.len() });
    }
    let c = pearson(&x, &y)?;
    Ok(PairCorrelation { r: c.r, p: c.p_two_tailed, n: c.n })
}

/// Pairwise-complete Pearson correlations among the six scales, plus the
/// named convergent and discriminant pairs.
pub fn scale_correlations(profiles: &[ValidityProfile]) -> CorrelationBlock {
    let indices = IndexName::SCALES.to_vec();
    let cells = indices.iter().map(|&a| indices.iter().map(|&b| correlate(profiles, a, b).ok()).collect()).collect();
    let named_pairs = NAMED_PAIRS
        .iter()
        .map(|&(a, b, kind)| {
            let r = correlate(profiles, a, b);
            NamedPair { a, b, kind, note: r.as_ref().err().map(|e| e.to_string()), result: r.ok() }
        })
        .collect();
    CorrelationBlock { indices, cells, named_pairs }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub indices: Vec<IndexName>,
    pub n_models: usize,
    pub eigenvalues: Vec<f64>,
    pub variance_fractions: Vec<f64>,
    /// `loadings[c][j]`: loading of `indices[j]` on component `c`.
    pub loadings: Vec<Vec<f64>>,
    pub correlation: Vec<Vec<f64>>,
    /// Indices dropped for zero variance.
    pub dropped: Vec<IndexName>,
}

/// PCA of the correlation matrix of the six scales over models with every
/// scale defined. Each component is signed so its largest loading is positive.
pub fn pca_indices(profiles: &[ValidityProfile]) -> Result<PcaResult, PsychError> {
    let complete: Vec<&ValidityProfile> =
        profiles.iter().filter(|p| IndexName::SCALES.iter().all(|i| p.get(*i).is_some())).collect();
    let n = complete.len();
    if n < MIN_PCA_MODELS {
        return Err(PsychError::TooFewModels { analysis: "pca", needed: MIN_PCA_MODELS, got: n });
    }
    let mut indices = Vec::new();
    let mut dropped = Vec::new();
    let mut z: Vec<Vec<f64>> = Vec::new();
    for index in IndexName::SCALES {
        let col: Vec<f64> = complete.iter().map(|p| p.get(index).expect("complete")).collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        if sd <= 1e-12 * mean.abs().max(1.0) {
            dropped.push(index);
            continue;
        }
        indices.push(index);
        z.push(col.iter().map(|x| (x - mean) / sd).collect());
    }
    if indices.len() < 2 {
        return Err(PsychError::Stat {
            analysis: "pca",
            source: StatError::ZeroVariance("fewer than two non-constant indices"),
        });
    }
    let p = indices.len();
    let correlation: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| {
                    if i == j {
                        1.0
                    } else {
                        z[i].iter().zip(&z[j]).map(|(a, b)| a * b).sum::<f64>() / (n - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    let eig = symmetric_eigen(&correlation).map_err(|source| PsychError::Stat { analysis: "pca", source })?;
    let total: f64 = eig.values.iter().sum();
    let loadings = eig
        .values
        .iter()
        .zip(&eig.vectors)
        .map(|(&lambda, v)| {
            let scale = lambda.max(0.0).sqrt();
            let mut l: Vec<f64> = v.iter().map(|x| x * scale).collect();
            let lead = l.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            if lead < 0.0 {
                l.iter_mut().for_each(|x| *x = -*x);
            }
            l
        })
        .collect();
    Ok(PcaResult {
        indices,
        n_models: n,
        variance_fractions: eig.values.iter().map(|l| l / total).collect(),
        eigenvalues: eig.values,
        loadings,
        correlation,
        dropped,
    })
}
