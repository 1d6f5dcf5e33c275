//! Item sensitivity and the analyses built on it: valid versus invalid
//! group comparison and incremental prediction from L.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PsychError;
use crate::classify::Classification;
use crate::data::Dataset;
use crate::indices::{IndexName, ValidityProfile};
use crate::par::{map_slice, Execution};
use crate::statkit::{
    bootstrap_two_sample, cohens_d, delta_r2_f_test, mean, ols, point_biserial, pooled_t_test, BootstrapConfig,
    CorrelationResult, FTest, RegressionResult, Resampling, StatError,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemSensitivity {
    pub per_model: BTreeMap<String, CorrelationResult>,
    /// Models without a defined r, with the reason.
    pub undefined: BTreeMap<String, String>,
}

impl ItemSensitivity {
    pub fn r_values(&self) -> BTreeMap<String, f64> {
        self.per_model.iter().map(|(m, c)| (m.clone(), c.r)).collect()
    }
}

/// Point-biserial r between KEEP and correctness over every item a model saw.
pub fn item_sensitivity(ds: &Dataset, exec: Execution) -> ItemSensitivity {
    let models: Vec<(&str, &[crate::data::ProbeRecord])> = ds.by_model().collect();
    let results = map_slice(&models, exec, |(model, records)| {
        let keep: Vec<bool> = records.iter().map(|r| r.kept()).collect();
        let correct: Vec<f64> = records.iter().map(|r| if r.correct { 1.0 } else { 0.0 }).collect();
        (model.to_string(), point_biserial(&keep, &correct))
    });
    let mut out = ItemSensitivity { per_model: BTreeMap::new(), undefined: BTreeMap::new() };
    for (model, r) in results {
        match r {
            Ok(c) => {
                out.per_model.insert(model, c);
            }
            Err(e) => {
                out.undefined.insert(model, e.to_string());
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaveOneOut {
    pub d: Option<f64>,
    pub p: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub valid: Vec<String>,
    pub invalid: Vec<String>,
    pub mean_valid: f64,
    pub mean_invalid: f64,
    pub d: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub ci_level: f64,
    pub bootstrap_iterations: usize,
    pub bootstrap_skipped: usize,
    pub resampling: Resampling,
    pub seed: u64,
    pub leave_one_out: BTreeMap<String, LeaveOneOut>,
    pub notes: Vec<String>,
}

/// Valid-side (Valid and Tier 2) against Tier 1 on a per-model value,
/// with a bootstrap CI on d and leave-one-out robustness.
pub fn group_comparison(
    values: &BTreeMap<String, f64>,
    classification: &Classification,
    boot: &BootstrapConfig,
    resampling: Resampling,
) -> Result<GroupComparison, PsychError> {
    let err = |source| PsychError::Stat { analysis: "group_comparison", source };
    let mut notes = Vec::new();
    let (mut valid, mut invalid) = (Vec::new(), Vec::new());
    for a in &classification.assignments {
        let Some(&v) = values.get(&a.model_id) else {
            notes.push(format!("{} excluded: value undefined", a.model_id));
            continue;
        };
        if a.tier.is_valid_side() {
            valid.push((a.model_id.clone(), v));
        } else if a.tier == crate::classify::Tier::Tier1Invalid {
            invalid.push((a.model_id.clone(), v));
        }
    }
    let xs = |g: &[(String, f64)]| g.iter().map(|(_, v)| *v).collect::<Vec<f64>>();
    let (a, b) = (xs(&valid), xs(&invalid));
    let t = pooled_t_test(&a, &b).map_err(err)?;
    let d = cohens_d(&a, &b).map_err(err)?;

    let (mut ci_low, mut ci_high, mut skipped) = (None, None, 0);
    match bootstrap_two_sample(&a, &b, resampling, boot, |x, y| cohens_d(x, y).ok()) {
        Ok(r) => {
            ci_low = Some(r.ci_low);
            ci_high = Some(r.ci_high);
            skipped = r.skipped;
        }
        Err(e) => notes.push(format!("bootstrap CI unavailable: {e}")),
    }

    let mut leave_one_out = BTreeMap::new();
    for (group_is_valid, group) in [(true, &valid), (false, &invalid)] {
        for (i, (model, _)) in group.iter().enumerate() {
            let rest: Vec<f64> = group.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, (_, v))| *v).collect();
            let (x, y) = if group_is_valid { (&rest, &b) } else { (&a, &rest) };
            let entry = match (cohens_d(x, y), pooled_t_test(x, y)) {
                (Ok(d), Ok(t)) => LeaveOneOut { d: Some(d), p: Some(t.p), note: None },
                (Err(e), _) | (_, Err(e)) => LeaveOneOut { d: None, p: None, note: Some(e.to_string()) },
            };
            leave_one_out.insert(model.clone(), entry);
        }
    }

    Ok(GroupComparison {
        mean_valid: mean(&a).map_err(err)?,
        mean_invalid: mean(&b).map_err(err)?,
        valid: valid.into_iter().map(|(m, _)| m).collect(),
        invalid: invalid.into_iter().map(|(m, _)| m).collect(),
        d,
        t: t.t,
        df: t.df,
        p: t.p,
        ci_low,
        ci_high,
        ci_level: boot.ci_level,
        bootstrap_iterations: boot.iterations,
        bootstrap_skipped: skipped,
        resampling,
        seed: boot.seed,
        leave_one_out,
        notes,
    })
}

pub const MIN_REGRESSION_MODELS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementalResult {
    /// Dependent variable name.
    pub dv: String,
    pub n: usize,
    pub reduced: RegressionResult,
    /// `None` when L is collinear with the reduced design and was dropped.
    pub full: Option<RegressionResult>,
    pub r2_reduced: f64,
    pub r2_full: f64,
    pub delta_r2: f64,
    pub f_test: Option<FTest>,
    pub note: Option<String>,
}

/// `y ~ accuracy` against `y ~ accuracy + L`.
pub fn incremental_fit(dv: &str, y: &[f64], accuracy: &[f64], l: &[f64]) -> Result<IncrementalResult, PsychError> {
    let err = |source| PsychError::Stat { analysis: "incremental_regression", source };
    if y.len() < MIN_REGRESSION_MODELS {
        return Err(PsychError::TooFewModels {
            analysis: "incremental_regression",
            needed: MIN_REGRESSION_MODELS,
            got: y.len(),
        });
    }
    let reduced = ols(y, &[accuracy.to_vec()]).map_err(err)?;
    match ols(y, &[accuracy.to_vec(), l.to_vec()]) {
        Ok(full) => {
            let f_test = delta_r2_f_test(reduced.r_squared, full.r_squared, y.len(), 1, 2);
            Ok(IncrementalResult {
                dv: dv.to_string(),
                n: y.len(),
                r2_reduced: reduced.r_squared,
                r2_full: full.r_squared,
                delta_r2: full.r_squared - reduced.r_squared,
                note: f_test.as_ref().err().map(|e| e.to_string()),
                f_test: f_test.ok(),
                reduced,
                full: Some(full),
            })
        }
        Err(StatError::SingularDesign { column: 2 }) => Ok(IncrementalResult {
            dv: dv.to_string(),
            n: y.len(),
            r2_reduced: reduced.r_squared,
            r2_full: reduced.r_squared,
            delta_r2: 0.0,
            f_test: None,
            note: Some("L is collinear with the reduced design and was dropped".into()),
            reduced,
            full: None,
        }),
        Err(e) => Err(err(e)),
    }
}

/// Incremental validity of L over accuracy for withdraw_delta and for item
/// sensitivity r.
pub fn incremental_regression(
    profiles: &[ValidityProfile],
    sensitivity: &BTreeMap<String, f64>,
) -> Vec<Result<IncrementalResult, PsychError>> {
    type Dv<'a> = Box<dyn Fn(&ValidityProfile) -> Option<f64> + 'a>;
    let dvs: [(&str, Dv); 2] = [
        ("withdraw_delta", Box::new(|p: &ValidityProfile| p.get(IndexName::WithdrawDelta))),
        ("item_sensitivity_r", Box::new(|p: &ValidityProfile| sensitivity.get(&p.model_id).copied())),
    ];
    dvs.iter()
        .map(|(name, dv)| {
            let rows: Vec<(f64, f64, f64)> = profiles
                .iter()
                .filter_map(|p| Some((dv(p)?, p.get(IndexName::Accuracy)?, p.get(IndexName::L)?)))
                .collect();
            let y: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let acc: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let l: Vec<f64> = rows.iter().map(|r| r.2).collect();
            incremental_fit(name, &y, &acc, &l)
        })
        .collect()
}
