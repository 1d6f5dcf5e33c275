use serde::{Deserialize, Serialize};

use super::special::student_t_two_tailed;
use super::{mean, variance, Result, StatError};

/// Independent-samples t-test variance model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceModel {
    /// Student's pooled-variance test, df = n_a + n_b − 2.
    #[default]
    Pooled,
    /// Welch–Satterthwaite.
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

fn check_groups(a: &[f64], b: &[f64]) -> Result<()> {
    let smallest = a.len().min(b.len());
    if smallest < 2 {
        return Err(StatError::InsufficientSample { needed: 2, got: smallest });
    }
    Ok(())
}

fn pooled_variance(a: &[f64], b: &[f64]) -> Result<f64> {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    Ok(((na - 1.0) * variance(a)? + (nb - 1.0) * variance(b)?) / (na + nb - 2.0))
}

pub fn t_test(a: &[f64], b: &[f64], model: VarianceModel) -> Result<TTest> {
    check_groups(a, b)?;
    let diff = mean(a)? - mean(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (se, df) = match model {
        VarianceModel::Pooled => {
            let sp2 = pooled_variance(a, b)?;
            ((sp2 * (1.0 / na + 1.0 / nb)).sqrt(), na + nb - 2.0)
        }
        VarianceModel::Welch => {
            let (va, vb) = (variance(a)? / na, variance(b)? / nb);
            let df = (va + vb).powi(2) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
            ((va + vb).sqrt(), df)
        }
    };
    if se == 0.0 {
        return Err(StatError::ZeroVariance("both groups are constant"));
    }
    let t = diff / se;
    Ok(TTest { t, df, p: student_t_two_tailed(t, df) })
}

pub fn pooled_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    t_test(a, b, VarianceModel::Pooled)
}

pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    t_test(a, b, VarianceModel::Welch)
}

/// Cohen's d with the pooled (n − 1 weighted) standard deviation.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64> {
    check_groups(a, b)?;
    let sp = pooled_variance(a, b)?.sqrt();
    if sp == 0.0 {
        return Err(StatError::ZeroVariance("pooled standard deviation is zero"));
    }
    Ok((mean(a)? - mean(b)?) / sp)
}
