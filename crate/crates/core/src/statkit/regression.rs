use serde::{Deserialize, Serialize};

use super::special::f_upper_tail;
use super::{Result, StatError};

/// Relative size below which a pivot is treated as zero.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    /// Intercept first, then one coefficient per predictor column.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub n: usize,
    pub k: usize,
}

/// Ordinary least squares with an intercept, solved by Householder QR.
///
/// `predictors` holds one vector per predictor (column-major).
pub fn ols(y: &[f64], predictors: &[Vec<f64>]) -> Result<RegressionResult> {
    let n = y.len();
    let k = predictors.len();
    for (j, col) in predictors.iter().enumerate() {
        if col.len() != n {
            return Err(StatError::ShapeError(format!("predictor {j} has {} rows, response has {n}", col.len())));
        }
    }
    if n < k + 2 {
        return Err(StatError::InsufficientSample { needed: k + 2, got: n });
    }
    let p = k + 1;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(p);
    cols.push(vec![1.0; n]);
    cols.extend(predictors.iter().cloned());
    let mut qty = y.to_vec();

    for j in 0..p {
        let original: f64 = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm: f64 = cols[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if original == 0.0 || norm <= RANK_TOLERANCE * original {
            // column 0 is the intercept, column j the (j-1)th predictor
            return Err(StatError::SingularDesign { column: j });
        }
        let alpha = if cols[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = cols[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |target: &mut [f64]| {
            let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
            let s = 2.0 * dot / vnorm2;
            for (t, vi) in target.iter_mut().zip(&v) {
                *t -= s * vi;
            }
        };
        for col in cols.iter_mut().skip(j) {
            reflect(&mut col[j..]);
        }
        reflect(&mut qty[j..]);
    }

    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let mut acc = qty[i];
        for (j, b) in beta.iter().enumerate().skip(i + 1) {
            acc -= cols[j][i] * b;
        }
        beta[i] = acc / cols[i][i];
    }

    let my = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sst == 0.0 {
        return Err(StatError::ZeroVariance("response is constant"));
    }
    let sse: f64 = (0..n)
        .map(|i| {
            let fitted = beta[0] + (0..k).map(|j| beta[j + 1] * predictors[j][i]).sum::<f64>();
            (y[i] - fitted).powi(2)
        })
        .sum();
    Ok(RegressionResult { coefficients: beta, r_squared: (1.0 - sse / sst).clamp(0.0, 1.0), n, k })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FTest {
    pub f: f64,
    pub df1: usize,
    pub df2: usize,
    pub p: f64,
}

/// F test for the R² increment of nested models.
pub fn delta_r2_f_test(r2_reduced: f64, r2_full: f64, n: usize, added: usize, k_full: usize) -> Result<FTest> {
    if added == 0 {
        return Err(StatError::InvalidArgument("no predictors added".into()));
    }
    if n < k_full + 2 {
        return Err(StatError::InsufficientSample { needed: k_full + 2, got: n });
    }
    let delta = r2_full - r2_reduced;
    if delta < -1e-12 {
        return Err(StatError::InvalidArgument(format!("full-model R² {r2_full} below reduced {r2_reduced}")));
    }
    if r2_full >= 1.0 {
        return Err(StatError::DegenerateFit);
    }
    let df2 = n - k_full - 1;
    let f = (delta.max(0.0) / added as f64) / ((1.0 - r2_full) / df2 as f64);
    Ok(FTest { f, df1: added, df2, p: f_upper_tail(f, added as f64, df2 as f64) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let fit = ols(&y, &[x]).unwrap();
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-10);
        assert!((fit.coefficients[1] + 2.0).abs() < 1e-10);
    }

    #[test]
    fn orthogonal_response() {
        let x = vec![-1.0, 1.0, -1.0, 1.0, 0.0, 0.0];
        let y = vec![1.0, 1.0, -1.0, -1.0, 2.0, -2.0];
        let fit = ols(&y, &[x]).unwrap();
        assert!(fit.r_squared < 1e-10);
    }

    #[test]
    fn singular_design() {
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let twice: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let y = vec![1.0, 3.0, 2.0, 5.0, 4.0];
        assert!(matches!(ols(&y, &[x, twice]), Err(StatError::SingularDesign { column: 2 })));
        assert!(matches!(ols(&y, &[vec![7.0; 5]]), Err(StatError::SingularDesign { column: 1 })));
    }

    #[test]
    fn increment_from_r2_moments() {
        let f = delta_r2_f_test(0.032, 0.357, 20, 1, 2).unwrap();
        assert_eq!((f.df1, f.df2), (1, 17));
        assert!((f.f - 8.59).abs() < 0.02, "F = {}", f.f);
        assert!((f.p - 0.009).abs() < 0.001, "p = {}", f.p);

        let f = delta_r2_f_test(0.071, 0.237, 20, 1, 2).unwrap();
        assert!((f.f - 3.71).abs() < 0.02, "F = {}", f.f);
        assert!((f.p - 0.071).abs() < 0.002, "p = {}", f.p);
    }

    #[test]
    fn null_increment_and_degenerate() {
        let f = delta_r2_f_test(0.2, 0.2, 20, 1, 2).unwrap();
        assert_eq!(f.f, 0.0);
        assert_eq!(f.p, 1.0);
        assert_eq!(delta_r2_f_test(0.5, 1.0, 20, 1, 2), Err(StatError::DegenerateFit));
    }

    proptest! {
        #[test]
        fn r2_never_drops_when_adding_a_predictor(
            rows in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64), 6..30)
        ) {
            let y: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let a: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let b: Vec<f64> = rows.iter().map(|r| r.2).collect();
            if let (Ok(small), Ok(big)) = (ols(&y, std::slice::from_ref(&a)), ols(&y, &[a, b])) {
                prop_assert!(big.r_squared >= small.r_squared - 1e-12);
            }
        }

        #[test]
        fn r2_invariant_under_affine_rescaling(
            rows in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64), 6..30),
            scale in prop_oneof![-50.0..-0.1f64, 0.1..50.0f64],
            shift in -100.0..100.0f64,
        ) {
            let y: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let a: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let b: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let a2: Vec<f64> = a.iter().map(|v| scale * v + shift).collect();
            if let (Ok(one), Ok(two)) = (ols(&y, &[a, b.clone()]), ols(&y, &[a2, b])) {
                prop_assert!((one.r_squared - two.r_squared).abs() < 1e-9);
            }
        }
    }
}
