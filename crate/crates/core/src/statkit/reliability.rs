use super::{Result, StatError};

/// Spearman–Brown prophecy for doubling test length: 2r / (1 + r).
pub fn spearman_brown(r_half: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&r_half) {
        return Err(StatError::InvalidArgument(format!("r = {r_half} outside [-1, 1]")));
    }
    if r_half == -1.0 {
        return Err(StatError::DivisionByZero("spearman_brown at r = -1"));
    }
    Ok(2.0 * r_half / (1.0 + r_half))
}

/// Cronbach's α over a cases × parts matrix (one row per case).
///
/// Non-finite cells count as missing.
pub fn cronbach_alpha(rows: &[Vec<f64>]) -> Result<f64> {
    let n = rows.len();
    if n < 2 {
        return Err(StatError::InsufficientSample { needed: 2, got: n });
    }
    let k = rows[0].len();
    if k < 2 {
        return Err(StatError::InsufficientSample { needed: 2, got: k });
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != k {
            return Err(StatError::ShapeError(format!("row {i} has {} parts, expected {k}", row.len())));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(StatError::MissingData { row: i, column: j });
        }
    }
    let var = |xs: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = xs.collect();
        let m = v.iter().sum::<f64>() / n as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64
    };
    let part_var: f64 = (0..k).map(|j| var(&mut rows.iter().map(|r| r[j]))).sum();
    let total_var = var(&mut rows.iter().map(|r| r.iter().sum::<f64>()));
    if total_var == 0.0 {
        return Err(StatError::ZeroVariance("row totals are constant"));
    }
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - part_var / total_var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spearman_brown_known_values() {
        assert_eq!(spearman_brown(1.0).unwrap(), 1.0);
        assert!((spearman_brown(0.914).unwrap() - 0.955).abs() < 0.001);
        assert!((spearman_brown(0.979).unwrap() - 0.989).abs() < 0.001);
        assert!(matches!(spearman_brown(-1.0), Err(StatError::DivisionByZero(_))));
    }

    #[test]
    fn spearman_brown_is_monotone() {
        let mut last = f64::NEG_INFINITY;
        for i in -99..=100 {
            let v = spearman_brown(i as f64 / 100.0).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn identical_parts_give_one() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.1; 6]).collect();
        assert!((cronbach_alpha(&rows).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_parts_give_zero() {
        // Monte Carlo oracle: independent columns have E[α] ≈ 0.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let rows: Vec<Vec<f64>> = (0..20_000).map(|_| (0..6).map(|_| rng.gen::<f64>()).collect()).collect();
        let a = cronbach_alpha(&rows).unwrap();
        assert!(a.abs() < 0.05, "alpha = {a}");
    }

    #[test]
    fn missing_and_degenerate() {
        let rows = vec![vec![1.0, f64::NAN], vec![2.0, 3.0]];
        assert_eq!(cronbach_alpha(&rows), Err(StatError::MissingData { row: 0, column: 1 }));
        let rows = vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]];
        assert!(matches!(cronbach_alpha(&rows), Err(StatError::ZeroVariance(_))));
    }
}
