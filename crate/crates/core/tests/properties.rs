use std::collections::BTreeSet;

use proptest::prelude::*;
use validity_core::data::{
    parse_probe_csv, write_probe_csv, BetDecision, Dataset, KeepDecision, ProbeRecord, ProspectiveChoice, Track,
};
use validity_core::indices::Tally;
use validity_core::statkit::{pearson, point_biserial, replicate_rng};
use validity_core::synthetic::{generate_records, sample_item_accuracies, AccuracyModel, ItemPool, Policy, PolicySpec};

fn record(i: usize, correct: bool, keep: bool, bet: bool) -> ProbeRecord {
    ProbeRecord {
        model_id: "m".into(),
        track: Track::T1,
        item_id: format!("T1_{i:04}"),
        domain: "d".into(),
        correct,
        keep: if keep { KeepDecision::Keep } else { KeepDecision::Withdraw },
        bet: if bet { BetDecision::Bet } else { BetDecision::NoBet },
        prospective: None,
    }
}

fn responses() -> impl Strategy<Value = Vec<(bool, bool, bool)>> {
    prop::collection::vec((any::<bool>(), any::<bool>(), any::<bool>()), 1..300)
}

fn share(
    rows: &[(bool, bool, bool)],
    given: impl Fn(&(bool, bool, bool)) -> bool,
    event: impl Fn(&(bool, bool, bool)) -> bool,
) -> Option<f64> {
    let base: Vec<_> = rows.iter().filter(|r| given(r)).collect();
    (!base.is_empty()).then(|| base.iter().filter(|r| event(r)).count() as f64 / base.len() as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn index_algebra(rows in responses()) {
        let records: Vec<ProbeRecord> = rows.iter().enumerate().map(|(i, &(c, k, b))| record(i, c, k, b)).collect();
        let consensus: BTreeSet<String> = records.iter().step_by(3).map(|r| r.item_id.clone()).collect();
        let t = Tally::from_records(&records, &consensus);

        if let (Ok(l), Ok(wd)) = (t.l(), t.withdraw_given_incorrect()) {
            prop_assert!((l + wd - 1.0).abs() < 1e-12);
        }
        if let (Ok(dw), Ok(rbs)) = (t.withdraw_delta(), t.rbs()) {
            prop_assert!((dw + rbs).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&rbs));
        }
        let trin = t.trin().unwrap();
        prop_assert!((0.5..=1.0).contains(&trin));

        // Brute-force recount from the raw rows.
        let eq = |a: Result<f64, _>, b: Option<f64>| match (a.ok(), b) {
            (Some(x), Some(y)) => (x - y).abs() < 1e-12,
            (None, None) => true,
            _ => false,
        };
        prop_assert!(eq(t.l(), share(&rows, |r| !r.0, |r| r.1)));
        prop_assert!(eq(t.k(), share(&rows, |r| !r.0, |r| r.2)));
        prop_assert!(eq(t.fp(), share(&rows, |r| r.0, |r| !r.1)));
        let in_consensus: Vec<(bool, bool, bool)> = rows.iter().step_by(3).copied().collect();
        prop_assert!(eq(t.f(), share(&in_consensus, |_| true, |r| !r.1)));
        prop_assert!(eq(t.contradiction_rate(), share(&rows, |_| true, |r| !r.1 && r.2)));
        prop_assert!(eq(t.contradiction_rate_correct(), share(&rows, |r| r.0, |r| !r.1 && r.2)));
        prop_assert!(eq(t.accuracy(), share(&rows, |_| true, |r| r.0)));
        prop_assert_eq!(t.keep_bet + t.keep_no_bet + t.withdraw_bet + t.withdraw_no_bet, rows.len());
    }

    #[test]
    fn coupled_probes(rows in prop::collection::vec((any::<bool>(), any::<bool>()), 1..300)) {
        let records: Vec<ProbeRecord> = rows.iter().enumerate().map(|(i, &(c, k))| record(i, c, k, k)).collect();
        let t = Tally::from_records(&records, &BTreeSet::new());
        prop_assert_eq!(t.k().ok(), t.l().ok());
        prop_assert_eq!(t.contradiction_rate().unwrap(), 0.0);
        if let Ok(phi) = t.concordance() {
            prop_assert!((phi - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn point_biserial_matches_closed_form(
        pairs in prop::collection::vec((any::<bool>(), -50.0f64..50.0), 3..100)
    ) {
        let (bin, ys): (Vec<bool>, Vec<f64>) = pairs.into_iter().unzip();
        let n = ys.len() as f64;
        let n1 = bin.iter().filter(|&&b| b).count() as f64;
        let mean = ys.iter().sum::<f64>() / n;
        let sd_pop = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n).sqrt();
        prop_assume!(n1 > 0.0 && n1 < n && sd_pop > 1e-6);
        let m1 = bin.iter().zip(&ys).filter(|(b, _)| **b).map(|(_, y)| y).sum::<f64>() / n1;
        let m0 = bin.iter().zip(&ys).filter(|(b, _)| !**b).map(|(_, y)| y).sum::<f64>() / (n - n1);
        let closed = (m1 - m0) / sd_pop * (n1 / n * (1.0 - n1 / n)).sqrt();
        let r = point_biserial(&bin, &ys).unwrap().r;
        prop_assert!((r - closed).abs() < 1e-9, "{} vs {}", r, closed);
        let coded: Vec<f64> = bin.iter().map(|&b| b as u8 as f64).collect();
        prop_assert!((r - pearson(&coded, &ys).unwrap().r).abs() < 1e-12);
    }
}

#[test]
fn full_battery_round_trips_through_csv() {
    let acc = sample_item_accuracies(&AccuracyModel::default(), 524, 17, None).unwrap();
    let pool = ItemPool::from_accuracies(&acc, 0.85).unwrap();
    let mut records = Vec::new();
    for m in 0..20u64 {
        let policy = Policy::ALL[m as usize % Policy::ALL.len()];
        let mut rng = replicate_rng(17, m);
        records.extend(generate_records(&PolicySpec::new(policy), &pool, &format!("model_{m:02}"), &mut rng));
    }
    assert_eq!(records.len(), 10_480);
    let t6 = records.iter().filter(|r| r.track == Track::T6).count();
    assert!(t6 > 0);
    assert!(records.iter().filter(|r| r.track == Track::T6).all(|r| r.prospective.is_some()));
    assert!(records.iter().any(|r| r.prospective == Some(ProspectiveChoice::Answer)));

    let mut bytes = Vec::new();
    write_probe_csv(&records, &mut bytes).unwrap();
    let parsed = parse_probe_csv(bytes.as_slice()).unwrap();
    assert_eq!(parsed, records);

    let ds = Dataset::build(parsed).unwrap();
    assert_eq!(ds.len(), 10_480);
    assert_eq!(ds.items().len(), 524);
    assert_eq!(ds.model_ids().len(), 20);
}
