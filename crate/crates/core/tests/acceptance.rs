//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.
//!
//! Criterion 8 needs the 20-model derivation CSVs. Point
//! `VALIDITY_DATA_DIR` at them (and optionally `VALIDITY_NORMS` at a norms
//! file); without it the criterion reports SKIP.

#![allow(clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use tempfile::TempDir;
use validity_core::classify::{Grid, Tier};
use validity_core::data::{Dataset, ProbeRecord};
use validity_core::indices::{compute_profile, IndexName, IndexValues, ProfileConfig, Tally, ValidityProfile};
use validity_core::par::Execution;
use validity_core::psychometrics::{item_sensitivity, pca_indices};
use validity_core::report::{
    cmd_plot, cmd_psych, cmd_screen, cmd_sweep, cmd_synthetic, CommandOutput, Figure, PsychReport, RunConfig,
    SweepReport,
};
use validity_core::statkit::{
    cohens_d, delta_r2_f_test, pearson, point_biserial, pooled_t_test, replicate_rng, spearman_brown, symmetric_eigen,
};
use validity_core::synthetic::{
    generate_policy_dataset, generate_records, run_policy_validation, sample_item_accuracies, AccuracyModel, ItemPool,
    Policy, PolicySpec, ValidationConfig, Verdict,
};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;
type Criterion = Box<dyn FnOnce() -> Result<Outcome, String>>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(x: f64, target: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((x - target).abs() <= tol, || format!("{what} = {x:.6}, expected {target} ± {tol}"))
}

fn default_pool(seed: u64) -> ItemPool {
    let acc = sample_item_accuracies(&AccuracyModel::default(), 524, seed, None).unwrap();
    ItemPool::from_accuracies(&acc, 0.85).unwrap()
}

fn synthetic_matrix() -> Check {
    let expected_flagged = [
        Policy::AlwaysKeepBet,
        Policy::AlwaysWithdrawNoBet,
        Policy::Random5050,
        Policy::InvertedMonitor,
        Policy::R1Like,
    ];
    let mut slowest = 0.0f64;
    for seed in [0u64, 1, 42, 2024, 987_654_321] {
        let pool = default_pool(seed);
        let cfg = ValidationConfig { iterations: 1000, seed, ..Default::default() };
        let start = Instant::now();
        let m = run_policy_validation(&PolicySpec::battery(), &pool, &cfg).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed().as_secs_f64());
        for p in &m.policies {
            let want = if expected_flagged.contains(&p.policy) { Verdict::Flagged } else { Verdict::Passed };
            ensure(p.verdict == want, || format!("seed {seed}: {} got {:?}", p.policy, p.verdict))?;
        }
        ensure(m.policies.len() == 8 && m.all_pass(), || format!("seed {seed}: {:?}", m.failures()))?;
    }
    ensure(slowest < 60.0, || format!("slowest run {slowest:.1} s"))?;
    Ok(format!("8/8 verdicts on 5 seeds, slowest run {slowest:.1} s"))
}

fn bootstrap_distributions() -> Check {
    let mut lines = Vec::new();
    for seed in [0u64, 7] {
        let pool = default_pool(seed);
        let specs = [PolicySpec::new(Policy::Random5050), PolicySpec::new(Policy::NoisyMonitor)];
        let cfg = ValidationConfig { iterations: 1000, seed, ..Default::default() };
        let m = run_policy_validation(&specs, &pool, &cfg).map_err(|e| e.to_string())?;
        let r = m.get(Policy::Random5050).unwrap().summary("withdraw_delta").unwrap();
        let n = m.get(Policy::NoisyMonitor).unwrap().summary("withdraw_delta").unwrap();
        let (rm, rs, nm, ns) = (r.mean.unwrap(), r.sd.unwrap(), n.mean.unwrap(), n.sd.unwrap());
        ensure((-0.01..=0.01).contains(&rm), || format!("Random5050 M = {rm:.4}"))?;
        ensure((0.05..=0.09).contains(&rs), || format!("Random5050 SD = {rs:.4}"))?;
        ensure((0.38..=0.42).contains(&nm), || format!("NoisyMonitor M = {nm:.4}"))?;
        ensure((0.04..=0.09).contains(&ns), || format!("NoisyMonitor SD = {ns:.4}"))?;
        let (r_hi, n_lo) = (r.ci_high.unwrap(), n.ci_low.unwrap());
        ensure(r_hi < n_lo, || format!("CIs overlap: Random5050 upper {r_hi:.3}, NoisyMonitor lower {n_lo:.3}"))?;
        lines.push(format!("seed {seed}: R5050 {rm:+.3}/{rs:.3}, Noisy {nm:.3}/{ns:.3}"));
    }
    Ok(lines.join("; "))
}

/// `n` evenly spaced values rescaled to an exact mean and sample SD.
fn with_moments(n: usize, mean: f64, sd: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let m = raw.iter().sum::<f64>() / n as f64;
    let s = (raw.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    raw.iter().map(|x| mean + sd * (x - m) / s).collect()
}

fn statistical_fixtures() -> Check {
    let valid = with_moments(16, 0.180, 0.058);
    let invalid = with_moments(4, -0.196, 0.403);
    let t = pooled_t_test(&valid, &invalid).map_err(|e| e.to_string())?;
    let d = cohens_d(&valid, &invalid).map_err(|e| e.to_string())?;
    within(d, 2.17, 0.01, "d")?;
    within(t.t, 3.89, 0.01, "t")?;
    ensure(t.df == 18.0, || format!("df = {}", t.df))?;

    let f = delta_r2_f_test(0.032, 0.357, 20, 1, 2).map_err(|e| e.to_string())?;
    within(f.f, 8.59, 0.02, "F")?;
    ensure((f.df1, f.df2) == (1, 17), || format!("df = ({}, {})", f.df1, f.df2))?;
    within(f.p, 0.009, 0.001, "p")?;

    let sb1 = spearman_brown(0.914).map_err(|e| e.to_string())?;
    let sb2 = spearman_brown(0.979).map_err(|e| e.to_string())?;
    within(sb1, 0.955, 0.001, "SB(.914)")?;
    within(sb2, 0.989, 0.001, "SB(.979)")?;
    Ok(format!("d = {d:.3}, t({}) = {:.3}; F(1,17) = {:.3}, p = {:.4}; SB {sb1:.3}, {sb2:.3}", t.df, t.t, f.f, f.p))
}

fn policy_identities() -> Check {
    let config = ProfileConfig::default();
    for seed in [0u64, 3, 99] {
        let pool = default_pool(seed);
        let mut records = Vec::new();
        let mut profiles: BTreeMap<Policy, ValidityProfile> = BTreeMap::new();
        for policy in [Policy::PerfectMonitor, Policy::InvertedMonitor, Policy::AlwaysKeepBet, Policy::R1Like] {
            let rows = generate_policy_dataset(&PolicySpec::new(policy), &pool, seed);
            profiles.insert(policy, compute_profile(policy.as_str(), &rows, &pool.consensus, &config));
            records.extend(rows);
        }
        let ds = Dataset::build(records).map_err(|e| e.to_string())?;
        let sens = item_sensitivity(&ds, Execution::Parallel).r_values();
        let get = |p: Policy, i: IndexName| profiles[&p].get(i);

        let perfect = Policy::PerfectMonitor;
        ensure(get(perfect, IndexName::L) == Some(0.0), || format!("seed {seed}: PerfectMonitor L"))?;
        ensure(get(perfect, IndexName::Fp) == Some(0.0), || format!("seed {seed}: PerfectMonitor Fp"))?;
        ensure(get(perfect, IndexName::Rbs) == Some(-1.0), || format!("seed {seed}: PerfectMonitor RBS"))?;
        within(sens["PerfectMonitor"], 1.0, 1e-12, "PerfectMonitor r")?;
        within(sens["InvertedMonitor"], -1.0, 1e-12, "InvertedMonitor r")?;
        let akb = Policy::AlwaysKeepBet;
        for i in [IndexName::L, IndexName::K, IndexName::Trin] {
            ensure(get(akb, i) == Some(1.0), || format!("seed {seed}: AlwaysKeepBet {i}"))?;
        }
        ensure(get(akb, IndexName::WithdrawDelta) == Some(0.0), || format!("seed {seed}: AlwaysKeepBet Δw"))?;
        let crc = profiles[&Policy::R1Like].tally.contradiction_rate_correct().ok();
        ensure(crc == Some(1.0), || format!("seed {seed}: R1Like contradiction_rate_correct = {crc:?}"))?;
    }
    Ok("exact on 3 seeds".into())
}

fn brute_force(records: &[ProbeRecord], consensus: &BTreeSet<String>) -> IndexValues {
    let retro: Vec<&ProbeRecord> = records.iter().filter(|r| !r.track.is_prospective()).collect();
    let share = |base: &dyn Fn(&ProbeRecord) -> bool, event: &dyn Fn(&ProbeRecord) -> bool| {
        let b: Vec<&&ProbeRecord> = retro.iter().filter(|r| base(r)).collect();
        (!b.is_empty()).then(|| b.iter().filter(|r| event(r)).count() as f64 / b.len() as f64)
    };
    let keep_share = share(&|_| true, &|r| r.kept()).unwrap();
    let mut v = IndexValues::default();
    *IndexName::L.slot_mut(&mut v) = share(&|r| !r.correct, &|r| r.kept());
    *IndexName::K.slot_mut(&mut v) = share(&|r| !r.correct, &|r| r.bet());
    *IndexName::F.slot_mut(&mut v) = share(&|r| consensus.contains(&r.item_id), &|r| r.withdrew());
    *IndexName::Fp.slot_mut(&mut v) = share(&|r| r.correct, &|r| r.withdrew());
    *IndexName::Trin.slot_mut(&mut v) = Some(keep_share.max(1.0 - keep_share));
    *IndexName::Rbs.slot_mut(&mut v) =
        share(&|r| r.correct, &|r| r.withdrew()).zip(share(&|r| !r.correct, &|r| r.withdrew())).map(|(a, b)| a - b);
    v
}

fn index_algebra() -> Check {
    let config = ProfileConfig::default();
    let mut rng = replicate_rng(5, 0);
    let mut checked = 0usize;
    let mut pool = default_pool(0);
    for m in 0..1000u64 {
        if m % 50 == 0 {
            let n_items = rng.gen_range(60..=524);
            let model =
                if m % 100 == 0 { AccuracyModel::Uniform { lo: 0.2, hi: 0.95 } } else { AccuracyModel::default() };
            let acc = sample_item_accuracies(&model, n_items, m, None).map_err(|e| e.to_string())?;
            pool = ItemPool::from_accuracies(&acc, 0.85).map_err(|e| e.to_string())?;
        }
        let policy = Policy::ALL[rng.gen_range(0..Policy::ALL.len())];
        let mut spec = PolicySpec::new(policy);
        match policy {
            Policy::Random5050 | Policy::Random80Keep => {
                spec = spec.with_param("keep_prob", rng.gen_range(0.05..0.95)).unwrap();
            }
            Policy::NoisyMonitor => {
                spec = spec
                    .with_param("keep_on_correct", rng.gen_range(0.05..0.95))
                    .unwrap()
                    .with_param("withdraw_on_incorrect", rng.gen_range(0.05..0.95))
                    .unwrap();
            }
            _ => {}
        }
        let records = generate_records(&spec, &pool, &format!("m{m}"), &mut replicate_rng(m, 1));
        let p = compute_profile(&format!("m{m}"), &records, &pool.consensus, &config);
        let t = &p.tally;

        if let (Ok(l), Ok(wd)) = (t.l(), t.withdraw_given_incorrect()) {
            ensure((l + wd - 1.0).abs() <= 1e-12, || format!("model {m}: L + P(WD|inc) = {}", l + wd))?;
        }
        if let (Some(dw), Some(rbs)) = (p.get(IndexName::WithdrawDelta), p.get(IndexName::Rbs)) {
            ensure((dw + rbs).abs() <= 1e-12, || format!("model {m}: Δw + RBS = {}", dw + rbs))?;
        }
        let brute = brute_force(&records, &pool.consensus);
        for i in [IndexName::L, IndexName::K, IndexName::F, IndexName::Fp, IndexName::Rbs, IndexName::Trin] {
            let (a, b) = (p.get(i), i.get(&brute));
            let same = match (a, b) {
                (Some(x), Some(y)) => (x - y).abs() <= 1e-12,
                (None, None) => true,
                _ => false,
            };
            ensure(same, || format!("model {m}: {i} streaming {a:?} vs recount {b:?}"))?;
        }
        let streaming = Tally::from_records(records.iter().filter(|r| !r.track.is_prospective()), &pool.consensus);
        ensure(streaming == *t, || format!("model {m}: tally mismatch"))?;

        let keep: Vec<bool> = records.iter().map(|r| r.kept()).collect();
        let correct: Vec<f64> = records.iter().map(|r| r.correct as u8 as f64).collect();
        if let Ok(pb) = point_biserial(&keep, &correct) {
            let coded: Vec<f64> = keep.iter().map(|&k| k as u8 as f64).collect();
            let r = pearson(&coded, &correct).map_err(|e| e.to_string())?.r;
            ensure((pb.r - r).abs() <= 1e-12, || format!("model {m}: point-biserial {} vs pearson {r}", pb.r))?;
        }
        checked += 1;
    }
    Ok(format!("{checked} random models"))
}

fn eigensolver() -> Check {
    let mut rng = replicate_rng(11, 0);
    let (mut worst_recon, mut worst_trace, mut worst_frac) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let mut a = vec![vec![0.0; 6]; 6];
        for i in 0..6 {
            for j in i..6 {
                let v: f64 = rng.gen_range(-5.0..5.0);
                a[i][j] = v;
                a[j][i] = v;
            }
        }
        let e = symmetric_eigen(&a).map_err(|e| e.to_string())?;
        for i in 0..6 {
            for j in 0..6 {
                let r: f64 = (0..6).map(|k| e.values[k] * e.vectors[k][i] * e.vectors[k][j]).sum();
                worst_recon = worst_recon.max((r - a[i][j]).abs());
            }
        }
        let trace: f64 = (0..6).map(|i| a[i][i]).sum();
        worst_trace = worst_trace.max((e.values.iter().sum::<f64>() - trace).abs());

        let profiles: Vec<ValidityProfile> = (0..12)
            .map(|m| {
                let mut overall = IndexValues::default();
                for i in IndexName::SCALES {
                    *i.slot_mut(&mut overall) = Some(rng.gen_range(0.0..1.0));
                }
                ValidityProfile {
                    model_id: format!("m{m}"),
                    overall,
                    icn: None,
                    phenotypes: Default::default(),
                    per_track: Default::default(),
                    l_retro: None,
                    l_prosp: None,
                    tally: Default::default(),
                }
            })
            .collect();
        let pca = pca_indices(&profiles).map_err(|e| e.to_string())?;
        worst_frac = worst_frac.max((pca.variance_fractions.iter().sum::<f64>() - 1.0).abs());
    }
    ensure(worst_recon < 1e-8, || format!("reconstruction error {worst_recon:e}"))?;
    ensure(worst_trace <= 1e-9, || format!("trace error {worst_trace:e}"))?;
    ensure(worst_frac <= 1e-9, || format!("variance fraction error {worst_frac:e}"))?;
    Ok(format!("max reconstruction {worst_recon:.1e}, trace {worst_trace:.1e}, fractions {worst_frac:.1e}"))
}

fn determinism() -> Check {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let run_all = |execution: Execution| -> Result<Vec<CommandOutput>, String> {
        let syn =
            RunConfig { seed: 21, synthetic_iterations: 200, emit_battery: true, execution, ..RunConfig::default() };
        let synthetic = cmd_synthetic(&syn).map_err(|e| e.to_string())?;
        let battery = dir.path().join(format!("{execution:?}"));
        synthetic.write_to(&battery).map_err(|e| e.to_string())?;
        let cfg = RunConfig {
            data_dir: Some(battery.join("battery")),
            norms_path: Some(battery.join("battery_norms.json")),
            seed: 21,
            bootstrap_iterations: 500,
            execution,
            ..RunConfig::default()
        };
        let screen = cmd_screen(&cfg).map_err(|e| e.to_string())?;
        let psych = cmd_psych(&cfg).map_err(|e| e.to_string())?;
        let sweep = cmd_sweep(&cfg, &Grid::parse("0.93:0.97:0.01").unwrap(), &Grid::parse("0.40:0.60:0.05").unwrap())
            .map_err(|e| e.to_string())?;
        psych.write_to(&battery).map_err(|e| e.to_string())?;
        synthetic.write_to(&battery).map_err(|e| e.to_string())?;
        let mut outs = vec![synthetic, screen, psych, sweep];
        for figure in [Figure::Tiered, Figure::Sensitivity, Figure::Contingency] {
            outs.push(cmd_plot(&battery.join("psych.json"), figure).map_err(|e| e.to_string())?);
        }
        outs.push(cmd_plot(&battery.join("synthetic.json"), Figure::Synthetic).map_err(|e| e.to_string())?);
        Ok(outs)
    };
    let first = run_all(Execution::Parallel)?;
    let second = run_all(Execution::Parallel)?;
    let sequential = run_all(Execution::Sequential)?;
    let mut artifacts = 0;
    for ((a, b), c) in first.iter().zip(&second).zip(&sequential) {
        for ((x, y), z) in a.artifacts.iter().zip(&b.artifacts).zip(&c.artifacts) {
            ensure(x == y, || format!("{} differs between identical runs", x.name))?;
            ensure(x == z, || format!("{} differs between parallel and sequential runs", x.name))?;
            artifacts += 1;
        }
        ensure(a.artifacts.len() == b.artifacts.len() && a.exit_code == b.exit_code, || a.summary.clone())?;
    }
    Ok(format!("{artifacts} artifacts byte-identical across repeats and execution modes"))
}

fn normalise(s: &str) -> String {
    s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase()
}

fn derivation_data() -> Result<Outcome, String> {
    let Some(dir) = std::env::var_os("VALIDITY_DATA_DIR").map(PathBuf::from) else {
        return Ok(Outcome::Skip("set VALIDITY_DATA_DIR to the derivation CSVs".into()));
    };
    let cfg = RunConfig {
        data_dir: Some(dir),
        norms_path: std::env::var_os("VALIDITY_NORMS").map(PathBuf::from),
        bootstrap_iterations: 10_000,
        ..RunConfig::default()
    };
    let out = cmd_psych(&cfg).map_err(|e| e.to_string())?;
    let report: PsychReport = serde_json::from_slice(&out.artifact("psych.json").ok_or("psych.json missing")?.bytes)
        .map_err(|e| e.to_string())?;
    let c = &report.classification;
    let tier1 = c.models_in(Tier::Tier1Invalid);
    let tier2 = c.models_in(Tier::Tier2Elevated).len() + c.models_in(Tier::Tier2Marked).len();
    let valid = c.models_in(Tier::Valid).len();
    ensure(tier1.len() == 4 && tier2 == 2 && valid == 14, || {
        format!("tiers: {} Tier 1 {tier1:?}, {tier2} Tier 2, {valid} valid", tier1.len())
    })?;
    let expected: [&[&str]; 4] =
        [&["deepseek", "r1"], &["gemini", "31", "pro"], &["qwen", "80b", "think"], &["gemma", "1b"]];
    for tokens in expected {
        ensure(tier1.iter().any(|m| tokens.iter().all(|t| normalise(m).contains(t))), || {
            format!("no Tier 1 model matches {tokens:?} in {tier1:?}")
        })?;
    }

    let ps = &report.psychometrics;
    let alpha_l = ps.reliability.alpha(IndexName::L).ok_or("α(L) undefined")?;
    within(alpha_l, 0.921, 0.005, "α(L)")?;
    let r_f_fp = ps.scale_correlations.get(IndexName::F, IndexName::Fp).map(|c| c.r).ok_or("r(F, Fp) undefined")?;
    within(r_f_fp, 0.987, 0.005, "r(F, Fp)")?;
    let pca = ps.pca.as_ref().ok_or("PCA skipped")?;
    let two = 100.0 * (pca.variance_fractions[0] + pca.variance_fractions[1]);
    within(two, 94.6, 0.5, "two-component variance %")?;
    let g = ps.group_comparison.as_ref().ok_or("group comparison missing")?;
    within(g.d, 2.17, 0.05, "d")?;
    ensure(g.leave_one_out.len() == 20, || format!("{} leave-one-out entries", g.leave_one_out.len()))?;
    for (m, loo) in &g.leave_one_out {
        ensure(loo.p.is_some_and(|p| p < 0.05), || format!("dropping {m} gives p = {:?}", loo.p))?;
    }

    let sweep = cmd_sweep(&cfg, &Grid::parse("0.93:0.97:0.01").unwrap(), &Grid::parse("0.40:0.60:0.05").unwrap())
        .map_err(|e| e.to_string())?;
    let sweep: SweepReport = serde_json::from_slice(&sweep.artifact("sweep.json").ok_or("sweep.json missing")?.bytes)
        .map_err(|e| e.to_string())?;
    ensure(sweep.sweep.stable, || "Tier 1 set changes across the grid".into())?;
    let always: BTreeSet<String> = sweep.sweep.always_flagged.iter().cloned().collect();
    let tier1: BTreeSet<String> = tier1.into_iter().collect();
    ensure(always == tier1, || format!("sweep set {always:?} differs from screen set {tier1:?}"))?;
    Ok(Outcome::Pass(format!("α(L) {alpha_l:.3}, r(F,Fp) {r_f_fp:.3}, PC1+PC2 {two:.1}%, d {:.2}", g.d)))
}

fn run(check: impl FnOnce() -> Result<Outcome, String>) -> Outcome {
    match catch_unwind(AssertUnwindSafe(check)) {
        Ok(Ok(outcome)) => outcome,
        Ok(Err(msg)) => Outcome::Fail(msg),
        Err(panic) => Outcome::Fail(
            panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()),
        ),
    }
}

fn main() -> ExitCode {
    let pass = |f: fn() -> Check| move || f().map(Outcome::Pass);
    let criteria: Vec<(&str, Criterion)> = vec![
        ("synthetic policy matrix", Box::new(pass(synthetic_matrix))),
        ("bootstrap distributions", Box::new(pass(bootstrap_distributions))),
        ("statistical fixtures from summary moments", Box::new(pass(statistical_fixtures))),
        ("exact policy identities", Box::new(pass(policy_identities))),
        ("index algebra on 1,000 random models", Box::new(pass(index_algebra))),
        ("eigensolver and PCA", Box::new(pass(eigensolver))),
        ("determinism", Box::new(pass(determinism))),
        ("derivation data reproduction", Box::new(derivation_data)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run(check);
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("{tag} [{}] {name}: {detail} ({secs:.1} s)", i + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
