use std::fmt::Write;

use super::commands::{PsychReport, ScreenReport, SweepReport, SyntheticReport};
use super::{fmt3, Envelope};
use crate::classify::Classification;
use crate::data::Track;
use crate::indices::{IndexName, ValidityProfile};

fn p_value(p: f64) -> String {
    if p < 0.001 {
        "<.001".into()
    } else {
        format!("{p:.3}")
    }
}

fn table(out: &mut String, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for row in rows {
        let _ = writeln!(out, "| {} |", row.join(" | "));
    }
    out.push('\n');
}

fn envelope(out: &mut String, title: &str, e: &Envelope) {
    let _ = writeln!(out, "# {title}\n");
    for (k, v) in e.meta() {
        let _ = writeln!(out, "- {k}: `{v}`");
    }
    out.push('\n');
}

fn warnings(out: &mut String, list: &[String]) {
    if list.is_empty() {
        return;
    }
    out.push_str("## Warnings\n\n");
    for w in list {
        let _ = writeln!(out, "- {w}");
    }
    out.push('\n');
}

fn classification_section(out: &mut String, profiles: &[ValidityProfile], c: &Classification) {
    out.push_str("## Tiered classification\n\n");
    let mut header = vec!["model", "tier"];
    header.extend(IndexName::SCALES.iter().map(|i| i.as_str()));
    header.extend(["Δw", "triggered rules"]);
    let rows = c.assignments.iter().map(|a| {
        let p = profiles.iter().find(|p| p.model_id == a.model_id);
        let mut row = vec![a.model_id.clone(), a.tier.to_string()];
        row.extend(IndexName::SCALES.iter().map(|i| fmt3(p.and_then(|p| p.get(*i)))));
        row.push(fmt3(p.and_then(|p| p.get(IndexName::WithdrawDelta))));
        let rules: Vec<String> = a
            .triggered_rules
            .iter()
            .map(|r| format!("{} = {:.3} {} {:.3}", r.index, r.value, r.comparison, r.threshold))
            .collect();
        row.push(if rules.is_empty() { "—".into() } else { rules.join("; ") });
        row
    });
    table(out, &header, rows);
    if !c.reference_stats.is_empty() {
        out.push_str("Tier 2 reference distribution (non-Tier-1 models):\n\n");
        let rows =
            c.reference_stats.iter().map(|(i, s)| vec![i.to_string(), s.n.to_string(), fmt3(Some(s.mean)), fmt3(s.sd)]);
        table(out, &["index", "n", "M", "SD"], rows);
    }
}

pub fn screen(r: &ScreenReport) -> String {
    let mut out = String::new();
    envelope(&mut out, "Validity screen", &r.envelope);
    let _ = writeln!(out, "{} models; norms {}.\n", r.n_models, r.norms_source);
    classification_section(&mut out, &r.profiles, &r.classification);
    if !r.undefined.is_empty() {
        out.push_str("## Undefined indices\n\n");
        for (m, notes) in &r.undefined {
            let _ = writeln!(out, "- {m}: {}", notes.join("; "));
        }
        out.push('\n');
    }
    warnings(&mut out, &r.warnings);
    out
}

pub fn synthetic(r: &SyntheticReport) -> String {
    let mut out = String::new();
    envelope(&mut out, "Synthetic policy validation", &r.envelope);
    let m = &r.matrix;
    let _ = writeln!(
        out,
        "{} iterations per policy; {} items (mean accuracy {:.3}, {} consensus); accuracies from {}; tie band z = {}.\n",
        m.iterations, m.n_items, m.mean_item_accuracy, m.n_consensus, r.accuracy_source, m.mc_z
    );
    let shown = [
        IndexName::L,
        IndexName::K,
        IndexName::F,
        IndexName::Fp,
        IndexName::Rbs,
        IndexName::Trin,
        IndexName::WithdrawDelta,
    ];
    let mut header = vec!["policy"];
    header.extend(shown.iter().map(|i| i.as_str()));
    header.extend(["SD(Δw)", "Tier 1 rate", "verdict", "expected", "pass"]);
    let rows = m.policies.iter().map(|p| {
        let mut row = vec![p.policy.to_string()];
        row.extend(shown.iter().map(|i| fmt3(p.summary(i.as_str()).and_then(|s| s.mean))));
        row.push(fmt3(p.summary("withdraw_delta").and_then(|s| s.sd)));
        row.push(format!("{:.3}", p.tier1_rate));
        row.push(p.verdict.to_string());
        row.push(p.expected.to_string());
        row.push(if p.pass { "yes".into() } else { "NO".into() });
        row
    });
    table(&mut out, &header, rows);
    let passed = m.policies.iter().filter(|p| p.pass).count();
    let _ = writeln!(out, "**{passed}/{} policies correctly classified.**", m.policies.len());
    out
}

pub fn sweep(r: &SweepReport) -> String {
    let mut out = String::new();
    envelope(&mut out, "Threshold sweep", &r.envelope);
    let s = &r.sweep;
    let _ = writeln!(
        out,
        "{} grid points; Tier 1 set is {}.\n",
        s.points.len(),
        if s.stable { "identical at every point" } else { "not constant" }
    );
    let rows = s.points.iter().map(|p| {
        let models: Vec<&str> = p.tier1.iter().map(String::as_str).collect();
        vec![format!("{:.3}", p.l_min), format!("{:.3}", p.f_min), p.tier1.len().to_string(), models.join(", ")]
    });
    table(&mut out, &["L min", "F/Fp min", "n Tier 1", "models"], rows);
    out
}

pub fn psych(r: &PsychReport) -> String {
    let mut out = String::new();
    let ps = &r.psychometrics;
    envelope(&mut out, "Psychometric report", &r.envelope);
    let _ = writeln!(out, "{} models.\n", ps.n_models);

    out.push_str("## Reliability and inter-scale correlations\n\n");
    let rows = ps
        .reliability
        .alphas
        .iter()
        .map(|a| vec![a.index.to_string(), fmt3(a.alpha), a.n_models.to_string(), a.n_dropped.to_string()]);
    table(&mut out, &["index", "α", "models", "dropped"], rows);
    let tracks: Vec<Track> = {
        let mut t: Vec<Track> = ps.reliability.split_half.iter().map(|s| s.track).collect();
        t.sort();
        t.dedup();
        t
    };
    let mut header = vec!["split-half r_sb".to_string()];
    header.extend(tracks.iter().map(|t| t.to_string()));
    let rows = IndexName::SCALES.iter().map(|i| {
        let mut row = vec![i.to_string()];
        row.extend(tracks.iter().map(|t| fmt3(ps.reliability.split(*i, *t).and_then(|s| s.r_sb))));
        row
    });
    table(&mut out, &header.iter().map(String::as_str).collect::<Vec<_>>(), rows);
    let sc = &ps.scale_correlations;
    let mut header = vec![""];
    header.extend(sc.indices.iter().map(|i| i.as_str()));
    let rows = sc.indices.iter().enumerate().map(|(i, a)| {
        let mut row = vec![a.to_string()];
        row.extend(sc.cells[i].iter().map(|c| fmt3(c.map(|c| c.r))));
        row
    });
    table(&mut out, &header, rows);
    let rows = sc.named_pairs.iter().map(|p| {
        vec![
            format!("{}–{}", p.a, p.b),
            format!("{:?}", p.kind).to_lowercase(),
            fmt3(p.result.map(|c| c.r)),
            p.result.map(|c| p_value(c.p)).unwrap_or_else(|| "—".into()),
            p.result.map(|c| c.n.to_string()).unwrap_or_else(|| "—".into()),
        ]
    });
    table(&mut out, &["pair", "kind", "r", "p", "n"], rows);

    out.push_str("## Factor structure\n\n");
    match &ps.pca {
        Some(pca) => {
            let mut header = vec!["component".to_string(), "eigenvalue".to_string(), "variance".to_string()];
            header.extend(pca.indices.iter().map(|i| i.to_string()));
            let rows = pca.eigenvalues.iter().enumerate().map(|(c, ev)| {
                let mut row = vec![
                    format!("PC{}", c + 1),
                    format!("{ev:.3}"),
                    format!("{:.1}%", 100.0 * pca.variance_fractions[c]),
                ];
                row.extend(pca.loadings[c].iter().map(|l| format!("{l:+.3}")));
                row
            });
            table(&mut out, &header.iter().map(String::as_str).collect::<Vec<_>>(), rows);
        }
        None => out.push_str("PCA not run.\n\n"),
    }

    classification_section(&mut out, &r.profiles, &r.classification);

    out.push_str("## Item sensitivity and group comparison\n\n");
    let rows = ps.item_sensitivity.per_model.iter().map(|(m, c)| {
        let tier = r.classification.tier_of(m).map(|t| t.to_string()).unwrap_or_default();
        vec![m.clone(), tier, format!("{:.3}", c.r), p_value(c.p_two_tailed)]
    });
    table(&mut out, &["model", "tier", "r(KEEP, correct)", "p"], rows);
    if let Some(g) = &ps.group_comparison {
        let _ = writeln!(
            out,
            "Valid-side (n = {}, M = {:.3}) vs Tier 1 (n = {}, M = {:.3}): d = {:.2}, t({}) = {:.2}, p = {}; {:.0}% bootstrap CI on d [{}, {}] ({} iterations, {:?} resampling).\n",
            g.valid.len(),
            g.mean_valid,
            g.invalid.len(),
            g.mean_invalid,
            g.d,
            g.df,
            g.t,
            p_value(g.p),
            100.0 * g.ci_level,
            fmt3(g.ci_low),
            fmt3(g.ci_high),
            g.bootstrap_iterations,
            g.resampling,
        );
        let rows = g
            .leave_one_out
            .iter()
            .map(|(m, l)| vec![m.clone(), fmt3(l.d), l.p.map(p_value).unwrap_or_else(|| "—".into())]);
        table(&mut out, &["left out", "d", "p"], rows);
    }

    out.push_str("## Incremental validity of L over accuracy\n\n");
    let rows = ps.incremental.iter().map(|b| {
        vec![
            b.dv.clone(),
            b.n.to_string(),
            format!("{:.3}", b.r2_reduced),
            format!("{:.3}", b.r2_full),
            format!("{:.3}", b.delta_r2),
            b.f_test.map(|f| format!("F({}, {}) = {:.2}", f.df1, f.df2, f.f)).unwrap_or_else(|| "—".into()),
            b.f_test.map(|f| p_value(f.p)).unwrap_or_else(|| "—".into()),
        ]
    });
    table(&mut out, &["DV", "n", "R² accuracy", "R² + L", "ΔR²", "F", "p"], rows);

    out.push_str("## KEEP × BET contingency\n\n");
    let rows = ps.contingency.iter().map(|(m, c)| {
        let a = &c.all;
        vec![
            m.clone(),
            a.keep_bet.to_string(),
            a.keep_no_bet.to_string(),
            a.withdraw_bet.to_string(),
            a.withdraw_no_bet.to_string(),
            fmt3(c.retrospective.contradiction_rate()),
        ]
    });
    table(
        &mut out,
        &["model", "KEEP+BET", "KEEP+NO BET", "WITHDRAW+BET", "WITHDRAW+NO BET", "contradiction (T1–T5)"],
        rows,
    );

    if !ps.paired_deltas.is_empty() {
        out.push_str("## Paired-model deltas\n\n");
        let mut header = vec!["pair"];
        header.extend(IndexName::SCALES.iter().map(|i| i.as_str()));
        header.push("Δw");
        let rows = ps.paired_deltas.iter().map(|d| {
            let mut row = vec![format!("{} → {}", d.model_a, d.model_b)];
            row.extend(
                IndexName::SCALES.iter().chain([&IndexName::WithdrawDelta]).map(|i| fmt3(d.deltas.get(i).copied())),
            );
            row
        });
        table(&mut out, &header, rows);
    }

    out.push_str("## Retrospective vs prospective L\n\n");
    let rows = ps.retro_prospective.iter().map(|(m, rp)| vec![m.clone(), fmt3(rp.l_retro), fmt3(rp.l_prosp)]);
    table(&mut out, &["model", "L_retro", "L_prosp"], rows);

    if !ps.families.is_empty() {
        out.push_str("## Family summaries\n\n");
        let rows = ps.families.iter().flat_map(|f| {
            IndexName::SCALES.iter().filter_map(move |i| {
                let s = f.indices.get(i)?;
                Some(vec![
                    f.family.clone(),
                    i.to_string(),
                    s.n.to_string(),
                    format!("{:.3}", s.mean),
                    fmt3(s.sd),
                    format!("[{:.3}, {:.3}]", s.min, s.max),
                ])
            })
        });
        table(&mut out, &["family", "index", "n", "M", "SD", "range"], rows);
    }

    out.push_str("## Item discriminators\n\n");
    let d = &ps.discriminators;
    let _ = writeln!(
        out,
        "{} of {} tested items discriminate valid-side from Tier 1 models at p < .05 (uncorrected, {:?} indicator); {} single-class, {} with too few models.\n",
        d.n_significant, d.n_tested, d.outcome, d.n_undefined, d.n_insufficient
    );
    let rows = d.by_track.iter().map(|(t, c)| vec![t.to_string(), c.significant.to_string(), c.tested.to_string()]);
    table(&mut out, &["track", "significant", "tested"], rows);

    let mut all = r.warnings.clone();
    all.extend(ps.warnings.iter().cloned());
    warnings(&mut out, &all);
    out
}
