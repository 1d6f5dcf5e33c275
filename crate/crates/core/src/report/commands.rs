use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::markdown;
use super::svg::{render_figure, Figure};
use super::{
    read, to_json, Artifact, CommandOutput, Envelope, InputDigest, ReportError, Result, RunConfig, EXIT_CLEAN,
    EXIT_FAILURE, EXIT_TIER1,
};
use crate::classify::{classify_or_tier1, threshold_sweep, Classification, Grid, SweepResult, Tier};
use crate::data::{consensus_items, load_dir, probe_csv_files, write_probe_csv, Dataset, ItemNorms};
use crate::indices::{compute_profiles, IndexName, ProfileConfig, ValidityProfile};
use crate::psychometrics::{psychometric_report, PsychConfig, PsychometricReport};
use crate::statkit::BootstrapConfig;
use crate::synthetic::{
    generate_policy_dataset, run_policy_validation, sample_item_accuracies, ItemPool, Policy, ValidationConfig,
    ValidationMatrix,
};

/// A loaded probe directory with its norms.
pub struct Inputs {
    pub dataset: Dataset,
    pub norms: ItemNorms,
    /// `file` when read from `norms_path`, else `computed`.
    pub norms_source: String,
    pub digest: String,
    pub warnings: Vec<String>,
}

pub fn load_inputs(config: &RunConfig) -> Result<Inputs> {
    let dir = config.data_dir.as_deref().ok_or_else(|| ReportError::Config("no data directory given".into()))?;
    let mut digest = InputDigest::default();
    for path in probe_csv_files(dir)? {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        digest.add(&name, &read(&path)?);
    }
    let dataset = Dataset::build(load_dir(dir, config.execution)?)?;
    let (norms, norms_source) = match &config.norms_path {
        Some(path) => {
            let bytes = read(path)?;
            digest.add("norms", &bytes);
            (ItemNorms::read_json(bytes.as_slice())?, "file".to_string())
        }
        None => (ItemNorms::compute(&dataset), "computed".to_string()),
    };
    let warnings = dataset.battery_warnings();
    Ok(Inputs { dataset, norms, norms_source, digest: digest.finish(), warnings })
}

fn profile_config(config: &RunConfig) -> ProfileConfig {
    ProfileConfig {
        consensus_threshold: config.consensus_threshold,
        norms_mode: config.norms_mode,
        ..Default::default()
    }
}

fn exit_for(classification: &Classification) -> i32 {
    if classification.has_tier1() {
        EXIT_TIER1
    } else {
        EXIT_CLEAN
    }
}

fn tier_summary(c: &Classification) -> String {
    let tier1: Vec<String> = c.models_in(Tier::Tier1Invalid).into_iter().collect();
    let count = |t: Tier| c.models_in(t).len();
    format!(
        "{} models: {} Tier 1 invalid{}, {} Tier 2 marked, {} Tier 2 elevated, {} valid",
        c.assignments.len(),
        tier1.len(),
        if tier1.is_empty() { String::new() } else { format!(" ({})", tier1.join(", ")) },
        count(Tier::Tier2Marked),
        count(Tier::Tier2Elevated),
        count(Tier::Valid),
    )
}

/// One row per model: tier, indices, and the rules that fired.
pub(crate) fn profiles_csv(envelope: &Envelope, profiles: &[ValidityProfile], c: &Classification) -> Vec<u8> {
    let mut out = String::new();
    for (k, v) in envelope.meta() {
        out.push_str(&format!("# {k}={v}\n"));
    }
    let mut header = vec!["model_id".to_string(), "tier".to_string()];
    header.extend(IndexName::ALL.iter().map(|i| i.as_str().to_string()));
    header.extend(["ICN", "L_retro", "L_prosp", "n", "triggered_rules"].map(String::from));
    out.push_str(&header.join(","));
    out.push('\n');
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for p in profiles {
        let a = c.assignments.iter().find(|a| a.model_id == p.model_id);
        let mut row = vec![p.model_id.clone(), a.map(|a| a.tier.to_string()).unwrap_or_default()];
        row.extend(IndexName::ALL.iter().map(|i| opt(p.get(*i))));
        row.push(p.icn.map(|c| c.to_string()).unwrap_or_default());
        row.push(opt(p.l_retro));
        row.push(opt(p.l_prosp));
        row.push(p.overall.n.to_string());
        let rules: Vec<String> = a
            .map(|a| a.triggered_rules.iter().map(|r| format!("{}{}{}", r.index, r.comparison, r.threshold)).collect())
            .unwrap_or_default();
        row.push(rules.join(";"));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenReport {
    pub kind: String,
    pub envelope: Envelope,
    pub norms_source: String,
    pub n_models: usize,
    pub profiles: Vec<ValidityProfile>,
    pub classification: Classification,
    /// Undefined indices per model, with the reason.
    pub undefined: BTreeMap<String, Vec<String>>,
    pub warnings: Vec<String>,
}

fn screen_report(config: &RunConfig, command: &str) -> Result<(Inputs, ScreenReport)> {
    config.validate()?;
    let inputs = load_inputs(config)?;
    let profiles = compute_profiles(&inputs.dataset, &inputs.norms, &profile_config(config), config.execution);
    let classification = classify_or_tier1(&profiles, &config.thresholds)?;
    let undefined = profiles
        .iter()
        .map(|p| (p.model_id.clone(), p.undefined_notes()))
        .filter(|(_, notes)| !notes.is_empty())
        .collect();
    let mut warnings = inputs.warnings.clone();
    warnings.extend(classification.warnings.iter().cloned());
    let report = ScreenReport {
        kind: command.to_string(),
        envelope: Envelope::new(command, config, inputs.digest.clone()),
        norms_source: inputs.norms_source.clone(),
        n_models: profiles.len(),
        profiles,
        classification,
        undefined,
        warnings,
    };
    Ok((inputs, report))
}

/// Profiles, tiers and triggered rules. Exit 2 when any model is Tier 1.
pub fn cmd_screen(config: &RunConfig) -> Result<CommandOutput> {
    let (_, report) = screen_report(config, "screen")?;
    let mut artifacts = Vec::new();
    if config.wants(super::Format::Json) {
        artifacts.push(Artifact::new("screen.json", to_json(&report)));
    }
    if config.wants(super::Format::Markdown) {
        artifacts.push(Artifact::new("screen.md", markdown::screen(&report).into_bytes()));
    }
    if config.wants(super::Format::Csv) {
        artifacts.push(Artifact::new(
            "screen.csv",
            profiles_csv(&report.envelope, &report.profiles, &report.classification),
        ));
    }
    Ok(CommandOutput {
        exit_code: exit_for(&report.classification),
        summary: tier_summary(&report.classification),
        artifacts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticReport {
    pub kind: String,
    pub envelope: Envelope,
    /// Where item accuracies came from.
    pub accuracy_source: String,
    pub matrix: ValidationMatrix,
    pub all_pass: bool,
    pub failures: Vec<Policy>,
}

fn synthetic_pool(config: &RunConfig, digest: &mut InputDigest) -> Result<(ItemPool, String)> {
    match &config.norms_path {
        Some(path) => {
            let bytes = read(path)?;
            digest.add("norms", &bytes);
            let norms = ItemNorms::read_json(bytes.as_slice())?;
            let pool = ItemPool::from_norms(&norms, config.consensus_threshold, &BTreeMap::new())?;
            Ok((pool, format!("norms file {}", path.display())))
        }
        None => {
            let spec = serde_json::to_vec(&(&config.accuracy_model, config.n_items)).expect("serializable");
            digest.add("accuracy_model", &spec);
            let acc = sample_item_accuracies(&config.accuracy_model, config.n_items, config.seed, None)?;
            let pool = ItemPool::from_accuracies(&acc, config.consensus_threshold)?;
            let source = serde_json::to_string(&config.accuracy_model).expect("serializable");
            Ok((pool, format!("{source}, {} items", config.n_items)))
        }
    }
}

/// Validation matrix for the configured policies. Exit 1 when any policy
/// receives the wrong verdict.
pub fn cmd_synthetic(config: &RunConfig) -> Result<CommandOutput> {
    config.validate()?;
    let mut digest = InputDigest::default();
    let (pool, accuracy_source) = synthetic_pool(config, &mut digest)?;
    let validation = ValidationConfig {
        iterations: config.synthetic_iterations,
        seed: config.seed,
        thresholds: config.thresholds,
        mc_z: config.mc_z,
        execution: config.execution,
    };
    let matrix = run_policy_validation(&config.policies, &pool, &validation)?;
    let report = SyntheticReport {
        kind: "synthetic".into(),
        envelope: Envelope::new("synthetic", config, digest.finish()),
        accuracy_source,
        all_pass: matrix.all_pass(),
        failures: matrix.failures(),
        matrix,
    };

    let mut artifacts = Vec::new();
    if config.wants(super::Format::Csv) {
        let mut csv = Vec::new();
        report.matrix.write_csv(&mut csv, &report.envelope.meta()).expect("in-memory write");
        artifacts.push(Artifact::new("synthetic_matrix.csv", csv));
    }
    if config.wants(super::Format::Json) {
        artifacts.push(Artifact::new("synthetic.json", to_json(&report)));
    }
    if config.wants(super::Format::Markdown) {
        artifacts.push(Artifact::new("synthetic.md", markdown::synthetic(&report).into_bytes()));
    }
    if config.emit_battery {
        for spec in &config.policies {
            let records = generate_policy_dataset(spec, &pool, config.seed);
            let mut csv = Vec::new();
            write_probe_csv(&records, &mut csv)?;
            artifacts.push(Artifact::new(format!("battery/{}.csv", spec.policy), csv));
        }
        artifacts.push(Artifact::new("battery_norms.json", to_json(&pool.to_norms())));
    }

    let n = report.matrix.policies.len();
    let passed = report.matrix.policies.iter().filter(|p| p.pass).count();
    let summary = if report.all_pass {
        format!("{passed}/{n} policies received their expected verdict")
    } else {
        let failed: Vec<String> = report.failures.iter().map(|p| p.to_string()).collect();
        format!("{passed}/{n} policies received their expected verdict; misclassified: {}", failed.join(", "))
    };
    Ok(CommandOutput { exit_code: if report.all_pass { EXIT_CLEAN } else { EXIT_FAILURE }, summary, artifacts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsychReport {
    pub kind: String,
    pub envelope: Envelope,
    pub profiles: Vec<ValidityProfile>,
    pub classification: Classification,
    pub psychometrics: PsychometricReport,
    pub warnings: Vec<String>,
}

/// The full psychometric battery. Classifies too, so exits 2 when any
/// model is Tier 1.
pub fn cmd_psych(config: &RunConfig) -> Result<CommandOutput> {
    let (inputs, screen) = screen_report(config, "psych")?;
    let consensus = consensus_items(&inputs.norms, config.consensus_threshold);
    let psych_config = PsychConfig {
        bootstrap: BootstrapConfig {
            iterations: config.bootstrap_iterations,
            seed: config.seed,
            ci_level: 0.95,
            execution: config.execution,
        },
        resampling: config.resampling,
        discriminator_outcome: config.discriminator_outcome,
        family_map: config.family_map.clone(),
        pairs: config.pairs.clone(),
        execution: config.execution,
    };
    let psychometrics =
        psychometric_report(&inputs.dataset, &screen.profiles, &consensus, &screen.classification, &psych_config)?;
    let report = PsychReport {
        kind: "psych".into(),
        envelope: screen.envelope,
        profiles: screen.profiles,
        classification: screen.classification,
        psychometrics,
        warnings: screen.warnings,
    };
    let mut artifacts = Vec::new();
    if config.wants(super::Format::Json) {
        artifacts.push(Artifact::new("psych.json", to_json(&report)));
    }
    if config.wants(super::Format::Markdown) {
        artifacts.push(Artifact::new("psych.md", markdown::psych(&report).into_bytes()));
    }
    if config.wants(super::Format::Csv) {
        artifacts
            .push(Artifact::new("psych.csv", profiles_csv(&report.envelope, &report.profiles, &report.classification)));
    }
    let pca = match &report.psychometrics.pca {
        Some(p) => format!("PCA on {} models", p.n_models),
        None => "PCA skipped".into(),
    };
    Ok(CommandOutput {
        exit_code: exit_for(&report.classification),
        summary: format!(
            "{}; {pca}; {} warnings",
            tier_summary(&report.classification),
            report.psychometrics.warnings.len()
        ),
        artifacts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: String,
    pub envelope: Envelope,
    pub l_grid: Vec<f64>,
    pub f_grid: Vec<f64>,
    pub sweep: SweepResult,
}

/// Tier 1 membership over a grid of L and F/Fp cut-offs. Exit 2 when any
/// grid point flags a model.
pub fn cmd_sweep(config: &RunConfig, l_grid: &Grid, f_grid: &Grid) -> Result<CommandOutput> {
    config.validate()?;
    let inputs = load_inputs(config)?;
    let profiles = compute_profiles(&inputs.dataset, &inputs.norms, &profile_config(config), config.execution);
    let sweep = threshold_sweep(&profiles, l_grid, f_grid, &config.thresholds, config.execution)?;
    let report = SweepReport {
        kind: "sweep".into(),
        envelope: Envelope::new("sweep", config, inputs.digest),
        l_grid: l_grid.0.clone(),
        f_grid: f_grid.0.clone(),
        sweep,
    };
    let mut artifacts = Vec::new();
    if config.wants(super::Format::Json) {
        artifacts.push(Artifact::new("sweep.json", to_json(&report)));
    }
    if config.wants(super::Format::Csv) {
        let mut out = String::new();
        for (k, v) in report.envelope.meta() {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str("l_min,f_min,n_tier1,tier1_models\n");
        for p in &report.sweep.points {
            let models: Vec<&str> = p.tier1.iter().map(String::as_str).collect();
            out.push_str(&format!("{},{},{},{}\n", p.l_min, p.f_min, p.tier1.len(), models.join(";")));
        }
        artifacts.push(Artifact::new("sweep.csv", out.into_bytes()));
    }
    if config.wants(super::Format::Markdown) {
        artifacts.push(Artifact::new("sweep.md", markdown::sweep(&report).into_bytes()));
    }
    let s = &report.sweep;
    let summary = format!(
        "{} grid points; Tier 1 set {} ({} always flagged, {} ever flagged)",
        s.points.len(),
        if s.stable { "stable" } else { "varies" },
        s.always_flagged.len(),
        s.ever_flagged.len()
    );
    Ok(CommandOutput { exit_code: if s.ever_flagged.is_empty() { EXIT_CLEAN } else { EXIT_TIER1 }, summary, artifacts })
}

/// Render one figure from a JSON report written by another command.
pub fn cmd_plot(report_path: &Path, figure: Figure) -> Result<CommandOutput> {
    let bytes = read(report_path)?;
    let value: serde_json::Value = serde_json::from_slice(&bytes)
        .map_err(|source| ReportError::Json { path: report_path.display().to_string(), source })?;
    let svg = render_figure(&value, figure)?;
    Ok(CommandOutput {
        artifacts: vec![Artifact::new(format!("{}.svg", figure.as_str()), svg.into_bytes())],
        exit_code: EXIT_CLEAN,
        summary: format!("{} figure from {}", figure.as_str(), report_path.display()),
    })
}
