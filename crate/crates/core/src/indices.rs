//! Validity indices for one model.
//!
//! Every index is a ratio of counts, so one pass over the records fills a
//! [`Tally`] and all indices are read off it. An index whose conditioning
//! set is empty is [`Undefined`], never zero.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{consensus_items, Dataset, ItemNorms, ProbeRecord, ProspectiveChoice, Track};
use crate::par::{map_slice, Execution};

/// Why an index has no value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Undefined {
    NoRecords,
    NoCorrect,
    NoIncorrect,
    NoConsensusItems,
    NoVariance,
    TooFewTracks,
}

impl fmt::Display for Undefined {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Undefined::NoRecords => "no records",
            Undefined::NoCorrect => "no correct items (empty denominator)",
            Undefined::NoIncorrect => "no incorrect items (empty denominator)",
            Undefined::NoConsensusItems => "no consensus items administered",
            Undefined::NoVariance => "no variance in one of the probes",
            Undefined::TooFewTracks => "fewer than two labelable tracks",
        };
        f.write_str(s)
    }
}

pub type IndexResult<T = f64> = Result<T, Undefined>;

fn ratio(num: usize, den: usize, empty: Undefined) -> IndexResult {
    if den == 0 {
        Err(empty)
    } else {
        Ok(num as f64 / den as f64)
    }
}

/// Joint counts over a record set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub n: usize,
    pub n_correct: usize,
    pub keep_correct: usize,
    pub keep_incorrect: usize,
    pub bet_correct: usize,
    pub bet_incorrect: usize,
    pub keep_bet: usize,
    pub keep_no_bet: usize,
    pub withdraw_bet: usize,
    pub withdraw_no_bet: usize,
    pub withdraw_bet_correct: usize,
    pub consensus_n: usize,
    pub consensus_withdraw: usize,
}

impl Tally {
    pub fn from_records<'a, I>(records: I, consensus: &BTreeSet<String>) -> Tally
    where
        I: IntoIterator<Item = &'a ProbeRecord>,
    {
        let mut t = Tally::default();
        for r in records {
            t.push(r, consensus.contains(&r.item_id));
        }
        t
    }

    pub fn push(&mut self, r: &ProbeRecord, in_consensus: bool) {
        let (keep, bet) = (r.kept(), r.bet());
        self.n += 1;
        if r.correct {
            self.n_correct += 1;
            self.keep_correct += keep as usize;
            self.bet_correct += bet as usize;
            self.withdraw_bet_correct += (!keep && bet) as usize;
        } else {
            self.keep_incorrect += keep as usize;
            self.bet_incorrect += bet as usize;
        }
        match (keep, bet) {
            (true, true) => self.keep_bet += 1,
            (true, false) => self.keep_no_bet += 1,
            (false, true) => self.withdraw_bet += 1,
            (false, false) => self.withdraw_no_bet += 1,
        }
        if in_consensus {
            self.consensus_n += 1;
            self.consensus_withdraw += !keep as usize;
        }
    }

    pub fn n_incorrect(&self) -> usize {
        self.n - self.n_correct
    }

    pub fn n_keep(&self) -> usize {
        self.keep_bet + self.keep_no_bet
    }

    pub fn n_withdraw(&self) -> usize {
        self.n - self.n_keep()
    }

    pub fn n_bet(&self) -> usize {
        self.keep_bet + self.withdraw_bet
    }

    /// P(WITHDRAW | incorrect).
    pub fn withdraw_given_incorrect(&self) -> IndexResult {
        ratio(self.n_incorrect() - self.keep_incorrect, self.n_incorrect(), Undefined::NoIncorrect)
    }

    /// P(KEEP | incorrect).
    pub fn l(&self) -> IndexResult {
        ratio(self.keep_incorrect, self.n_incorrect(), Undefined::NoIncorrect)
    }

    /// P(BET | incorrect).
    pub fn k(&self) -> IndexResult {
        ratio(self.bet_incorrect, self.n_incorrect(), Undefined::NoIncorrect)
    }

    /// P(WITHDRAW | consensus item).
    pub fn f(&self) -> IndexResult {
        ratio(self.consensus_withdraw, self.consensus_n, Undefined::NoConsensusItems)
    }

    /// P(WITHDRAW | correct).
    pub fn fp(&self) -> IndexResult {
        ratio(self.n_correct - self.keep_correct, self.n_correct, Undefined::NoCorrect)
    }

    /// P(WD | correct) − P(WD | incorrect); positive means inverted monitoring.
    pub fn rbs(&self) -> IndexResult {
        Ok(self.fp()? - self.withdraw_given_incorrect()?)
    }

    /// Share of the dominant KEEP/WITHDRAW response.
    pub fn trin(&self) -> IndexResult {
        ratio(self.n_keep().max(self.n_withdraw()), self.n, Undefined::NoRecords)
    }

    /// P(WD | incorrect) − P(WD | correct).
    pub fn withdraw_delta(&self) -> IndexResult {
        Ok(self.withdraw_given_incorrect()? - self.fp()?)
    }

    /// P(BET | correct) − P(BET | incorrect).
    pub fn bet_delta(&self) -> IndexResult {
        let correct = ratio(self.bet_correct, self.n_correct, Undefined::NoCorrect)?;
        Ok(correct - self.k()?)
    }

    /// Phi coefficient between the KEEP and BET indicators.
    pub fn concordance(&self) -> IndexResult {
        if self.n == 0 {
            return Err(Undefined::NoRecords);
        }
        let (keep, wd) = (self.n_keep() as f64, self.n_withdraw() as f64);
        let (bet, no_bet) = (self.n_bet() as f64, (self.n - self.n_bet()) as f64);
        let den = keep * wd * bet * no_bet;
        if den == 0.0 {
            return Err(Undefined::NoVariance);
        }
        let num =
            self.keep_bet as f64 * self.withdraw_no_bet as f64 - self.keep_no_bet as f64 * self.withdraw_bet as f64;
        Ok((num / den.sqrt()).clamp(-1.0, 1.0))
    }

    /// P(WITHDRAW ∧ BET) over all records.
    pub fn contradiction_rate(&self) -> IndexResult {
        ratio(self.withdraw_bet, self.n, Undefined::NoRecords)
    }

    /// P(WITHDRAW ∧ BET | correct).
    pub fn contradiction_rate_correct(&self) -> IndexResult {
        ratio(self.withdraw_bet_correct, self.n_correct, Undefined::NoCorrect)
    }

    pub fn accuracy(&self) -> IndexResult {
        ratio(self.n_correct, self.n, Undefined::NoRecords)
    }

    pub fn values(&self) -> IndexValues {
        IndexValues {
            l: self.l().ok(),
            k: self.k().ok(),
            f: self.f().ok(),
            fp: self.fp().ok(),
            rbs: self.rbs().ok(),
            trin: self.trin().ok(),
            withdraw_delta: self.withdraw_delta().ok(),
            bet_delta: self.bet_delta().ok(),
            concordance: self.concordance().ok(),
            contradiction_rate: self.contradiction_rate().ok(),
            contradiction_rate_correct: self.contradiction_rate_correct().ok(),
            accuracy: self.accuracy().ok(),
            n: self.n,
            n_correct: self.n_correct,
            n_incorrect: self.n_incorrect(),
        }
    }
}

/// Index vector for one record scope (overall or a single track).
/// `None` marks an undefined index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IndexValues {
    #[serde(rename = "L")]
    pub l: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    #[serde(rename = "F")]
    pub f: Option<f64>,
    #[serde(rename = "Fp")]
    pub fp: Option<f64>,
    #[serde(rename = "RBS")]
    pub rbs: Option<f64>,
    #[serde(rename = "TRIN")]
    pub trin: Option<f64>,
    pub withdraw_delta: Option<f64>,
    pub bet_delta: Option<f64>,
    pub concordance: Option<f64>,
    pub contradiction_rate: Option<f64>,
    pub contradiction_rate_correct: Option<f64>,
    pub accuracy: Option<f64>,
    pub n: usize,
    pub n_correct: usize,
    pub n_incorrect: usize,
}

/// Names of the per-scope indices, for generic access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IndexName {
    L,
    K,
    F,
    Fp,
    #[serde(rename = "RBS")]
    Rbs,
    #[serde(rename = "TRIN")]
    Trin,
    #[serde(rename = "withdraw_delta")]
    WithdrawDelta,
    #[serde(rename = "bet_delta")]
    BetDelta,
    #[serde(rename = "concordance")]
    Concordance,
    #[serde(rename = "contradiction_rate")]
    ContradictionRate,
    #[serde(rename = "contradiction_rate_correct")]
    ContradictionRateCorrect,
    #[serde(rename = "accuracy")]
    Accuracy,
}

impl IndexName {
    /// The six validity scales.
    pub const SCALES: [IndexName; 6] =
        [IndexName::L, IndexName::K, IndexName::F, IndexName::Fp, IndexName::Rbs, IndexName::Trin];

    pub const ALL: [IndexName; 12] = [
        IndexName::L,
        IndexName::K,
        IndexName::F,
        IndexName::Fp,
        IndexName::Rbs,
        IndexName::Trin,
        IndexName::WithdrawDelta,
        IndexName::BetDelta,
        IndexName::Concordance,
        IndexName::ContradictionRate,
        IndexName::ContradictionRateCorrect,
        IndexName::Accuracy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IndexName::L => "L",
            IndexName::K => "K",
            IndexName::F => "F",
            IndexName::Fp => "Fp",
            IndexName::Rbs => "RBS",
            IndexName::Trin => "TRIN",
            IndexName::WithdrawDelta => "withdraw_delta",
            IndexName::BetDelta => "bet_delta",
            IndexName::Concordance => "concordance",
            IndexName::ContradictionRate => "contradiction_rate",
            IndexName::ContradictionRateCorrect => "contradiction_rate_correct",
            IndexName::Accuracy => "accuracy",
        }
    }

    pub fn get(self, v: &IndexValues) -> Option<f64> {
        match self {
            IndexName::L => v.l,
            IndexName::K => v.k,
            IndexName::F => v.f,
            IndexName::Fp => v.fp,
            IndexName::Rbs => v.rbs,
            IndexName::Trin => v.trin,
            IndexName::WithdrawDelta => v.withdraw_delta,
            IndexName::BetDelta => v.bet_delta,
            IndexName::Concordance => v.concordance,
            IndexName::ContradictionRate => v.contradiction_rate,
            IndexName::ContradictionRateCorrect => v.contradiction_rate_correct,
            IndexName::Accuracy => v.accuracy,
        }
    }

    pub fn slot_mut(self, v: &mut IndexValues) -> &mut Option<f64> {
        match self {
            IndexName::L => &mut v.l,
            IndexName::K => &mut v.k,
            IndexName::F => &mut v.f,
            IndexName::Fp => &mut v.fp,
            IndexName::Rbs => &mut v.rbs,
            IndexName::Trin => &mut v.trin,
            IndexName::WithdrawDelta => &mut v.withdraw_delta,
            IndexName::BetDelta => &mut v.bet_delta,
            IndexName::Concordance => &mut v.concordance,
            IndexName::ContradictionRate => &mut v.contradiction_rate,
            IndexName::ContradictionRateCorrect => &mut v.contradiction_rate_correct,
            IndexName::Accuracy => &mut v.accuracy,
        }
    }
}

impl fmt::Display for IndexName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for IndexName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        IndexName::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| format!("unknown index `{s}`"))
    }
}

fn empty_set() -> &'static BTreeSet<String> {
    static EMPTY: BTreeSet<String> = BTreeSet::new();
    &EMPTY
}

pub fn compute_l(records: &[ProbeRecord]) -> IndexResult {
    Tally::from_records(records, empty_set()).l()
}

pub fn compute_k(records: &[ProbeRecord]) -> IndexResult {
    Tally::from_records(records, empty_set()).k()
}

pub fn compute_f(records: &[ProbeRecord], consensus: &BTreeSet<String>) -> IndexResult {
    Tally::from_records(records, consensus).f()
}

pub fn compute_fp(records: &[ProbeRecord]) -> IndexResult {
    Tally::from_records(records, empty_set()).fp()
}

pub fn compute_rbs(records: &[ProbeRecord]) -> IndexResult {
    Tally::from_records(records, empty_set()).rbs()
}

pub fn compute_trin(records: &[ProbeRecord]) -> IndexResult {
    Tally::from_records(records, empty_set()).trin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Auxiliaries {
    pub withdraw_delta: Option<f64>,
    pub bet_delta: Option<f64>,
    pub concordance: Option<f64>,
    pub contradiction_rate: Option<f64>,
    pub contradiction_rate_correct: Option<f64>,
}

pub fn compute_auxiliaries(records: &[ProbeRecord]) -> Auxiliaries {
    let t = Tally::from_records(records, empty_set());
    Auxiliaries {
        withdraw_delta: t.withdraw_delta().ok(),
        bet_delta: t.bet_delta().ok(),
        concordance: t.concordance().ok(),
        contradiction_rate: t.contradiction_rate().ok(),
        contradiction_rate_correct: t.contradiction_rate_correct().ok(),
    }
}

/// Per-track response phenotype used by ICN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phenotype {
    Monitor,
    Inverted,
    Fixed,
    Indeterminate,
}

/// Band edges for labelling a track's phenotype. Checked in field order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhenotypeRule {
    pub monitor_min_delta: f64,
    pub inverted_max_delta: f64,
    pub fixed_min_trin: f64,
}

impl Default for PhenotypeRule {
    fn default() -> Self {
        PhenotypeRule { monitor_min_delta: 0.10, inverted_max_delta: -0.10, fixed_min_trin: 0.95 }
    }
}

impl PhenotypeRule {
    /// `None` when the track's withdraw delta is undefined.
    pub fn label(&self, v: &IndexValues) -> Option<Phenotype> {
        let delta = v.withdraw_delta?;
        Some(if delta >= self.monitor_min_delta {
            Phenotype::Monitor
        } else if delta <= self.inverted_max_delta {
            Phenotype::Inverted
        } else if v.trin.is_some_and(|t| t >= self.fixed_min_trin) {
            Phenotype::Fixed
        } else {
            Phenotype::Indeterminate
        })
    }
}

/// Number of phenotype changes across labelable tracks in T1..T5 order.
pub fn compute_icn(per_track: &BTreeMap<Track, IndexValues>, rule: &PhenotypeRule) -> IndexResult<usize> {
    let labels: Vec<Phenotype> =
        Track::RETROSPECTIVE.iter().filter_map(|t| per_track.get(t).and_then(|v| rule.label(v))).collect();
    if labels.len() < 2 {
        return Err(Undefined::TooFewTracks);
    }
    Ok(labels.windows(2).filter(|w| w[0] != w[1]).count())
}

/// Which prospective choices count as the KEEP-analogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProspectiveMapping {
    pub keep_analogue: BTreeSet<ProspectiveChoice>,
}

impl Default for ProspectiveMapping {
    fn default() -> Self {
        ProspectiveMapping { keep_analogue: [ProspectiveChoice::Answer].into_iter().collect() }
    }
}

/// L over T1–T5 and its prospective analogue over T6.
pub fn retro_prospective_split(records: &[ProbeRecord], mapping: &ProspectiveMapping) -> (IndexResult, IndexResult) {
    let retro = Tally::from_records(records.iter().filter(|r| !r.track.is_prospective()), empty_set()).l();
    let (mut incorrect, mut answered) = (0usize, 0usize);
    for r in records.iter().filter(|r| r.track.is_prospective() && !r.correct) {
        if let Some(choice) = r.prospective {
            incorrect += 1;
            answered += mapping.keep_analogue.contains(&choice) as usize;
        }
    }
    (retro, ratio(answered, incorrect, Undefined::NoIncorrect))
}

/// Whether consensus items come from norms over all models or from norms
/// that leave the profiled model out.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormsMode {
    #[default]
    Inclusive,
    LeaveOneOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    pub consensus_threshold: f64,
    pub norms_mode: NormsMode,
    pub phenotype: PhenotypeRule,
    pub prospective: ProspectiveMapping,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            consensus_threshold: crate::data::DEFAULT_CONSENSUS_THRESHOLD,
            norms_mode: NormsMode::Inclusive,
            phenotype: PhenotypeRule::default(),
            prospective: ProspectiveMapping::default(),
        }
    }
}

/// Complete validity profile of one model.
///
/// Overall indices cover the retrospective tracks T1–T5; T6 appears in
/// `per_track` and in the prospective split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityProfile {
    pub model_id: String,
    #[serde(flatten)]
    pub overall: IndexValues,
    #[serde(rename = "ICN")]
    pub icn: Option<usize>,
    pub phenotypes: BTreeMap<Track, Phenotype>,
    pub per_track: BTreeMap<Track, IndexValues>,
    #[serde(rename = "L_retro")]
    pub l_retro: Option<f64>,
    #[serde(rename = "L_prosp")]
    pub l_prosp: Option<f64>,
    pub tally: Tally,
}

impl ValidityProfile {
    pub fn get(&self, index: IndexName) -> Option<f64> {
        index.get(&self.overall)
    }

    /// Names of overall indices that are undefined, with the reason.
    pub fn undefined_notes(&self) -> Vec<String> {
        let t = &self.tally;
        let checks: [(IndexName, IndexResult); 12] = [
            (IndexName::L, t.l()),
            (IndexName::K, t.k()),
            (IndexName::F, t.f()),
            (IndexName::Fp, t.fp()),
            (IndexName::Rbs, t.rbs()),
            (IndexName::Trin, t.trin()),
            (IndexName::WithdrawDelta, t.withdraw_delta()),
            (IndexName::BetDelta, t.bet_delta()),
            (IndexName::Concordance, t.concordance()),
            (IndexName::ContradictionRate, t.contradiction_rate()),
            (IndexName::ContradictionRateCorrect, t.contradiction_rate_correct()),
            (IndexName::Accuracy, t.accuracy()),
        ];
        checks.into_iter().filter_map(|(name, r)| r.err().map(|why| format!("{name}: {why}"))).collect()
    }
}

pub fn compute_profile(
    model_id: &str,
    records: &[ProbeRecord],
    consensus: &BTreeSet<String>,
    config: &ProfileConfig,
) -> ValidityProfile {
    let mut overall = Tally::default();
    let mut tracks: BTreeMap<Track, Tally> = BTreeMap::new();
    for r in records {
        let in_consensus = consensus.contains(&r.item_id);
        if !r.track.is_prospective() {
            overall.push(r, in_consensus);
        }
        tracks.entry(r.track).or_default().push(r, in_consensus);
    }
    let per_track: BTreeMap<Track, IndexValues> = tracks.iter().map(|(t, tally)| (*t, tally.values())).collect();
    let phenotypes = per_track
        .iter()
        .filter(|(t, _)| !t.is_prospective())
        .filter_map(|(t, v)| config.phenotype.label(v).map(|p| (*t, p)))
        .collect();
    let (l_retro, l_prosp) = retro_prospective_split(records, &config.prospective);
    ValidityProfile {
        model_id: model_id.to_string(),
        overall: overall.values(),
        icn: compute_icn(&per_track, &config.phenotype).ok(),
        phenotypes,
        per_track,
        l_retro: l_retro.ok(),
        l_prosp: l_prosp.ok(),
        tally: overall,
    }
}

/// Profiles for every model in the dataset, sorted by model id.
pub fn compute_profiles(
    ds: &Dataset,
    norms: &ItemNorms,
    config: &ProfileConfig,
    exec: Execution,
) -> Vec<ValidityProfile> {
    let models: Vec<(&str, &[ProbeRecord])> = ds.by_model().collect();
    let shared = consensus_items(norms, config.consensus_threshold);
    map_slice(&models, exec, |(model, records)| match config.norms_mode {
        NormsMode::Inclusive => compute_profile(model, records, &shared, config),
        NormsMode::LeaveOneOut => {
            let loo = ItemNorms::compute_excluding(ds, Some(model));
            let consensus = consensus_items(&loo, config.consensus_threshold);
            compute_profile(model, records, &consensus, config)
        }
    })
}
