//! Probe records, datasets and derivation-sample item norms.

mod csv_io;
mod dataset;
mod norms;

pub use csv_io::{load_dir, parse_probe_csv, probe_csv_files, write_probe_csv, CSV_HEADER};
pub use dataset::{Dataset, EXPECTED_TRACK_SIZES};
pub use norms::{consensus_items, ItemNorm, ItemNorms, DEFAULT_CONSENSUS_THRESHOLD};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{file}row {row}, column `{column}`: {message}")]
    Parse { file: String, row: usize, column: String, message: String },
    #[error("{file}row {row}: {message}")]
    Schema { file: String, row: usize, message: String },
    #[error("duplicate record for model `{model}`, item `{item}`")]
    DuplicateRecord { model: String, item: String },
    #[error("item `{item}` appears under both {first} and {second}")]
    InconsistentItem { item: String, first: Track, second: Track },
    #[error("no probe records")]
    EmptyInput,
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("norms file: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// Battery track. T1–T5 carry retrospective probes only; T6 adds a
/// prospective choice made before answering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Track {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
}

impl Track {
    pub const ALL: [Track; 6] = [Track::T1, Track::T2, Track::T3, Track::T4, Track::T5, Track::T6];
    pub const RETROSPECTIVE: [Track; 5] = [Track::T1, Track::T2, Track::T3, Track::T4, Track::T5];

    pub fn is_prospective(self) -> bool {
        self == Track::T6
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Track::T1 => "T1",
            Track::T2 => "T2",
            Track::T3 => "T3",
            Track::T4 => "T4",
            Track::T5 => "T5",
            Track::T6 => "T6",
        }
    }

    /// Leading `T<k>` of an item id such as `T3-017`, if present.
    pub fn from_item_prefix(item_id: &str) -> Option<Track> {
        let b = item_id.as_bytes();
        if b.len() < 2 || b[0] != b'T' || !(b'1'..=b'6').contains(&b[1]) {
            return None;
        }
        if b.get(2).is_some_and(|c| c.is_ascii_digit()) {
            return None;
        }
        Some(Track::ALL[(b[1] - b'1') as usize])
    }
}

impl fmt::Display for Track {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Track {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Track::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| format!("expected one of T1..T6, got `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KeepDecision {
    #[serde(rename = "KEEP")]
    Keep,
    #[serde(rename = "WITHDRAW")]
    Withdraw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BetDecision {
    #[serde(rename = "BET")]
    Bet,
    #[serde(rename = "NO_BET")]
    NoBet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProspectiveChoice {
    #[serde(rename = "ANSWER")]
    Answer,
    #[serde(rename = "HINT")]
    Hint,
    #[serde(rename = "DECLINE")]
    Decline,
}

macro_rules! token_enum {
    ($ty:ty, $($variant:path => $tok:literal),+) => {
        impl $ty {
            pub const TOKENS: &'static [&'static str] = &[$($tok),+];

            pub fn as_str(self) -> &'static str {
                match self { $($variant => $tok),+ }
            }

            pub fn parse_token(s: &str) -> Option<Self> {
                match s { $($tok => Some($variant),)+ _ => None }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

token_enum!(KeepDecision, KeepDecision::Keep => "KEEP", KeepDecision::Withdraw => "WITHDRAW");
token_enum!(BetDecision, BetDecision::Bet => "BET", BetDecision::NoBet => "NO_BET");
token_enum!(
    ProspectiveChoice,
    ProspectiveChoice::Answer => "ANSWER",
    ProspectiveChoice::Hint => "HINT",
    ProspectiveChoice::Decline => "DECLINE"
);

/// One model × item evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub model_id: String,
    pub track: Track,
    pub item_id: String,
    pub domain: String,
    pub correct: bool,
    pub keep: KeepDecision,
    pub bet: BetDecision,
    /// Present exactly on T6 records.
    pub prospective: Option<ProspectiveChoice>,
}

impl ProbeRecord {
    pub fn kept(&self) -> bool {
        self.keep == KeepDecision::Keep
    }

    pub fn withdrew(&self) -> bool {
        self.keep == KeepDecision::Withdraw
    }

    pub fn bet(&self) -> bool {
        self.bet == BetDecision::Bet
    }
}
