//! Response-validity screening for binary confidence probes.
//!
//! A model answers each item and then reports KEEP/WITHDRAW and BET/NO_BET
//! on its own answer. This crate turns those probe records into validity
//! indices, classifies models into validity tiers, checks the tier rules
//! against synthetic response policies, and runs a psychometric battery on
//! the resulting profiles.

pub mod classify;
pub mod data;
pub mod indices;
pub mod par;
pub mod psychometrics;
pub mod report;
pub mod statkit;
pub mod synthetic;
