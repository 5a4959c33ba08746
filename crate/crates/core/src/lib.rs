//! Winsorizing published estimates of the social cost of carbon with
//! country-level economic limits.
//!
//! The pipeline: [`ingest`] reads estimates, paper quality flags, a country
//! panel and growth scenarios; [`winsor`] caps each estimate at the
//! emission-weighted average of per-country limits (ability to pay, or the
//! Leviathan tax); [`stats`] summarizes the weighted result; [`scenario`]
//! projects the winsorized mean forward; [`abatement`] adds the feedback of
//! imposing that mean as a carbon tax. [`cli`] wires it together for the
//! `sccw` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod abatement;
pub mod cli;
pub mod error;
pub mod ingest;
pub mod numeric;
pub mod scenario;
pub mod stats;
pub mod svg;
pub mod winsor;

pub use error::{Error, Result};
pub use ingest::{CountryRecord, PaperRecord, SccEstimate, ScenarioSpec};
pub use stats::{SummaryStats, WeightedSample};
pub use winsor::{WinsorLimits, WinsorPolicy};
