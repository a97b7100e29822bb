//! Mesoscopic community detection in correlated time series.
//!
//! The pipeline turns a price panel into log-returns (or their signs),
//! estimates the Pearson correlation matrix, removes the random bulk and the
//! market mode using the Marchenko-Pastur band, and maximizes modularity on
//! what remains. Partitions from different representations are compared
//! with the normalized variation of information.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod compare;
pub mod correlation;
pub mod detect;
pub mod error;
pub mod ingest;
pub mod modularity;
pub mod pipeline;
pub mod spectra;
pub mod synth;

pub use error::{Error, Result};
