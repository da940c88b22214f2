//! Wind speed forecasting with delay embedding and random forest regression.
//!
//! The pipeline: ingest a regularly sampled series ([`timeseries`]), measure
//! how far back the dependence reaches ([`analysis`]), turn the series into
//! sliding-window regression rows ([`embedding`]), fit a random forest
//! ([`forest`]), then forecast and score it block by block ([`forecast`]).

// `!(a > b)` is used on purpose so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod embedding;
pub mod error;
pub mod forecast;
pub mod forest;
pub mod synth;
pub mod timeseries;

pub use error::{Error, Result};
