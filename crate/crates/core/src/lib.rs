//! Censoring-aware Weibull time-to-event modelling on discrete event grids.
//!
//! The pipeline: arrival timestamps become per-step supervision targets
//! ([`grid`]), transaction logs become covariate tensors ([`features`]), a
//! stacked-LSTM network emits per-step distribution parameters trained by a
//! censored interval likelihood ([`neural`], [`model`], [`survival`]), and
//! forecasts are scored with rank and remaining-life metrics ([`metrics`]).
//! [`datagen`] provides ground-truth synthetic processes for testing.

pub mod datagen;
pub mod error;
pub mod features;
pub mod grid;
pub mod metrics;
pub mod model;
pub mod neural;
pub mod survival;

pub use error::{Error, Result};
