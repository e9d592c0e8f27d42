//! Designed-experiment auditing for trainable image classifiers.
//!
//! The pipeline treats a procedural image generator as an experimental
//! apparatus: factorial probe designs vary the generator's factors, a
//! one-way ANOVA over per-sample task loss yields a per-factor sensitivity
//! profile, and a deterministic decision rule classifies each factor as a
//! coverage gap, a shortcut, or correct. Diagnosed gaps are corrected with
//! targeted synthetic data (diversity samples and counterfactual pairs) and
//! verified by re-audit.
//!
//! Modules follow the pipeline stages:
//!
//! * [`factor_space`] — named discrete factors and settings
//! * [`design`] — full/fractional factorial plans and alias structure
//! * [`synthgen`] — procedural renderers and dataset builders
//! * [`nnet`] — small CNN with exact gradients, Adam, and the combined
//!   task + invariance objective
//! * [`audit`] — ANOVA decomposition, F-distribution tail, Holm correction
//! * [`diagnose`] — coverage/shortcut tests and gap classification
//! * [`prescribe`] — targeted data generation, correction, verify loop
//! * [`experiments`] — end-to-end runners and report emission

pub mod audit;
pub mod design;
pub mod diagnose;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod factor_space;
pub mod nnet;
pub mod prescribe;
pub mod rng;
pub mod synthgen;
pub mod util;

pub use error::{DoeError, Result};
