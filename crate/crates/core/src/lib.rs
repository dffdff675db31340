//! Geno-Weaving: cross-strand polar coding for DNA pools.
//!
//! Every position of a pool of `n` strands is protected by one length-`n` polar
//! code designed for a binary symmetric channel. Deletions and insertions are
//! handled by re-aligning each strand's observations whenever the decoded column
//! contradicts them ("push" for deletions, "pull" for insertions).
//!
//! The crate also carries the closed-form rate model of the baseline that
//! concatenates per-strand deletion codes with an outer erasure code, so the two
//! approaches can be compared on the same axes.
//!
//! All numeric code is generic over [`Scalar`]; the aliases below fix it to
//! `f64` (the default everywhere in the CLI) or `f32`.

pub mod channels;
pub mod cli;
pub mod error;
pub mod format;
pub mod polar;
pub mod rates;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod weave;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Nucleotides per strand.
pub const STRAND_LENGTH: usize = 256;

pub type PolarCode64 = polar::PolarCode<f64>;
pub type PolarCode32 = polar::PolarCode<f32>;
pub type ScDecoder64 = polar::ScDecoder<f64>;
pub type ChannelSpec64 = channels::ChannelSpec<f64>;
pub type ExperimentConfig64 = sim::ExperimentConfig<f64>;
pub type SweepConfig64 = sim::SweepConfig<f64>;
pub type ConstructionEstimate64 = polar::ConstructionEstimate<f64>;
