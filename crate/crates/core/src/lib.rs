//! Safety shields for partially observable MDPs, computed from the model's
//! graph alone, and tabular learning agents that act through them.
//!
//! The pipeline: parse or generate a [`model::Pomdp`], track belief
//! supports with [`estimator`], synthesize a [`synth::Shield`] for a
//! reach-avoid or avoid specification, and mask an agent's actions with it
//! at run time ([`runtime`], [`learn`]). [`domains`] generates the six grid
//! benchmarks and [`cli`] ties it together.

pub mod cli;
pub mod domains;
pub mod error;
pub mod estimator;
pub mod fixtures;
pub mod learn;
pub mod model;
pub mod runtime;
pub mod sim;
pub mod synth;
