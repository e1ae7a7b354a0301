//! Layer-diverse determinantal negative sampling for graph convolutional networks.
//!
//! The crate covers the full pipeline: shortest-path candidate pools
//! ([`graph`]), community structure ([`clustering`]), quality/diversity
//! kernels and k-DPP sampling with the layer-to-layer space squeeze
//! ([`dpp`]), a dense GCN trained with negative-sample message passing
//! ([`gnn`]), the overlap and smoothness diagnostics ([`metrics`]) and
//! brute-force reference checks ([`verify`]).

pub mod clustering;
pub mod dpp;
mod error;
pub mod gnn;
pub mod graph;
pub mod metrics;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
