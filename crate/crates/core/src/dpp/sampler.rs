//! Per-node negative sampling across layers.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{build_kernel, eig_sym, sample_kdpp, squeeze, KernelContext};
use crate::error::{Error, Result};
use crate::graph::CandidateSet;

/// Which negative sampler drives training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    /// k-DPP conditioned on the previous layer's samples through squeezing.
    #[default]
    LayerDiverse,
    /// k-DPP drawn afresh in every layer.
    Independent,
    /// No negative samples.
    None,
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "layer-diverse" => Ok(Self::LayerDiverse),
            "independent" => Ok(Self::Independent),
            "none" => Ok(Self::None),
            other => Err(Error::InvalidArgument(format!(
                "unknown sampler {other:?} (expected layer-diverse, independent or none)"
            ))),
        }
    }
}

/// Negative samples per layer (0-based) and central node.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleStore {
    pub layers: Vec<BTreeMap<usize, Vec<usize>>>,
}

impl SampleStore {
    pub fn with_layers(num_layers: usize) -> Self {
        Self {
            layers: vec![BTreeMap::new(); num_layers],
        }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Samples of `node` at `layer`; empty when the node was not sampled.
    pub fn get(&self, layer: usize, node: usize) -> &[usize] {
        self.layers
            .get(layer)
            .and_then(|m| m.get(&node))
            .map_or(&[], Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.layers.iter().all(|m| m.values().all(Vec::is_empty))
    }
}

/// `max(1, ⌈fraction · |S|⌉)`.
pub fn default_sample_size(candidates: usize, fraction: f64) -> usize {
    ((fraction * candidates as f64).ceil() as usize).max(1)
}

/// Everything one sampling call produced, for inspection and debug dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub node: usize,
    pub members: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    pub sampled: Vec<usize>,
    /// Rows (as node ids) that were squeezed, in application order.
    pub squeezed_rows: Vec<usize>,
}

fn sample_with<R: Rng + ?Sized>(
    ctx: &KernelContext<'_>,
    s: &CandidateSet,
    prev: &[usize],
    k: usize,
    gamma: f64,
    squeeze_prev: bool,
    rng: &mut R,
) -> Result<SampleOutcome> {
    if k == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    if s.is_empty() {
        return Err(Error::EmptyCandidateSet(s.center));
    }
    let kernel = build_kernel(ctx, s)?;
    let mut basis = eig_sym(&kernel)?;
    let eigenvalues = basis.eigenvalues.to_vec();
    let mut outcome = SampleOutcome {
        node: s.center,
        members: s.members.clone(),
        eigenvalues,
        sampled: Vec::new(),
        squeezed_rows: Vec::new(),
    };
    if s.len() <= k {
        outcome.sampled = s.members.clone();
        return Ok(outcome);
    }

    let positive = basis.positive_count();
    let mut k = k;
    if k > positive {
        log::warn!(
            "node {}: k = {k} exceeds {positive} positive eigenvalues, reducing",
            s.center
        );
        k = positive;
    }
    if k == 0 {
        return Ok(outcome);
    }

    if squeeze_prev {
        for &j in prev {
            if let Some(row) = s.position(j) {
                basis = squeeze(&basis, row, gamma)?;
                outcome.squeezed_rows.push(j);
            }
        }
    }
    outcome.sampled = sample_kdpp(&basis, k, rng)?;
    Ok(outcome)
}

/// Draw negatives for `s.center`, squeezing every previous-layer sample out
/// of the eigenbasis before the k-DPP draw.
pub fn layer_diverse_sample<R: Rng + ?Sized>(
    ctx: &KernelContext<'_>,
    s: &CandidateSet,
    prev: &[usize],
    k: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<SampleOutcome> {
    sample_with(ctx, s, prev, k, gamma, true, rng)
}

/// Layer-independent baseline: the previous layer's samples are ignored.
pub fn sample_independent<R: Rng + ?Sized>(
    ctx: &KernelContext<'_>,
    s: &CandidateSet,
    k: usize,
    rng: &mut R,
) -> Result<SampleOutcome> {
    sample_with(ctx, s, &[], k, 0.0, false, rng)
}
