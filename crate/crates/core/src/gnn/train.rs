//! Full-batch training loop with per-epoch negative resampling.

use std::collections::BTreeMap;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::layer::LayerNegatives;
use super::model::{backward, cross_entropy, forward, forward_with, ForwardCache, ModelParams};
use crate::clustering::{fluid_communities_by_component, Communities, DEFAULT_FLUID_ITERS};
use crate::dpp::{
    default_sample_size, layer_diverse_sample, sample_independent, KernelContext, SampleOutcome, SampleStore,
    SamplerKind,
};
use crate::error::{Error, Result};
use crate::graph::{build_candidate_set, select_central_nodes, CandidateSet, Graph};
use crate::metrics::{accuracy, mad, overlap_report, OverlapReport};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub layers: usize,
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub sampler: SamplerKind,
    pub gamma: f64,
    /// Per-node sample size is `max(1, ⌈k_fraction · |S_i|⌉)`.
    pub k_fraction: f64,
    pub central_fraction: f64,
    pub path_length: usize,
    /// Community count for the kernel; defaults to the class count, or ⌈√N⌉ without labels.
    pub communities: Option<usize>,
    pub mu_init: f64,
    pub train_mu: bool,
    /// Compute overlap and MAD every this many epochs (0: only after training).
    pub metrics_every: usize,
    /// Cluster counts for the cluster overlap rate, as multiples of the class count.
    pub cluster_multipliers: Vec<usize>,
    /// Keep every per-node sampling record (for debug dumps).
    pub record_samples: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            layers: 2,
            hidden: 16,
            lr: 0.02,
            epochs: 200,
            seed: 0,
            sampler: SamplerKind::LayerDiverse,
            gamma: 0.9,
            k_fraction: 0.2,
            central_fraction: 0.01,
            path_length: 6,
            communities: None,
            mu_init: 0.5,
            train_mu: true,
            metrics_every: 0,
            cluster_multipliers: vec![1, 5],
            record_samples: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.layers == 0 {
            return bad("layers must be at least 1".into());
        }
        if self.hidden == 0 {
            return bad("hidden must be at least 1".into());
        }
        if !(self.lr > 0.0) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(self.k_fraction > 0.0 && self.k_fraction <= 1.0) {
            return bad(format!("k_fraction must lie in (0, 1], got {}", self.k_fraction));
        }
        if !(self.central_fraction > 0.0 && self.central_fraction <= 1.0) {
            return bad(format!("central_fraction must lie in (0, 1], got {}", self.central_fraction));
        }
        if self.path_length < 2 {
            return bad(format!("path_length must be at least 2, got {}", self.path_length));
        }
        if self.communities == Some(0) {
            return bad("communities must be at least 1".into());
        }
        if !(self.mu_init >= 0.0) {
            return bad(format!("mu_init must be non-negative, got {}", self.mu_init));
        }
        if self.cluster_multipliers.contains(&0) {
            return bad("cluster multipliers must be positive".into());
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            train_mu: self.train_mu,
            ..AdamConfig::default()
        }
    }
}

/// One line of training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: Option<f64>,
    pub val_acc: Option<f64>,
    pub test_acc: Option<f64>,
    pub mu: f64,
    pub ovr_node: Option<f64>,
    pub ovr_cls: Option<f64>,
    pub ovr_5cls: Option<f64>,
    pub mad: Option<f64>,
}

/// Metrics of a pass with the trained parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub train_acc: Option<f64>,
    pub val_acc: Option<f64>,
    pub test_acc: Option<f64>,
    pub mu: f64,
    pub overlap: Option<OverlapReport>,
    /// MAD of the last layer's output.
    pub mad: f64,
}

/// A per-node sampling record with the epoch and layer it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub epoch: usize,
    pub layer: usize,
    #[serde(flatten)]
    pub outcome: SampleOutcome,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    /// Negatives used in each epoch's forward pass (empty stores without a sampler).
    pub sample_trace: Vec<SampleStore>,
    pub central: Vec<usize>,
    pub candidates: Vec<CandidateSet>,
    pub num_communities: usize,
    pub final_eval: Evaluation,
    pub samples: Vec<SampleRecord>,
}

impl TrainOutcome {
    /// Node overlap averaged over every epoch whose store has a valid pair.
    pub fn mean_ovr_node(&self) -> Option<f64> {
        let vals: Vec<f64> = self
            .sample_trace
            .iter()
            .filter_map(|s| crate::metrics::ovr_node(s, &self.central).ok())
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

fn default_communities(g: &Graph, requested: Option<usize>) -> usize {
    let q = requested.unwrap_or_else(|| {
        let classes = g.num_classes();
        if classes > 0 {
            classes
        } else {
            (g.num_nodes() as f64).sqrt().ceil() as usize
        }
    });
    q.clamp(1, g.num_nodes())
}

/// Central nodes and their candidate sets; nodes with empty sets are dropped.
pub fn prepare_candidates(g: &Graph, cfg: &TrainConfig) -> Result<(Vec<usize>, Vec<CandidateSet>)> {
    let central = select_central_nodes(g, cfg.central_fraction, &mut stream(cfg.seed, "candidates", &[0]))?;
    let mut kept = Vec::with_capacity(central.len());
    let mut sets = Vec::with_capacity(central.len());
    for &i in &central {
        match build_candidate_set(g, i, cfg.path_length, &mut stream(cfg.seed, "candidates", &[1, i as u64])) {
            Ok(s) => {
                kept.push(i);
                sets.push(s);
            }
            Err(Error::EmptyCandidateSet(_)) => log::debug!("node {i}: empty candidate set, skipped"),
            Err(e) => return Err(e),
        }
    }
    Ok((kept, sets))
}

/// Draws negatives for every central node of one forward pass.
pub(crate) struct Sampler<'a> {
    pub kind: SamplerKind,
    pub candidates: &'a [CandidateSet],
    pub communities: Communities,
    pub k_fraction: f64,
    pub gamma: f64,
    pub seed: u64,
    /// Distinguishes passes (the epoch number during training).
    pub pass: u64,
    pub records: Option<Vec<(usize, SampleOutcome)>>,
    prev: LayerNegatives,
}

impl<'a> Sampler<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kind: SamplerKind,
        candidates: &'a [CandidateSet],
        communities: Communities,
        k_fraction: f64,
        gamma: f64,
        seed: u64,
        pass: u64,
        record: bool,
    ) -> Self {
        Self {
            kind,
            candidates,
            communities,
            k_fraction,
            gamma,
            seed,
            pass,
            records: record.then(Vec::new),
            prev: LayerNegatives::new(),
        }
    }

    pub fn layer(&mut self, l: usize, reps: ArrayView2<f64>) -> Result<Option<LayerNegatives>> {
        if self.kind == SamplerKind::None || self.candidates.is_empty() {
            return Ok(None);
        }
        let ctx = KernelContext::new(reps, &self.communities)?;
        let (kind, gamma, seed, pass) = (self.kind, self.gamma, self.seed, self.pass);
        let prev = &self.prev;
        let outcomes = self
            .candidates
            .par_iter()
            .map(|s| {
                let k = default_sample_size(s.len(), self.k_fraction);
                let mut rng = stream(seed, "sampling", &[pass, l as u64, s.center as u64]);
                match kind {
                    SamplerKind::LayerDiverse => {
                        let before = prev.get(&s.center).map_or(&[][..], Vec::as_slice);
                        layer_diverse_sample(&ctx, s, before, k, gamma, &mut rng)
                    }
                    _ => sample_independent(&ctx, s, k, &mut rng),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let negs: LayerNegatives = outcomes.iter().map(|o| (o.node, o.sampled.clone())).collect();
        if let Some(records) = &mut self.records {
            records.extend(outcomes.into_iter().map(|o| (l, o)));
        }
        self.prev = negs.clone();
        Ok(Some(negs))
    }
}

struct Context<'a> {
    g: &'a Graph,
    cfg: &'a TrainConfig,
    candidates: Vec<CandidateSet>,
    central: Vec<usize>,
    q: usize,
}

impl Context<'_> {
    fn sampled_pass(&self, params: &ModelParams, pass: usize) -> Result<(ForwardCache, Vec<(usize, SampleOutcome)>)> {
        if self.cfg.sampler == SamplerKind::None || self.candidates.is_empty() {
            return Ok((forward_with(params, self.g, |_, _| Ok(None))?, Vec::new()));
        }
        let communities = fluid_communities_by_component(
            self.g,
            self.q,
            DEFAULT_FLUID_ITERS,
            &mut stream(self.cfg.seed, "communities", &[pass as u64]),
        )?;
        let mut sampler = Sampler::new(
            self.cfg.sampler,
            &self.candidates,
            communities,
            self.cfg.k_fraction,
            self.cfg.gamma,
            self.cfg.seed,
            pass as u64,
            self.cfg.record_samples,
        );
        let cache = forward_with(params, self.g, |l, h| sampler.layer(l, h))?;
        Ok((cache, sampler.records.unwrap_or_default()))
    }

    fn overlap(&self, cache: &ForwardCache, pass: usize) -> Option<OverlapReport> {
        let store = cache.store.as_ref()?;
        let classes = self.g.num_classes().max(1);
        let reps = cache.layer_representations();
        overlap_report(
            store,
            &self.central,
            &reps,
            classes,
            &self.cfg.cluster_multipliers,
            &mut stream(self.cfg.seed, "kmeans", &[pass as u64]),
        )
        .ok()
    }
}

fn split_accuracy(cache: &ForwardCache, g: &Graph, mask: &[usize]) -> Option<f64> {
    accuracy(cache.logits().view(), g.labels(), mask).ok()
}

fn evaluate(ctx: &Context<'_>, params: &ModelParams, cache: &ForwardCache, pass: usize) -> Evaluation {
    let g = ctx.g;
    Evaluation {
        loss: cross_entropy(cache.logits().view(), g.labels(), &g.splits().train),
        train_acc: split_accuracy(cache, g, &g.splits().train),
        val_acc: split_accuracy(cache, g, &g.splits().val),
        test_acc: split_accuracy(cache, g, &g.splits().test),
        mu: params.mu,
        overlap: ctx.overlap(cache, pass),
        mad: mad(cache.logits().view()),
    }
}

/// Train a negative-sample GCN.
///
/// Candidate sets are built once. Every epoch recomputes communities, draws
/// fresh negatives layer by layer inside the forward pass (layer `l` is
/// conditioned on layer `l − 1` for the layer-diverse sampler), then takes one
/// Adam step on the mean training cross-entropy. History accuracies are
/// measured on the epoch's forward pass, before the step. A final pass with
/// the trained parameters and fresh negatives produces `final_eval`.
/// Initial parameters for `cfg` on `g`, drawn from the run's init stream.
pub fn init_params(g: &Graph, cfg: &TrainConfig) -> Result<ModelParams> {
    ModelParams::init(
        g.feature_dim(),
        cfg.hidden,
        g.num_classes(),
        cfg.layers,
        cfg.mu_init,
        &mut stream(cfg.seed, "init", &[]),
    )
}

pub fn train(g: &Graph, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let classes = g.num_classes();
    if classes == 0 {
        return Err(Error::InvalidGraph("training needs at least one labeled node".into()));
    }
    let (central, candidates) = if cfg.sampler == SamplerKind::None {
        (Vec::new(), Vec::new())
    } else {
        prepare_candidates(g, cfg)?
    };
    if cfg.sampler != SamplerKind::None && candidates.is_empty() {
        log::warn!("no central node has candidates; training without negatives");
    }
    let ctx = Context {
        g,
        cfg,
        candidates,
        central,
        q: default_communities(g, cfg.communities),
    };

    let mut params = init_params(g, cfg)?;
    let adam = cfg.adam();
    let mut state = AdamState::new(&params);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut samples = Vec::new();
    let train_mask = &g.splits().train;

    for epoch in 0..cfg.epochs {
        let (cache, records) = ctx.sampled_pass(&params, epoch)?;
        let loss = cross_entropy(cache.logits().view(), g.labels(), train_mask);
        let mut record = EpochRecord {
            epoch,
            loss,
            train_acc: split_accuracy(&cache, g, train_mask),
            val_acc: split_accuracy(&cache, g, &g.splits().val),
            test_acc: split_accuracy(&cache, g, &g.splits().test),
            mu: params.mu,
            ovr_node: None,
            ovr_cls: None,
            ovr_5cls: None,
            mad: None,
        };
        if cfg.metrics_every > 0 && (epoch + 1) % cfg.metrics_every == 0 {
            if let Some(report) = ctx.overlap(&cache, epoch) {
                record.ovr_node = Some(report.ovr_node);
                record.ovr_cls = report.ovr_cls(1);
                record.ovr_5cls = report.ovr_cls(5);
            }
            record.mad = Some(mad(cache.logits().view()));
        } else if let Some(store) = &cache.store {
            record.ovr_node = crate::metrics::ovr_node(store, &ctx.central).ok();
        }
        log::debug!("epoch {epoch}: loss {loss:.4} val {:?}", record.val_acc);
        let grads = backward(&params, g, &cache, g.labels(), train_mask);
        adam_step(&mut params, &grads, &mut state, &adam);
        samples.extend(records.into_iter().map(|(layer, outcome)| SampleRecord { epoch, layer, outcome }));
        trace.push(cache.store.unwrap_or_default());
        history.push(record);
    }

    let (cache, records) = ctx.sampled_pass(&params, cfg.epochs)?;
    samples.extend(records.into_iter().map(|(layer, outcome)| SampleRecord {
        epoch: cfg.epochs,
        layer,
        outcome,
    }));
    let final_eval = evaluate(&ctx, &params, &cache, cfg.epochs);
    Ok(TrainOutcome {
        params,
        history,
        sample_trace: trace,
        num_communities: ctx.q,
        central: ctx.central,
        candidates: ctx.candidates,
        final_eval,
        samples,
    })
}

/// Reference trainer for the plain GCN: no candidates, no communities, no
/// sampling code at all. Matches `train` with `sampler = none` bitwise.
pub fn train_plain_gcn(g: &Graph, cfg: &TrainConfig) -> Result<(ModelParams, Vec<f64>)> {
    cfg.validate()?;
    let mut params = init_params(g, cfg)?;
    let adam = cfg.adam();
    let mut state = AdamState::new(&params);
    let mut losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let cache = forward(&params, g, None)?;
        losses.push(cross_entropy(cache.logits().view(), g.labels(), &g.splits().train));
        let grads = backward(&params, g, &cache, g.labels(), &g.splits().train);
        adam_step(&mut params, &grads, &mut state, &adam);
    }
    Ok((params, losses))
}

/// Run one sampled forward pass with fixed parameters and report every
/// per-node sampling record (layer, outcome). Used by the debug view.
pub fn sample_once(
    g: &Graph,
    cfg: &TrainConfig,
    params: &ModelParams,
    nodes: &[usize],
) -> Result<BTreeMap<usize, Vec<(usize, SampleOutcome)>>> {
    let candidates: Vec<CandidateSet> = nodes
        .iter()
        .filter_map(|&i| {
            match build_candidate_set(g, i, cfg.path_length, &mut stream(cfg.seed, "candidates", &[1, i as u64])) {
                Ok(s) => Some(Ok(s)),
                Err(Error::EmptyCandidateSet(_)) => None,
                Err(e) => Some(Err(e)),
            }
        })
        .collect::<Result<_>>()?;
    let ctx = Context {
        g,
        cfg: &TrainConfig {
            record_samples: true,
            ..cfg.clone()
        },
        central: candidates.iter().map(|s| s.center).collect(),
        candidates,
        q: default_communities(g, cfg.communities),
    };
    let (_, records) = ctx.sampled_pass(params, 0)?;
    let mut out: BTreeMap<usize, Vec<(usize, SampleOutcome)>> = BTreeMap::new();
    for (layer, o) in records {
        out.entry(o.node).or_default().push((layer, o));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_sbm, SbmParams};

    fn small_sbm(seed: u64) -> Graph {
        let params = SbmParams {
            blocks: vec![20, 20, 20],
            p_in: 0.3,
            p_out: 0.02,
            feature_dim: 3,
            ..SbmParams::six_block_fixture()
        };
        generate_sbm(&params, &mut stream(seed, "graph-gen", &[])).unwrap()
    }

    fn quick(sampler: SamplerKind) -> TrainConfig {
        TrainConfig {
            epochs: 15,
            sampler,
            central_fraction: 0.2,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn no_sampler_matches_plain_gcn_bitwise() {
        let g = small_sbm(0);
        let cfg = TrainConfig {
            mu_init: 0.0,
            ..quick(SamplerKind::None)
        };
        let out = train(&g, &cfg).unwrap();
        let (params, losses) = train_plain_gcn(&g, &cfg).unwrap();
        assert_eq!(out.params, params);
        let trained: Vec<f64> = out.history.iter().map(|r| r.loss).collect();
        assert_eq!(trained, losses);
    }

    #[test]
    fn same_seed_same_history() {
        let g = small_sbm(1);
        let a = train(&g, &quick(SamplerKind::LayerDiverse)).unwrap();
        let b = train(&g, &quick(SamplerKind::LayerDiverse)).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.sample_trace, b.sample_trace);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn samples_respect_candidate_sets() {
        let g = small_sbm(2);
        let out = train(&g, &quick(SamplerKind::LayerDiverse)).unwrap();
        assert!(!out.central.is_empty());
        for store in &out.sample_trace {
            assert_eq!(store.num_layers(), 2);
            for layer in &store.layers {
                for (i, negs) in layer {
                    let s = out.candidates.iter().find(|s| s.center == *i).unwrap();
                    let k = default_sample_size(s.len(), 0.2);
                    assert!(negs.len() <= k);
                    assert!(negs.iter().all(|j| s.members.contains(j)));
                }
            }
        }
    }

    #[test]
    fn loss_decreases() {
        let g = small_sbm(3);
        let out = train(&g, &quick(SamplerKind::LayerDiverse)).unwrap();
        assert!(out.history.last().unwrap().loss < out.history[0].loss);
        assert!(out.final_eval.overlap.is_some());
    }

    #[test]
    fn bad_config_rejected() {
        let g = small_sbm(0);
        for cfg in [
            TrainConfig { gamma: 1.5, ..TrainConfig::default() },
            TrainConfig { layers: 0, ..TrainConfig::default() },
            TrainConfig { path_length: 1, ..TrainConfig::default() },
            TrainConfig { k_fraction: 0.0, ..TrainConfig::default() },
        ] {
            assert!(train(&g, &cfg).is_err());
        }
    }

    #[test]
    fn config_json_defaults() {
        let cfg: TrainConfig = serde_json::from_str(r#"{"layers": 4, "sampler": "independent"}"#).unwrap();
        assert_eq!(cfg.layers, 4);
        assert_eq!(cfg.sampler, SamplerKind::Independent);
        assert_eq!(cfg.hidden, 16);
        assert!(serde_json::from_str::<TrainConfig>(r#"{"layer": 4}"#).is_err());
    }
}
