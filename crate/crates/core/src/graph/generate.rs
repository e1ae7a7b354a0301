//! Synthetic graphs: planted-partition fixtures and single-bridge bottleneck graphs.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Graph, Splits};
use crate::clustering::{fluid_communities, DEFAULT_FLUID_ITERS};
use crate::error::{Error, Result};

const SBM_CONNECT_TRIES: usize = 20;
const SBM_FEATURE_NOISE: f64 = 0.1;

/// Fraction of nodes put in the train and validation masks; the rest is test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { train: 0.2, val: 0.2 }
    }
}

/// Random disjoint train/val/test masks covering every node.
pub fn random_splits<R: Rng + ?Sized>(
    num_nodes: usize,
    ratios: SplitRatios,
    rng: &mut R,
) -> Result<Splits> {
    let ok = |r: f64| (0.0..=1.0).contains(&r);
    if !ok(ratios.train) || !ok(ratios.val) || ratios.train + ratios.val > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "split ratios train={} val={} do not fit in [0, 1]",
            ratios.train, ratios.val
        )));
    }
    let mut order: Vec<usize> = (0..num_nodes).collect();
    order.shuffle(rng);
    let n_train = (ratios.train * num_nodes as f64).round() as usize;
    let n_val = ((ratios.val * num_nodes as f64).round() as usize).min(num_nodes - n_train);
    let sorted = |s: &[usize]| {
        let mut v = s.to_vec();
        v.sort_unstable();
        v
    };
    Ok(Splits {
        train: sorted(&order[..n_train]),
        val: sorted(&order[n_train..n_train + n_val]),
        test: sorted(&order[n_train + n_val..]),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub blocks: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    #[serde(default)]
    pub splits: SplitRatios,
}

impl SbmParams {
    /// Six planted blocks of 50 nodes.
    pub fn six_block_fixture() -> Self {
        Self {
            blocks: vec![50; 6],
            p_in: 0.2,
            p_out: 0.01,
            feature_dim: 6,
            splits: SplitRatios::default(),
        }
    }

    /// Two planted blocks of 100 nodes; a natural base for the bottleneck construction.
    pub fn two_block_fixture() -> Self {
        Self {
            blocks: vec![100; 2],
            p_in: 0.2,
            p_out: 0.01,
            feature_dim: 2,
            splits: SplitRatios::default(),
        }
    }
}

/// Stochastic block model with labels equal to block ids and features equal
/// to the one-hot block id plus N(0, 0.1²) noise. Draws are repeated until the
/// graph is connected (at most 20 attempts); the largest connected component
/// of the last draw is returned.
pub fn generate_sbm<R: Rng + ?Sized>(params: &SbmParams, rng: &mut R) -> Result<Graph> {
    let prob_ok = |p: f64| (0.0..=1.0).contains(&p);
    if !prob_ok(params.p_in) || !prob_ok(params.p_out) {
        return Err(Error::InvalidArgument(format!(
            "edge probabilities must lie in [0, 1], got p_in={} p_out={}",
            params.p_in, params.p_out
        )));
    }
    if params.feature_dim < params.blocks.len() {
        return Err(Error::InvalidArgument(format!(
            "feature_dim {} cannot hold a one-hot code for {} blocks",
            params.feature_dim,
            params.blocks.len()
        )));
    }
    let block_of: Vec<usize> = params
        .blocks
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = block_of.len();
    if n == 0 {
        return Err(Error::Empty("stochastic block model has no nodes"));
    }
    let noise = Normal::new(0.0, SBM_FEATURE_NOISE).expect("valid normal");

    let mut graph = None;
    for attempt in 0..SBM_CONNECT_TRIES {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                let p = if block_of[u] == block_of[v] {
                    params.p_in
                } else {
                    params.p_out
                };
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        let features = Array2::from_shape_fn((n, params.feature_dim), |(i, j)| {
            f64::from(u8::from(block_of[i] == j)) + noise.sample(rng)
        });
        let labels = block_of.iter().map(|&b| b as i64).collect();
        let g = Graph::from_edges(&edges, features, labels, Splits::default())?;
        let connected = g.is_connected();
        graph = Some(g);
        if connected {
            break;
        }
        log::debug!("sbm draw {attempt} disconnected, retrying");
    }
    let g = graph.expect("at least one attempt").largest_component()?;
    let splits = random_splits(g.num_nodes(), params.splits, rng)?;
    g.with_splits(splits)
}

/// A graph whose largest component has exactly one edge between communities.
#[derive(Debug, Clone)]
pub struct Bottleneck {
    pub graph: Graph,
    /// Community of every node of `graph`, carried over from the partition of the input.
    pub communities: Vec<usize>,
    /// Node ids of the input graph that survived, indexed by new node id.
    pub kept: Vec<usize>,
    /// The single remaining inter-community edge, in new node ids.
    pub bridge: (usize, usize),
}

fn inter_edges(g: &Graph, alive: &[bool], comm: &[usize]) -> Vec<(usize, usize)> {
    g.edges()
        .filter(|&(u, v)| alive[u] && alive[v] && comm[u] != comm[v])
        .collect()
}

/// Partition with fluid communities, then delete nodes incident to
/// inter-community edges until a single such edge remains, and keep the
/// largest connected component of what is left.
///
/// At each step the linking node with the most inter-community edges is
/// deleted (lowest id on ties), skipping any node whose removal would leave
/// no inter-community edge at all.
pub fn build_bottleneck_graph<R: Rng + ?Sized>(
    g: &Graph,
    num_communities: usize,
    rng: &mut R,
) -> Result<Bottleneck> {
    if num_communities < 2 {
        return Err(Error::InvalidArgument(format!(
            "bottleneck construction needs at least 2 communities, got {num_communities}"
        )));
    }
    let comm = fluid_communities(g, num_communities, DEFAULT_FLUID_ITERS, rng)?;
    let comm = comm.assignment;
    let n = g.num_nodes();
    let mut alive = vec![true; n];
    let mut removed = Vec::new();

    loop {
        let inter = inter_edges(g, &alive, &comm);
        if inter.len() <= 1 {
            if inter.is_empty() {
                return Err(Error::DegenerateBottleneck(
                    "no inter-community edge in the input partition".into(),
                ));
            }
            break;
        }
        let mut inter_deg = vec![0usize; n];
        for &(u, v) in &inter {
            inter_deg[u] += 1;
            inter_deg[v] += 1;
        }
        let victim = (0..n)
            .filter(|&u| inter_deg[u] > 0 && inter_deg[u] < inter.len())
            .max_by(|&a, &b| inter_deg[a].cmp(&inter_deg[b]).then(b.cmp(&a)))
            .expect("two distinct edges always have an endpoint not shared by both");
        alive[victim] = false;
        removed.push(victim);
    }

    let remaining = g.without_nodes(&removed)?;
    let survivors: Vec<usize> = (0..n).filter(|&u| alive[u]).collect();
    let comps = remaining.connected_components();
    let largest = comps
        .iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .ok_or(Error::DegenerateBottleneck("every node was deleted".into()))?;
    let kept: Vec<usize> = largest.iter().map(|&k| survivors[k]).collect();
    let graph = remaining.induced_subgraph(largest)?;
    let communities: Vec<usize> = kept.iter().map(|&u| comm[u]).collect();

    if graph.num_nodes() < 2 * num_communities {
        return Err(Error::DegenerateBottleneck(format!(
            "only {} nodes left for {num_communities} communities",
            graph.num_nodes()
        )));
    }
    let bridges: Vec<(usize, usize)> = graph
        .edges()
        .filter(|&(u, v)| communities[u] != communities[v])
        .collect();
    if bridges.len() != 1 {
        return Err(Error::DegenerateBottleneck(format!(
            "largest component has {} inter-community edges",
            bridges.len()
        )));
    }
    Ok(Bottleneck {
        graph,
        communities,
        kept,
        bridge: bridges[0],
    })
}
