//! Shortest-path candidate pools and central-node selection.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{bfs_levels, Graph};
use crate::error::{Error, Result};

/// Pool of potential negatives for one central node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub center: usize,
    /// Sorted, distinct, never the center or one of its neighbours.
    pub members: Vec<usize>,
    pub path_length: usize,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn position(&self, node: usize) -> Option<usize> {
        self.members.binary_search(&node).ok()
    }
}

/// Walk hop distances 2..=P from `center`; at each distance pick one node
/// uniformly and add it together with its neighbourhood. The center and its
/// first-order neighbours are removed at the end. Empty distance shells are
/// skipped and no resampling happens when a pick adds nothing new.
pub fn build_candidate_set<R: Rng + ?Sized>(
    g: &Graph,
    center: usize,
    path_length: usize,
    rng: &mut R,
) -> Result<CandidateSet> {
    if center >= g.num_nodes() {
        return Err(Error::NodeOutOfRange {
            node: center,
            num_nodes: g.num_nodes(),
        });
    }
    if path_length < 2 {
        return Err(Error::InvalidArgument(format!(
            "path length must be at least 2, got {path_length}"
        )));
    }
    let dist = bfs_levels(g, center);
    let mut shells: Vec<Vec<usize>> = vec![Vec::new(); path_length + 1];
    for (&node, &d) in &dist {
        if (2..=path_length).contains(&d) {
            shells[d].push(node);
        }
    }

    let mut pool = BTreeSet::new();
    for shell in &shells[2..] {
        if let Some(&j) = shell.choose(rng) {
            pool.insert(j);
            pool.extend(g.neighbors(j).iter().copied());
        }
    }
    pool.remove(&center);
    for v in g.neighbors(center) {
        pool.remove(v);
    }
    if pool.is_empty() {
        return Err(Error::EmptyCandidateSet(center));
    }
    Ok(CandidateSet {
        center,
        members: pool.into_iter().collect(),
        path_length,
    })
}

/// Uniformly sample ⌈fraction·N⌉ nodes among those whose degree is strictly
/// above the mean degree. Returns the whole pool when it is too small.
/// The result is sorted.
pub fn select_central_nodes<R: Rng + ?Sized>(
    g: &Graph,
    fraction: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "central fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let mean = g.mean_degree();
    let pool: Vec<usize> = (0..g.num_nodes())
        .filter(|&i| g.degree(i) as f64 > mean)
        .collect();
    if pool.is_empty() {
        log::warn!("no node has degree above the mean ({mean:.3}); no central nodes selected");
        return Ok(pool);
    }
    let want = (fraction * g.num_nodes() as f64).ceil() as usize;
    if want >= pool.len() {
        return Ok(pool);
    }
    let mut picked: Vec<usize> = pool.choose_multiple(rng, want).copied().collect();
    picked.sort_unstable();
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    #[test]
    fn path_trace() {
        // Each shell of a path holds a single node, so the trace is forced.
        let g = path(6);
        let s = build_candidate_set(&g, 0, 3, &mut stream(0, "t", &[])).unwrap();
        assert_eq!(s.members, vec![2, 3, 4]);
        assert_eq!(s.path_length, 3);
    }

    #[test]
    fn isolated_node_has_no_candidates() {
        let g = unlabeled(3, &[(1, 2)]);
        assert!(matches!(
            build_candidate_set(&g, 0, 4, &mut stream(0, "t", &[])),
            Err(Error::EmptyCandidateSet(0))
        ));
    }

    #[test]
    fn complete_graph_has_no_candidates() {
        let g = complete(4);
        for i in 0..4 {
            assert!(build_candidate_set(&g, i, 3, &mut stream(0, "t", &[])).is_err());
        }
    }

    #[test]
    fn path_length_two_uses_only_distance_two_pick() {
        let g = path(6);
        let s = build_candidate_set(&g, 0, 2, &mut stream(0, "t", &[])).unwrap();
        assert_eq!(s.members, vec![2, 3]);
    }

    #[test]
    fn path_length_below_two_rejected() {
        assert!(build_candidate_set(&path(4), 0, 1, &mut stream(0, "t", &[])).is_err());
    }

    #[test]
    fn star_selects_hub() {
        let g = star(5);
        let c = select_central_nodes(&g, 0.2, &mut stream(1, "t", &[])).unwrap();
        assert_eq!(c, vec![0]);
    }

    #[test]
    fn regular_graph_yields_no_central_nodes() {
        let g = complete(5);
        assert!(select_central_nodes(&g, 0.5, &mut stream(1, "t", &[])).unwrap().is_empty());
    }

    #[test]
    fn small_pool_returned_whole() {
        // Three hubs of degree 2, mean degree 1.2.
        let g = unlabeled(10, &[(0, 3), (0, 4), (1, 5), (1, 6), (2, 7), (2, 8)]);
        let c = select_central_nodes(&g, 1.0, &mut stream(1, "t", &[])).unwrap();
        assert_eq!(c, vec![0, 1, 2]);
    }

    #[test]
    fn fraction_out_of_range() {
        let g = star(3);
        assert!(select_central_nodes(&g, 0.0, &mut stream(1, "t", &[])).is_err());
        assert!(select_central_nodes(&g, 1.5, &mut stream(1, "t", &[])).is_err());
    }

    proptest! {
        #[test]
        fn candidates_exclude_center_and_neighbours(
            n in 3usize..40,
            raw in proptest::collection::vec((0usize..40, 0usize..40), 1..120),
            p in 2usize..7,
            seed in 0u64..10_000,
        ) {
            let edges: Vec<_> = raw.into_iter().map(|(u, v)| (u % n, v % n)).filter(|(u, v)| u != v).collect();
            let g = unlabeled(n, &edges);
            let max_deg = (0..n).map(|i| g.degree(i)).max().unwrap_or(0);
            let mut rng = stream(seed, "t", &[]);
            for i in 0..n {
                if let Ok(s) = build_candidate_set(&g, i, p, &mut rng) {
                    prop_assert!(!s.members.is_empty());
                    prop_assert!(!s.members.contains(&i));
                    prop_assert!(s.members.iter().all(|&j| !g.has_edge(i, j)));
                    prop_assert!(s.members.windows(2).all(|w| w[0] < w[1]));
                    prop_assert!(s.len() <= (p - 1) * (1 + max_deg));
                }
            }
        }
    }
}
