//! Undirected attributed graphs and the structural routines the samplers need.

mod candidates;
mod generate;
mod io;

use std::collections::{BTreeMap, VecDeque};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use candidates::{build_candidate_set, select_central_nodes, CandidateSet};
pub use generate::{
    build_bottleneck_graph, generate_sbm, random_splits, Bottleneck, SbmParams, SplitRatios,
};
pub use io::{load_dataset_dir, load_graph, save_graph, DatasetPaths};

/// Train/validation/test node index sets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    fn validate(&self, num_nodes: usize) -> Result<()> {
        let mut seen = vec![false; num_nodes];
        for (name, idx) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &i in idx {
                if i >= num_nodes {
                    return Err(Error::NodeOutOfRange { node: i, num_nodes });
                }
                if seen[i] {
                    return Err(Error::InvalidGraph(format!(
                        "node {i} appears twice across masks (found again in {name})"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(())
    }
}

/// Immutable undirected graph with node features, labels and split masks.
///
/// Both directions of every edge are stored; neighbour lists are sorted and
/// contain neither duplicates nor self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    features: Array2<f64>,
    labels: Vec<i64>,
    splits: Splits,
}

impl Graph {
    /// Build a graph from an edge list. Edges are symmetrized and deduplicated;
    /// self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(
        edges: &[(usize, usize)],
        features: Array2<f64>,
        labels: Vec<i64>,
        splits: Splits,
    ) -> Result<Self> {
        let n = features.nrows();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::NodeOutOfRange { node: w, num_nodes: n });
                }
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on node {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        Self::from_adjacency(adjacency, features, labels, splits)
    }

    fn from_adjacency(
        adjacency: Vec<Vec<usize>>,
        features: Array2<f64>,
        labels: Vec<i64>,
        splits: Splits,
    ) -> Result<Self> {
        let n = adjacency.len();
        if features.nrows() != n {
            return Err(Error::InvalidGraph(format!(
                "feature matrix has {} rows for {n} nodes",
                features.nrows()
            )));
        }
        if labels.len() != n {
            return Err(Error::InvalidGraph(format!(
                "{} labels for {n} nodes",
                labels.len()
            )));
        }
        splits.validate(n)?;
        Ok(Self {
            adjacency,
            features,
            labels,
            splits,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.num_nodes() == 0 {
            return 0.0;
        }
        2.0 * self.num_edges() as f64 / self.num_nodes() as f64
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    /// Number of distinct non-negative labels (max label + 1).
    pub fn num_classes(&self) -> usize {
        self.labels
            .iter()
            .filter(|&&l| l >= 0)
            .map(|&l| l as usize + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn splits(&self) -> &Splits {
        &self.splits
    }

    pub fn with_splits(mut self, splits: Splits) -> Result<Self> {
        splits.validate(self.num_nodes())?;
        self.splits = splits;
        Ok(self)
    }

    /// Connected components as sorted node lists, in order of smallest member.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.num_nodes();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut head = 0;
            while head < members.len() {
                let u = members[head];
                head += 1;
                for &v in &self.adjacency[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = id;
                        members.push(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.num_nodes() > 0 && self.connected_components().len() == 1
    }

    /// Subgraph induced by `nodes`, re-indexed densely in the given order.
    /// Labels, features and split membership follow their nodes.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Self> {
        let n = self.num_nodes();
        let mut new_id = vec![usize::MAX; n];
        for (k, &u) in nodes.iter().enumerate() {
            if u >= n {
                return Err(Error::NodeOutOfRange { node: u, num_nodes: n });
            }
            new_id[u] = k;
        }
        let adjacency = nodes
            .iter()
            .map(|&u| {
                let mut nbrs: Vec<usize> = self.adjacency[u]
                    .iter()
                    .filter_map(|&v| (new_id[v] != usize::MAX).then_some(new_id[v]))
                    .collect();
                nbrs.sort_unstable();
                nbrs
            })
            .collect();
        let features = self.features.select(Axis(0), nodes);
        let labels = nodes.iter().map(|&u| self.labels[u]).collect();
        let remap = |idx: &[usize]| -> Vec<usize> {
            idx.iter()
                .filter_map(|&u| (new_id[u] != usize::MAX).then_some(new_id[u]))
                .collect()
        };
        let splits = Splits {
            train: remap(&self.splits.train),
            val: remap(&self.splits.val),
            test: remap(&self.splits.test),
        };
        Self::from_adjacency(adjacency, features, labels, splits)
    }

    /// The largest connected component (ties go to the component with the
    /// smallest node id).
    pub fn largest_component(&self) -> Result<Self> {
        let comps = self.connected_components();
        let best = comps
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.len().cmp(&b.len()).then(ib.cmp(ia)))
            .map(|(i, _)| i)
            .ok_or(Error::Empty("graph has no nodes"))?;
        self.induced_subgraph(&comps[best])
    }

    /// Copy of the graph with `removed` nodes (and their edges) deleted.
    pub fn without_nodes(&self, removed: &[usize]) -> Result<Self> {
        let mut keep = vec![true; self.num_nodes()];
        for &u in removed {
            keep[u] = false;
        }
        let nodes: Vec<usize> = (0..self.num_nodes()).filter(|&u| keep[u]).collect();
        self.induced_subgraph(&nodes)
    }
}

/// Unweighted shortest-path hop distances from `source`. Unreachable nodes are absent.
pub fn bfs_levels(g: &Graph, source: usize) -> BTreeMap<usize, usize> {
    let mut dist = BTreeMap::new();
    dist.insert(source, 0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let d = dist[&u];
        for &v in g.neighbors(u) {
            if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(v) {
                e.insert(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn path_graph_degrees() {
        let g = path(3);
        assert_eq!((g.degree(0), g.degree(1), g.degree(2)), (1, 2, 1));
        assert_eq!(g.num_edges(), 2);
    }

    #[test]
    fn duplicate_and_reversed_edges_collapse() {
        let g = unlabeled(2, &[(0, 1), (1, 0), (0, 1)]);
        assert_eq!(g.num_edges(), 1);
        assert_eq!((g.degree(0), g.degree(1)), (1, 1));
    }

    #[test]
    fn rejects_self_loops_and_bad_ids() {
        let f = Array2::zeros((3, 1));
        assert!(Graph::from_edges(&[(1, 1)], f.clone(), vec![0; 3], Splits::default()).is_err());
        assert!(matches!(
            Graph::from_edges(&[(0, 3)], f, vec![0; 3], Splits::default()),
            Err(Error::NodeOutOfRange { node: 3, .. })
        ));
    }

    #[test]
    fn overlapping_masks_rejected() {
        let splits = Splits {
            train: vec![0],
            val: vec![0],
            test: vec![],
        };
        assert!(Graph::from_edges(&[], Array2::zeros((2, 1)), vec![0; 2], splits).is_err());
    }

    #[test]
    fn bfs_on_path() {
        let d = bfs_levels(&path(4), 0);
        assert_eq!(d.into_iter().collect::<Vec<_>>(), vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
    }

    #[test]
    fn bfs_skips_other_components() {
        let g = unlabeled(3, &[(0, 1)]);
        let d = bfs_levels(&g, 0);
        assert_eq!(d.len(), 2);
        assert!(!d.contains_key(&2));
    }

    #[test]
    fn bfs_from_star_center() {
        let d = bfs_levels(&star(5), 0);
        assert!((1..=5).all(|leaf| d[&leaf] == 1));
    }

    #[test]
    fn induced_subgraph_remaps_masks() {
        let splits = Splits {
            train: vec![0, 3],
            val: vec![1],
            test: vec![2],
        };
        let g = Graph::from_edges(
            &[(0, 1), (1, 2), (2, 3)],
            Array2::from_shape_fn((4, 1), |(i, _)| i as f64),
            vec![0, 1, 2, 3],
            splits,
        )
        .unwrap();
        let sub = g.induced_subgraph(&[3, 2]).unwrap();
        assert_eq!(sub.num_edges(), 1);
        assert_eq!(sub.labels(), &[3, 2]);
        assert_eq!(sub.features()[[0, 0]], 3.0);
        assert_eq!(sub.splits().train, vec![0]);
        assert_eq!(sub.splits().test, vec![1]);
        assert!(sub.splits().val.is_empty());
    }

    fn floyd_warshall(g: &Graph) -> Vec<Vec<Option<usize>>> {
        let n = g.num_nodes();
        let mut d = vec![vec![None; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = Some(0);
            for &j in g.neighbors(i) {
                row[j] = Some(1);
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                        if d[i][j].is_none_or(|c| a + b < c) {
                            d[i][j] = Some(a + b);
                        }
                    }
                }
            }
        }
        d
    }

    proptest! {
        #[test]
        fn bfs_matches_floyd_warshall(
            n in 1usize..30,
            raw in proptest::collection::vec((0usize..30, 0usize..30), 0..80),
        ) {
            let edges: Vec<_> = raw.into_iter()
                .map(|(u, v)| (u % n, v % n))
                .filter(|(u, v)| u != v)
                .collect();
            let g = unlabeled(n, &edges);
            for (u, v) in g.edges() {
                prop_assert!(g.has_edge(v, u));
            }
            let fw = floyd_warshall(&g);
            for src in 0..n {
                let d = bfs_levels(&g, src);
                for (j, expected) in fw[src].iter().enumerate() {
                    prop_assert_eq!(d.get(&j).copied(), *expected);
                }
            }
        }
    }
}
