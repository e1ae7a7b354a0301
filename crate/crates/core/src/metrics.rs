//! Accuracy, cross-layer overlap rates, and mean average distance.

use std::collections::BTreeSet;

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{kmeans, DEFAULT_KMEANS_ITERS};
use crate::dpp::SampleStore;
use crate::error::{Error, Result};
use crate::gnn::predictions;

const ZERO_DISTANCE: f64 = 1e-12;

/// Fraction of `mask` nodes whose argmax logit equals the label.
pub fn accuracy(logits: ArrayView2<f64>, labels: &[i64], mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::Empty("accuracy mask"));
    }
    let pred = predictions(logits);
    let correct = mask
        .iter()
        .filter(|&&i| labels[i] >= 0 && pred[i] == labels[i] as usize)
        .count();
    Ok(correct as f64 / mask.len() as f64)
}

/// Mean and per-transition breakdown of `|A^{l-1} ∩ A^l| / |A^l|` where the
/// sets come from `project(layer, node)`. Pairs with empty `A^l` are skipped.
fn overlap<F>(layers: usize, central: &[usize], project: F) -> Result<(f64, Vec<Option<f64>>)>
where
    F: Fn(usize, usize) -> BTreeSet<usize>,
{
    let mut total = 0.0;
    let mut count = 0usize;
    let mut per_layer = Vec::with_capacity(layers.saturating_sub(1));
    for l in 1..layers {
        let mut layer_total = 0.0;
        let mut layer_count = 0usize;
        for &i in central {
            let cur = project(l, i);
            if cur.is_empty() {
                continue;
            }
            let prev = project(l - 1, i);
            layer_total += prev.intersection(&cur).count() as f64 / cur.len() as f64;
            layer_count += 1;
        }
        per_layer.push((layer_count > 0).then(|| layer_total / layer_count as f64));
        total += layer_total;
        count += layer_count;
    }
    if count == 0 {
        return Err(Error::NoOverlapPairs);
    }
    Ok((total / count as f64, per_layer))
}

/// Node overlap rate between consecutive layers, averaged over every
/// (node, layer) pair with a non-empty sample set.
pub fn ovr_node(store: &SampleStore, central: &[usize]) -> Result<f64> {
    ovr_node_detailed(store, central).map(|(v, _)| v)
}

fn ovr_node_detailed(store: &SampleStore, central: &[usize]) -> Result<(f64, Vec<Option<f64>>)> {
    overlap(store.num_layers(), central, |l, i| store.get(l, i).iter().copied().collect())
}

/// Cluster overlap rate: samples are replaced by their k-means cluster ids,
/// clustering each layer's representations separately. Cluster ids are
/// canonicalized by lowest member node before comparison.
pub fn ovr_cls<R: Rng + ?Sized>(
    store: &SampleStore,
    central: &[usize],
    reps_per_layer: &[Array2<f64>],
    k: usize,
    rng: &mut R,
) -> Result<f64> {
    ovr_cls_detailed(store, central, reps_per_layer, k, rng).map(|(v, _)| v)
}

fn ovr_cls_detailed<R: Rng + ?Sized>(
    store: &SampleStore,
    central: &[usize],
    reps_per_layer: &[Array2<f64>],
    k: usize,
    rng: &mut R,
) -> Result<(f64, Vec<Option<f64>>)> {
    if reps_per_layer.len() != store.num_layers() {
        return Err(Error::InvalidArgument(format!(
            "{} representation layers for {} sample layers",
            reps_per_layer.len(),
            store.num_layers()
        )));
    }
    let clusters = reps_per_layer
        .iter()
        .map(|reps| {
            kmeans(reps.view(), k.min(reps.nrows()), DEFAULT_KMEANS_ITERS, rng).map(|c| canonical_labels(&c.assignment))
        })
        .collect::<Result<Vec<_>>>()?;
    overlap(store.num_layers(), central, |l, i| {
        store.get(l, i).iter().map(|&j| clusters[l][j]).collect()
    })
}

/// Relabel clusters in order of their lowest node id, so that ids from
/// independent clusterings of different layers are comparable.
fn canonical_labels(assignment: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    assignment
        .iter()
        .map(|&c| {
            let next = map.len();
            *map.entry(c).or_insert(next)
        })
        .collect()
}

/// Cluster overlap at one cluster count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOverlap {
    pub multiplier: usize,
    pub k: usize,
    pub ovr: f64,
    pub per_layer: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub ovr_node: f64,
    pub per_layer_node: Vec<Option<f64>>,
    pub clusters: Vec<ClusterOverlap>,
}

impl OverlapReport {
    /// Cluster overlap at `multiplier ×` the class count, if it was computed.
    pub fn ovr_cls(&self, multiplier: usize) -> Option<f64> {
        self.clusters.iter().find(|c| c.multiplier == multiplier).map(|c| c.ovr)
    }
}

/// Node overlap plus cluster overlap at `multiplier × classes` clusters for every multiplier.
pub fn overlap_report<R: Rng + ?Sized>(
    store: &SampleStore,
    central: &[usize],
    reps_per_layer: &[Array2<f64>],
    classes: usize,
    multipliers: &[usize],
    rng: &mut R,
) -> Result<OverlapReport> {
    let (ovr_node, per_layer_node) = ovr_node_detailed(store, central)?;
    let clusters = multipliers
        .iter()
        .map(|&m| {
            let k = (m * classes).max(1);
            ovr_cls_detailed(store, central, reps_per_layer, k, rng).map(|(ovr, per_layer)| ClusterOverlap {
                multiplier: m,
                k,
                ovr,
                per_layer,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OverlapReport {
        ovr_node,
        per_layer_node,
        clusters,
    })
}

/// Mean average cosine distance of the rows, scaled by 100.
///
/// `D_ij = 1 − cos(x_i, x_j)` over ordered pairs `i ≠ j` (cos of a zero row is
/// 0); each row averages its non-zero distances, and the result averages the
/// non-zero row means. Distances below 1e-12 count as zero.
pub fn mad(reps: ArrayView2<f64>) -> f64 {
    let n = reps.nrows();
    let mut unit = reps.to_owned();
    for mut row in unit.axis_iter_mut(Axis(0)) {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let gram = unit.dot(&unit.t());
    let row_means: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut sum = 0.0;
            let mut count = 0usize;
            for j in (0..n).filter(|&j| j != i) {
                let d = 1.0 - gram[[i, j]];
                if d.abs() >= ZERO_DISTANCE {
                    sum += d;
                    count += 1;
                }
            }
            if count == 0 {
                0.0
            } else {
                sum / count as f64
            }
        })
        .collect();
    let nonzero: Vec<f64> = row_means.into_iter().filter(|d| d.abs() >= ZERO_DISTANCE).collect();
    if nonzero.is_empty() {
        return 0.0;
    }
    100.0 * nonzero.iter().sum::<f64>() / nonzero.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use ndarray::array;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn store(layers: Vec<Vec<(usize, Vec<usize>)>>) -> SampleStore {
        SampleStore {
            layers: layers
                .into_iter()
                .map(|l| l.into_iter().collect::<BTreeMap<_, _>>())
                .collect(),
        }
    }

    #[test]
    fn accuracy_cases() {
        let labels = [0, 1, 1, 0];
        let onehot = array![[1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        assert_eq!(accuracy(onehot.view(), &labels, &[0, 1, 2, 3]).unwrap(), 1.0);
        let constant = Array2::<f64>::zeros((4, 2));
        assert_eq!(accuracy(constant.view(), &labels, &[0, 1, 2, 3]).unwrap(), 0.5);
        let one_wrong = array![[1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]];
        assert_eq!(accuracy(one_wrong.view(), &labels, &[0, 1, 2, 3]).unwrap(), 0.75);
        assert!(accuracy(onehot.view(), &labels, &[]).is_err());
    }

    #[test]
    fn node_overlap_cases() {
        let same = store(vec![vec![(0, vec![1, 2])], vec![(0, vec![1, 2])]]);
        assert_eq!(ovr_node(&same, &[0]).unwrap(), 1.0);
        let disjoint = store(vec![vec![(0, vec![1, 2])], vec![(0, vec![3, 4])]]);
        assert_eq!(ovr_node(&disjoint, &[0]).unwrap(), 0.0);
        let half = store(vec![vec![(0, vec![1, 2])], vec![(0, vec![2, 3])]]);
        assert_eq!(ovr_node(&half, &[0]).unwrap(), 0.5);
    }

    #[test]
    fn empty_pairs_are_skipped() {
        let s = store(vec![
            vec![(0, vec![1, 2]), (5, vec![6])],
            vec![(0, vec![2, 3]), (5, vec![])],
        ]);
        assert_eq!(ovr_node(&s, &[0, 5]).unwrap(), 0.5);
        let none = store(vec![vec![(0, vec![1])], vec![]]);
        assert!(matches!(ovr_node(&none, &[0]), Err(Error::NoOverlapPairs)));
    }

    #[test]
    fn single_cluster_overlap_is_one() {
        let s = store(vec![vec![(0, vec![1, 2])], vec![(0, vec![3])]]);
        let reps = vec![Array2::from_shape_fn((5, 2), |(i, j)| (i + j) as f64); 2];
        assert_eq!(ovr_cls(&s, &[0], &reps, 1, &mut stream(0, "t", &[])).unwrap(), 1.0);
    }

    #[test]
    fn per_point_clusters_reduce_to_node_overlap() {
        let s = store(vec![
            vec![(0, vec![1, 2, 3]), (4, vec![5, 6])],
            vec![(0, vec![2, 3, 5]), (4, vec![1])],
        ]);
        let reps: Vec<Array2<f64>> = (0..2)
            .map(|l| Array2::from_shape_fn((7, 3), |(i, j)| ((i * 3 + j + l) as f64 * 1.7).sin() * 10.0))
            .collect();
        let cls = ovr_cls(&s, &[0, 4], &reps, 7, &mut stream(2, "t", &[])).unwrap();
        assert!((cls - ovr_node(&s, &[0, 4]).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn separated_clusters_across_layers() {
        // Layer 0 samples sit in one blob, layer 1 samples in the other.
        let blobs = array![[0.0, 0.0], [0.1, 0.0], [10.0, 10.0], [10.1, 10.0], [5.0, 0.0]];
        let s = store(vec![vec![(4, vec![0, 1])], vec![(4, vec![2, 3])]]);
        let reps = vec![blobs.clone(), blobs];
        let v = ovr_cls(&s, &[4], &reps, 2, &mut stream(0, "t", &[])).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn mad_cases() {
        assert_eq!(mad(array![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]].view()), 0.0);
        assert!((mad(array![[1.0, 0.0], [0.0, 1.0]].view()) - 100.0).abs() < 1e-12);
        // Three unit vectors at 60° to each other.
        let a = 1.0 / 2f64.sqrt();
        let sixty = array![[a, a, 0.0], [a, 0.0, a], [0.0, a, a]];
        assert!((mad(sixty.view()) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rows_are_maximally_distant() {
        let v = mad(array![[0.0, 0.0], [1.0, 0.0]].view());
        assert!((v - 100.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_report_collects_multipliers() {
        let s = store(vec![vec![(0, vec![1, 2])], vec![(0, vec![2, 3])]]);
        let reps = vec![Array2::from_shape_fn((6, 2), |(i, j)| (i * 2 + j) as f64); 2];
        let r = overlap_report(&s, &[0], &reps, 1, &[1, 5], &mut stream(0, "t", &[])).unwrap();
        assert_eq!(r.ovr_node, 0.5);
        assert_eq!(r.ovr_cls(1), Some(1.0));
        assert_eq!(r.clusters[1].k, 5);
        assert_eq!(r.per_layer_node, vec![Some(0.5)]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn mad_ignores_positive_row_scaling(
            rows in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 2..12),
            scales in proptest::collection::vec(0.1f64..10.0, 12),
        ) {
            let n = rows.len();
            let x = Array2::from_shape_fn((n, 3), |(i, j)| rows[i][j]);
            let y = Array2::from_shape_fn((n, 3), |(i, j)| rows[i][j] * scales[i]);
            prop_assert!((mad(x.view()) - mad(y.view())).abs() < 1e-8);
        }

        #[test]
        fn overlap_is_relabeling_invariant(
            sets in proptest::collection::vec(
                (proptest::collection::btree_set(0usize..20, 0..5), proptest::collection::btree_set(0usize..20, 1..5)),
                1..6,
            ),
            shift in 1usize..19,
        ) {
            let central: Vec<usize> = (20..20 + sets.len()).collect();
            let relabel = |v: usize| (v + shift) % 20;
            let build = |f: &dyn Fn(usize) -> usize| {
                let mut s = SampleStore::with_layers(2);
                for (c, (a, b)) in central.iter().zip(&sets) {
                    s.layers[0].insert(*c, a.iter().map(|&v| f(v)).collect());
                    s.layers[1].insert(*c, b.iter().map(|&v| f(v)).collect());
                }
                s
            };
            let base = ovr_node(&build(&|v| v), &central).unwrap();
            let moved = ovr_node(&build(&relabel), &central).unwrap();
            prop_assert_eq!(base, moved);
            prop_assert!((0.0..=1.0).contains(&base));
        }
    }
}
