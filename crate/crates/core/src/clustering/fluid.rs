//! Fluid Communities with deterministic tie-breaking.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use super::Communities;
use crate::error::{Error, Result};
use crate::graph::Graph;

pub const DEFAULT_FLUID_ITERS: usize = 100;

const UNASSIGNED: usize = usize::MAX;
const TIE_TOL: f64 = 1e-9;

/// Partition a connected graph into `q` communities.
///
/// `q` random seed nodes start with density 1. Every sweep visits the nodes
/// in a fresh random order; a node adopts the community with the largest
/// summed density over itself and its neighbours, where a community of size
/// s has density 1/s. On ties the current community is kept, otherwise the
/// lowest community id wins. Sweeps stop at a fixpoint or after `max_iter`;
/// nodes still unassigned at that point join the community of the nearest
/// assigned node (breadth-first).
pub fn fluid_communities<R: Rng + ?Sized>(
    g: &Graph,
    q: usize,
    max_iter: usize,
    rng: &mut R,
) -> Result<Communities> {
    let n = g.num_nodes();
    if q == 0 || q > n {
        return Err(Error::InvalidArgument(format!(
            "community count {q} must lie in 1..={n}"
        )));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if q == 1 {
        return Ok(Communities {
            num_communities: 1,
            assignment: vec![0; n],
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut assignment = vec![UNASSIGNED; n];
    let mut sizes = vec![0usize; q];
    for (c, &seed) in order[..q].iter().enumerate() {
        assignment[seed] = c;
        sizes[c] = 1;
    }

    let mut score = vec![0.0f64; q];
    let mut touched = Vec::with_capacity(q);
    for _ in 0..max_iter {
        let mut changed = false;
        order.shuffle(rng);
        for &v in &order {
            touched.clear();
            for &u in std::iter::once(&v).chain(g.neighbors(v)) {
                let c = assignment[u];
                if c == UNASSIGNED {
                    continue;
                }
                if score[c] == 0.0 {
                    touched.push(c);
                }
                score[c] += 1.0 / sizes[c] as f64;
            }
            if touched.is_empty() {
                continue;
            }
            let best = touched.iter().map(|&c| score[c]).fold(f64::MIN, f64::max);
            let current = assignment[v];
            let keeps = current != UNASSIGNED && score[current] >= best - TIE_TOL;
            if !keeps {
                let target = touched
                    .iter()
                    .copied()
                    .filter(|&c| score[c] >= best - TIE_TOL)
                    .min()
                    .expect("at least one community attains the max");
                if current != UNASSIGNED {
                    sizes[current] -= 1;
                }
                sizes[target] += 1;
                assignment[v] = target;
                changed = true;
            }
            for &c in &touched {
                score[c] = 0.0;
            }
        }
        if !changed && !assignment.contains(&UNASSIGNED) {
            break;
        }
    }

    // Propagate outward from assigned nodes if sweeps ran out before covering the graph.
    if assignment.contains(&UNASSIGNED) {
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| assignment[v] != UNASSIGNED).collect();
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if assignment[v] == UNASSIGNED {
                    assignment[v] = assignment[u];
                    queue.push_back(v);
                }
            }
        }
    }

    Ok(Communities {
        num_communities: q,
        assignment,
    })
}

/// Fluid communities on a possibly disconnected graph: each connected
/// component is partitioned on its own into a share of `q` proportional to
/// its size (at least one community each, at most its node count).
pub fn fluid_communities_by_component<R: Rng + ?Sized>(
    g: &Graph,
    q: usize,
    max_iter: usize,
    rng: &mut R,
) -> Result<Communities> {
    let n = g.num_nodes();
    if q == 0 || q > n {
        return Err(Error::InvalidArgument(format!(
            "community count {q} must lie in 1..={n}"
        )));
    }
    let components = g.connected_components();
    if components.len() == 1 {
        return fluid_communities(g, q, max_iter, rng);
    }
    let mut assignment = vec![0; n];
    let mut offset = 0;
    for nodes in &components {
        let share = ((q * nodes.len()) as f64 / n as f64).round() as usize;
        let share = share.clamp(1, nodes.len());
        let sub = g.induced_subgraph(nodes)?;
        let local = fluid_communities(&sub, share, max_iter, rng)?;
        for (&v, &c) in nodes.iter().zip(&local.assignment) {
            assignment[v] = offset + c;
        }
        offset += share;
    }
    Ok(Communities {
        num_communities: offset,
        assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    #[test]
    fn bridged_cliques_split_along_the_bridge() {
        let g = two_cliques(4, &[(3, 4)]);
        for seed in 0..20 {
            let c = fluid_communities(&g, 2, DEFAULT_FLUID_ITERS, &mut stream(seed, "t", &[])).unwrap();
            let a = &c.assignment;
            // Assortative: each clique lies in a single community, and the two differ.
            assert!(a[..4].iter().all(|&x| x == a[0]), "seed {seed}: {a:?}");
            assert!(a[4..].iter().all(|&x| x == a[4]), "seed {seed}: {a:?}");
            assert_ne!(a[0], a[4]);
        }
    }

    #[test]
    fn single_community() {
        let c = fluid_communities(&path(5), 1, 10, &mut stream(0, "t", &[])).unwrap();
        assert_eq!(c.assignment, vec![0; 5]);
    }

    #[test]
    fn one_community_per_node() {
        let g = complete(5);
        let c = fluid_communities(&g, 5, 50, &mut stream(0, "t", &[])).unwrap();
        let mut seen = c.assignment.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn disconnected_rejected() {
        let g = unlabeled(4, &[(0, 1), (2, 3)]);
        assert!(matches!(
            fluid_communities(&g, 2, 10, &mut stream(0, "t", &[])),
            Err(Error::Disconnected)
        ));
        assert!(fluid_communities(&path(3), 4, 10, &mut stream(0, "t", &[])).is_err());
    }

    #[test]
    fn long_path_is_covered_even_with_few_sweeps() {
        let g = path(200);
        let c = fluid_communities(&g, 3, 1, &mut stream(4, "t", &[])).unwrap();
        assert!(c.sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn components_are_partitioned_separately() {
        let g = unlabeled(9, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (6, 7)]);
        let c = fluid_communities_by_component(&g, 3, DEFAULT_FLUID_ITERS, &mut stream(1, "t", &[])).unwrap();
        assert!(c.sizes().iter().all(|&s| s > 0));
        // No community spans two components.
        assert!(c.assignment[..6].iter().all(|x| !c.assignment[6..].contains(x)));
        assert_ne!(c.assignment[6], c.assignment[8]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn covers_all_nodes_without_empty_communities(
            n in 4usize..40,
            extra in proptest::collection::vec((0usize..40, 0usize..40), 0..60),
            q in 2usize..5,
            seed in 0u64..1000,
        ) {
            // Random spanning tree plus extra edges keeps the graph connected.
            let mut edges: Vec<_> = (1..n).map(|i| ((i * 7919 + seed as usize) % i, i)).collect();
            edges.extend(extra.into_iter().map(|(u, v)| (u % n, v % n)).filter(|(u, v)| u != v));
            let g = unlabeled(n, &edges);
            let q = q.min(n);
            let a = fluid_communities(&g, q, DEFAULT_FLUID_ITERS, &mut stream(seed, "t", &[])).unwrap();
            let b = fluid_communities(&g, q, DEFAULT_FLUID_ITERS, &mut stream(seed, "t", &[])).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.assignment.iter().all(|&c| c < q));
            prop_assert!(a.sizes().iter().all(|&s| s > 0));
        }
    }
}
