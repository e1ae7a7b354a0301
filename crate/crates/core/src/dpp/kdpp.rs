//! Spectral k-DPP sampler.

use ndarray::Array1;
use rand::Rng;

use super::esp::esp;
use super::EigenBasis;
use crate::error::{Error, Result};

const RESIDUAL_DROP: f64 = 1e-10;

/// Phase 1: choose which eigenvectors take part, scanning from the last
/// eigenvalue down and keeping `v` with probability `λ_v e[l-1][v-1] / e[l][v]`.
fn select_eigenvectors<R: Rng + ?Sized>(basis: &EigenBasis, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    let table = esp(basis.eigenvalues.view(), k)?;
    let mut chosen = Vec::with_capacity(k);
    let mut l = k;
    for v in (1..=basis.size()).rev() {
        if l == 0 {
            break;
        }
        let denom = table.get(l, v);
        if denom <= 0.0 {
            continue;
        }
        let p = basis.eigenvalues[v - 1] * table.get(l - 1, v - 1) / denom;
        if rng.random::<f64>() < p {
            chosen.push(v - 1);
            l -= 1;
        }
    }
    if l != 0 {
        return Err(Error::RankDeficient {
            k,
            positive: basis.positive_count(),
        });
    }
    Ok(chosen)
}

/// Phase 2: draw items one at a time with probability proportional to the
/// squared row mass of the current vector set, then restrict the set to the
/// part orthogonal to the drawn coordinate. Returns row indices in draw order.
fn draw_items<R: Rng + ?Sized>(mut vecs: Vec<Array1<f64>>, rng: &mut R) -> Result<Vec<usize>> {
    let n = vecs.first().map_or(0, Array1::len);
    let mut picked = Vec::with_capacity(vecs.len());
    while !vecs.is_empty() {
        let mut mass = vec![0.0f64; n];
        for v in &vecs {
            for (m, x) in mass.iter_mut().zip(v.iter()) {
                *m += x * x;
            }
        }
        for &i in &picked {
            mass[i] = 0.0;
        }
        let total: f64 = mass.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroProbability);
        }
        let mut target = rng.random::<f64>() * total;
        let mut item = mass.iter().rposition(|&m| m > 0.0).expect("total > 0");
        for (i, &m) in mass.iter().enumerate() {
            if m > 0.0 && target < m {
                item = i;
                break;
            }
            target -= m;
        }
        picked.push(item);

        // Eliminate coordinate `item` using the vector with the largest entry there.
        let pivot = (0..vecs.len())
            .max_by(|&a, &b| vecs[a][item].abs().total_cmp(&vecs[b][item].abs()))
            .expect("non-empty");
        let w = vecs.swap_remove(pivot);
        let w_item = w[item];
        let mut rest: Vec<Array1<f64>> = Vec::with_capacity(vecs.len());
        for mut v in vecs.drain(..) {
            if w_item != 0.0 {
                let f = v[item] / w_item;
                v.scaled_add(-f, &w);
            }
            v[item] = 0.0;
            rest.push(v);
        }

        // Modified Gram–Schmidt, dropping vectors that collapse.
        let mut basis: Vec<Array1<f64>> = Vec::with_capacity(rest.len());
        for mut v in rest {
            for u in &basis {
                let d = u.dot(&v);
                v.scaled_add(-d, u);
            }
            let norm = v.dot(&v).sqrt();
            if norm >= RESIDUAL_DROP {
                v /= norm;
                basis.push(v);
            }
        }
        vecs = basis;
    }
    Ok(picked)
}

/// Draw a size-`k` subset; returns row indices into the basis, sorted.
///
/// Phase 1 always uses the stored (original) eigenvalues, even when the
/// vectors have been squeezed. Fewer than `k` rows can come back only when
/// squeezing collapsed part of the selected span.
pub fn sample_kdpp_rows<R: Rng + ?Sized>(basis: &EigenBasis, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    let s = basis.size();
    if k == 0 || k > s {
        return Err(Error::InvalidArgument(format!(
            "sample size {k} must lie in 1..={s}"
        )));
    }
    let positive = basis.positive_count();
    if k > positive {
        return Err(Error::RankDeficient { k, positive });
    }
    let chosen = select_eigenvectors(basis, k, rng)?;
    let vecs = chosen
        .iter()
        .map(|&c| basis.vectors.column(c).to_owned())
        .collect();
    let mut rows = draw_items(vecs, rng)?;
    rows.sort_unstable();
    Ok(rows)
}

/// Draw a size-`k` subset and return the member node ids, sorted.
pub fn sample_kdpp<R: Rng + ?Sized>(basis: &EigenBasis, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    let rows = sample_kdpp_rows(basis, k, rng)?;
    let mut nodes: Vec<usize> = rows.into_iter().map(|r| basis.members[r]).collect();
    nodes.sort_unstable();
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::super::{eig_sym, Kernel};
    use super::*;
    use crate::rng::stream;
    use ndarray::{array, Array2};
    use std::collections::HashMap;

    fn basis(m: Array2<f64>) -> EigenBasis {
        eig_sym(&Kernel {
            members: (10..10 + m.nrows()).collect(),
            matrix: m,
        })
        .unwrap()
    }

    #[test]
    fn identity_pairs_are_uniform() {
        let b = basis(Array2::eye(4));
        let mut rng = stream(1, "t", &[]);
        let draws = 200_000;
        let mut freq: HashMap<Vec<usize>, usize> = HashMap::new();
        for _ in 0..draws {
            *freq.entry(sample_kdpp_rows(&b, 2, &mut rng).unwrap()).or_default() += 1;
        }
        assert_eq!(freq.len(), 6);
        for (set, count) in freq {
            let p = count as f64 / draws as f64;
            assert!((p - 1.0 / 6.0).abs() < 0.01, "{set:?}: {p}");
        }
    }

    #[test]
    fn diagonal_singletons_follow_weights() {
        let b = basis(array![[2.0, 0.0], [0.0, 1.0]]);
        let mut rng = stream(2, "t", &[]);
        let draws = 200_000;
        let first = (0..draws)
            .filter(|_| sample_kdpp_rows(&b, 1, &mut rng).unwrap() == vec![0])
            .count();
        let p = first as f64 / draws as f64;
        assert!((p - 2.0 / 3.0).abs() < 0.01, "{p}");
    }

    #[test]
    fn returns_member_ids() {
        let b = basis(Array2::eye(3));
        let s = sample_kdpp(&b, 3, &mut stream(0, "t", &[])).unwrap();
        assert_eq!(s, vec![10, 11, 12]);
    }

    #[test]
    fn rank_deficiency_reported() {
        let b = basis(array![[1.0, 1.0], [1.0, 1.0]]);
        assert!(matches!(
            sample_kdpp(&b, 2, &mut stream(0, "t", &[])),
            Err(Error::RankDeficient { k: 2, positive: 1 })
        ));
        assert!(sample_kdpp(&b, 0, &mut stream(0, "t", &[])).is_err());
    }

    #[test]
    fn same_seed_same_sample() {
        let b = basis(array![[2.0, 0.5, 0.1], [0.5, 1.0, 0.3], [0.1, 0.3, 1.5]]);
        let a = sample_kdpp(&b, 2, &mut stream(9, "t", &[])).unwrap();
        let c = sample_kdpp(&b, 2, &mut stream(9, "t", &[])).unwrap();
        assert_eq!(a, c);
    }
}
