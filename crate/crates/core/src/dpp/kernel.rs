//! Quality/diversity L-ensemble over a candidate set.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::clustering::{candidate_features, community_features, Communities};
use crate::error::Result;
use crate::graph::CandidateSet;

/// Cosine similarity, defined as 0 when either vector has zero norm.
pub fn cosine(u: ArrayView1<f64>, v: ArrayView1<f64>) -> f64 {
    let nu = u.dot(&u).sqrt();
    let nv = v.dot(&v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    u.dot(&v) / (nu * nv)
}

/// How unlike the center a candidate is, scaled by how typical the
/// candidate pool is of the center's community:
/// `cos(a_i, b_i) · cos(a_i, a_j)`.
pub fn quality_term(a_i: ArrayView1<f64>, b_i: ArrayView1<f64>, a_j: ArrayView1<f64>) -> f64 {
    cosine(a_i, b_i) * cosine(a_i, a_j)
}

/// Pairwise similarity `cos(h_j, a_j') · cos(a_j, h_j') · exp(cos(h_j, h_j') - 1)`.
pub fn diversity_term(
    h_j: ArrayView1<f64>,
    h_jp: ArrayView1<f64>,
    a_j: ArrayView1<f64>,
    a_jp: ArrayView1<f64>,
) -> f64 {
    cosine(h_j, a_jp) * cosine(a_j, h_jp) * (cosine(h_j, h_jp) - 1.0).exp()
}

/// Symmetric L-ensemble indexed by `members` (rows/cols in member order).
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub members: Vec<usize>,
    pub matrix: Array2<f64>,
}

/// Per-layer state shared by every kernel built from the same representations.
pub struct KernelContext<'a> {
    reps: ArrayView2<'a, f64>,
    communities: &'a Communities,
    community_features: Array2<f64>,
}

impl<'a> KernelContext<'a> {
    pub fn new(reps: ArrayView2<'a, f64>, communities: &'a Communities) -> Result<Self> {
        let community_features = community_features(reps, communities)?;
        Ok(Self {
            reps,
            communities,
            community_features,
        })
    }

    pub fn reps(&self) -> ArrayView2<'a, f64> {
        self.reps
    }

    fn community_of(&self, node: usize) -> ArrayView1<'_, f64> {
        self.community_features.row(self.communities.of(node))
    }
}

/// `L[j][j'] = q_j · φ_jᵀφ_j' · q_j'`, symmetrized as (L + Lᵀ)/2.
pub fn build_kernel(ctx: &KernelContext<'_>, s: &CandidateSet) -> Result<Kernel> {
    let b_i = candidate_features(ctx.reps, s)?;
    let a_i = ctx.community_of(s.center);
    let quality: Array1<f64> = s
        .members
        .iter()
        .map(|&j| quality_term(a_i, b_i.view(), ctx.community_of(j)))
        .collect();
    let n = s.members.len();
    let mut l = Array2::<f64>::zeros((n, n));
    for (x, &j) in s.members.iter().enumerate() {
        for (y, &jp) in s.members.iter().enumerate() {
            let div = diversity_term(
                ctx.reps.row(j),
                ctx.reps.row(jp),
                ctx.community_of(j),
                ctx.community_of(jp),
            );
            l[[x, y]] = quality[x] * div * quality[y];
        }
    }
    let sym = (&l + &l.t()) * 0.5;
    Ok(Kernel {
        members: s.members.clone(),
        matrix: sym,
    })
}
