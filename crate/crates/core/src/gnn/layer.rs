//! Symmetric-normalized propagation with optional negative-sample subtraction.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2, Zip};

use crate::graph::Graph;

/// `(deg̃(i) · deg̃(j))^{-1/2}` with `deg̃ = degree + 1`.
pub fn norm_coeff(g: &Graph, i: usize, j: usize) -> f64 {
    1.0 / (((g.degree(i) + 1) * (g.degree(j) + 1)) as f64).sqrt()
}

/// Negative samples of one layer, keyed by central node.
pub type LayerNegatives = BTreeMap<usize, Vec<usize>>;

/// Row i ← Σ_{j ∈ N(i) ∪ {i}} c_ij · z_j.
pub fn propagate(g: &Graph, z: ArrayView2<f64>) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros(z.raw_dim());
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        row.scaled_add(norm_coeff(g, i, i), &z.row(i));
        for &j in g.neighbors(i) {
            row.scaled_add(norm_coeff(g, i, j), &z.row(j));
        }
    }
    out
}

/// Row i ← Σ_{j̄ ∈ N̄(i)} c_ij̄ · z_j̄, zero for nodes without negatives.
pub fn negative_sum(g: &Graph, z: ArrayView2<f64>, negs: &LayerNegatives) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros(z.raw_dim());
    for (&i, samples) in negs {
        let mut row = out.row_mut(i);
        for &j in samples {
            row.scaled_add(norm_coeff(g, i, j), &z.row(j));
        }
    }
    out
}

/// Plain graph convolution: `propagate(H W)`.
pub fn gcn_layer_forward(h: ArrayView2<f64>, g: &Graph, w: ArrayView2<f64>) -> Array2<f64> {
    propagate(g, h.dot(&w).view())
}

/// Graph convolution minus `μ` times the normalized sum over each node's
/// negative samples. Nodes without negatives get the plain row.
pub fn neg_gcn_layer_forward(
    h: ArrayView2<f64>,
    g: &Graph,
    w: ArrayView2<f64>,
    negs: &LayerNegatives,
    mu: f64,
) -> Array2<f64> {
    let z = h.dot(&w);
    let mut out = propagate(g, z.view());
    subtract_negatives(g, z.view(), negs, mu, &mut out);
    out
}

pub(crate) fn subtract_negatives(
    g: &Graph,
    z: ArrayView2<f64>,
    negs: &LayerNegatives,
    mu: f64,
    out: &mut Array2<f64>,
) {
    if mu == 0.0 || negs.values().all(Vec::is_empty) {
        return;
    }
    let neg = negative_sum(g, z, negs);
    for (&i, samples) in negs {
        if samples.is_empty() {
            continue;
        }
        Zip::from(out.row_mut(i))
            .and(neg.row(i))
            .for_each(|o, &n| *o -= mu * n);
    }
}
