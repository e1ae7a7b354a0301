//! Dense multi-layer GCN with negative-sample message passing and manual
//! reverse-mode gradients.

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;

use super::layer::{negative_sum, propagate, subtract_negatives, LayerNegatives};
use crate::dpp::SampleStore;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Layer weights plus the shared negative-sample weight μ.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub weights: Vec<Array2<f64>>,
    pub mu: f64,
}

impl ModelParams {
    /// Glorot-uniform weights for `input → hidden × (layers − 1) → classes`.
    pub fn init<R: Rng + ?Sized>(
        input: usize,
        hidden: usize,
        classes: usize,
        layers: usize,
        mu: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if layers == 0 {
            return Err(Error::InvalidArgument("a model needs at least one layer".into()));
        }
        let mut dims = vec![input];
        dims.extend(std::iter::repeat_n(hidden, layers - 1));
        dims.push(classes);
        let weights = dims
            .windows(2)
            .map(|d| {
                let bound = (6.0 / (d[0] + d[1]) as f64).sqrt();
                Array2::from_shape_fn((d[0], d[1]), |_| rng.random_range(-bound..=bound))
            })
            .collect();
        Ok(Self { weights, mu })
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            weights: self.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            mu: 0.0,
        }
    }

    fn check_shapes(&self, input: usize) -> Result<()> {
        let mut prev = input;
        for (l, w) in self.weights.iter().enumerate() {
            if w.nrows() != prev {
                return Err(Error::InvalidArgument(format!(
                    "layer {l} expects {} inputs but receives {prev}",
                    w.nrows()
                )));
            }
            prev = w.ncols();
        }
        Ok(())
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    /// Input to each layer (the features for layer 0).
    pub inputs: Vec<Array2<f64>>,
    /// `H W` per layer.
    pub transformed: Vec<Array2<f64>>,
    /// Normalized negative sums per layer, present only where negatives were used.
    pub negative_sums: Vec<Option<Array2<f64>>>,
    /// Pre-activation output per layer; the last one holds the logits.
    pub outputs: Vec<Array2<f64>>,
    pub store: Option<SampleStore>,
    pub mu: f64,
}

impl ForwardCache {
    pub fn logits(&self) -> &Array2<f64> {
        self.outputs.last().expect("at least one layer")
    }

    /// Representation emitted by every layer: ReLU output for hidden layers, logits last.
    pub fn layer_representations(&self) -> Vec<Array2<f64>> {
        let last = self.outputs.len() - 1;
        self.outputs
            .iter()
            .enumerate()
            .map(|(l, o)| if l == last { o.clone() } else { relu(o.view()) })
            .collect()
    }
}

pub(crate) fn relu(x: ArrayView2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

fn layer_negatives(store: Option<&SampleStore>, l: usize) -> Option<&LayerNegatives> {
    store
        .and_then(|s| s.layers.get(l))
        .filter(|m| m.values().any(|v| !v.is_empty()))
}

/// One layer of the forward pass, recording what the backward pass needs.
pub(crate) fn layer_step(
    g: &Graph,
    h: ArrayView2<f64>,
    w: ArrayView2<f64>,
    negs: Option<&LayerNegatives>,
    mu: f64,
) -> (Array2<f64>, Array2<f64>, Option<Array2<f64>>) {
    let z = h.dot(&w);
    let mut out = propagate(g, z.view());
    let neg = negs.map(|n| {
        subtract_negatives(g, z.view(), n, mu, &mut out);
        negative_sum(g, z.view(), n)
    });
    (z, out, neg)
}

/// Run all layers. `store = None` is the plain GCN path without any
/// negative-sample term; ReLU sits between layers and the last layer is linear.
pub fn forward(params: &ModelParams, g: &Graph, store: Option<&SampleStore>) -> Result<ForwardCache> {
    let mut cache = forward_with(params, g, |l, _| Ok(layer_negatives(store, l).cloned()))?;
    cache.store = store.cloned();
    Ok(cache)
}

/// Forward pass where layer `l`'s negatives are chosen by `negatives(l, H)`
/// from the representation `H` entering that layer. The chosen sets are
/// collected into the cache's store whenever any layer returns `Some`.
pub fn forward_with<F>(params: &ModelParams, g: &Graph, mut negatives: F) -> Result<ForwardCache>
where
    F: FnMut(usize, ArrayView2<f64>) -> Result<Option<LayerNegatives>>,
{
    params.check_shapes(g.feature_dim())?;
    let layers = params.num_layers();
    let mut cache = ForwardCache {
        inputs: Vec::with_capacity(layers),
        transformed: Vec::with_capacity(layers),
        negative_sums: Vec::with_capacity(layers),
        outputs: Vec::with_capacity(layers),
        store: None,
        mu: params.mu,
    };
    let mut store = SampleStore::with_layers(layers);
    let mut sampled = false;
    let mut h = g.features().clone();
    for (l, w) in params.weights.iter().enumerate() {
        let negs = negatives(l, h.view())?;
        if let Some(n) = negs {
            store.layers[l] = n;
            sampled = true;
        }
        let active = Some(&store.layers[l]).filter(|m| m.values().any(|v| !v.is_empty()));
        let (z, out, neg) = layer_step(g, h.view(), w.view(), active, params.mu);
        let next = if l + 1 < layers { relu(out.view()) } else { Array2::zeros((0, 0)) };
        cache.inputs.push(std::mem::replace(&mut h, next));
        cache.transformed.push(z);
        cache.negative_sums.push(neg);
        cache.outputs.push(out);
    }
    if sampled {
        cache.store = Some(store);
    }
    Ok(cache)
}

/// Nodes of `mask` that carry a label.
fn labeled<'a>(labels: &'a [i64], mask: &'a [usize]) -> impl Iterator<Item = (usize, usize)> + 'a {
    mask.iter()
        .filter(move |&&i| labels[i] >= 0)
        .map(move |&i| (i, labels[i] as usize))
}

fn log_softmax_row(row: ndarray::ArrayView1<f64>) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    row.iter().map(|x| x - lse).collect()
}

/// Mean softmax cross-entropy over the labeled nodes of `mask` (0 when none).
pub fn cross_entropy(logits: ArrayView2<f64>, labels: &[i64], mask: &[usize]) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for (i, y) in labeled(labels, mask) {
        total -= log_softmax_row(logits.row(i))[y];
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Exact gradients of [`cross_entropy`] over `mask` with respect to every
/// weight matrix and μ. Negative-sample sets are treated as constants.
pub fn backward(
    params: &ModelParams,
    g: &Graph,
    cache: &ForwardCache,
    labels: &[i64],
    mask: &[usize],
) -> ModelParams {
    let mut grads = params.zeros_like();
    let layers = params.num_layers();
    let logits = cache.logits();
    let nodes: Vec<(usize, usize)> = labeled(labels, mask).collect();
    if nodes.is_empty() {
        return grads;
    }
    let scale = 1.0 / nodes.len() as f64;
    let mut d_out = Array2::<f64>::zeros(logits.raw_dim());
    for &(i, y) in &nodes {
        let probs: Vec<f64> = log_softmax_row(logits.row(i)).into_iter().map(f64::exp).collect();
        for (c, p) in probs.into_iter().enumerate() {
            d_out[[i, c]] += scale * (p - if c == y { 1.0 } else { 0.0 });
        }
    }

    for l in (0..layers).rev() {
        let negs = layer_negatives(cache.store.as_ref(), l);
        // out = Â z − μ · neg(z); Â is symmetric.
        let mut d_z = propagate(g, d_out.view());
        if let (Some(negs), Some(neg_sum)) = (negs, &cache.negative_sums[l]) {
            grads.mu -= (&d_out * neg_sum).sum();
            if cache.mu != 0.0 {
                for (&i, samples) in negs {
                    for &j in samples {
                        let c = cache.mu * super::layer::norm_coeff(g, i, j);
                        let src = d_out.row(i).to_owned();
                        d_z.row_mut(j).scaled_add(-c, &src);
                    }
                }
            }
        }
        grads.weights[l] = cache.inputs[l].t().dot(&d_z);
        if l > 0 {
            let mut d_h = d_z.dot(&params.weights[l].t());
            let pre = &cache.outputs[l - 1];
            ndarray::Zip::from(&mut d_h)
                .and(pre)
                .for_each(|d, &p| {
                    if p <= 0.0 {
                        *d = 0.0;
                    }
                });
            d_out = d_h;
        }
    }
    grads
}

/// Row-wise argmax with ties to the lowest class id.
pub fn predictions(logits: ArrayView2<f64>) -> Vec<usize> {
    logits
        .axis_iter(Axis(0))
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Splits;
    use crate::rng::stream;
    use ndarray::array;

    fn fixture() -> Graph {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3), (5, 0)];
        let feats = Array2::from_shape_fn((6, 3), |(i, j)| ((i * 3 + j) as f64 * 0.7).cos());
        Graph::from_edges(
            &edges,
            feats,
            vec![0, 1, 2, 0, 1, -1],
            Splits {
                train: vec![0, 1, 2, 3, 5],
                val: vec![4],
                test: vec![],
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_weights_give_uniform_loss() {
        let g = fixture();
        let mut p = ModelParams::init(3, 4, 3, 2, 0.5, &mut stream(0, "t", &[])).unwrap();
        p.weights.iter_mut().for_each(|w| w.fill(0.0));
        let cache = forward(&p, &g, None).unwrap();
        let loss = cross_entropy(cache.logits().view(), g.labels(), &g.splits().train);
        assert_eq!(loss, 3f64.ln());
    }

    #[test]
    fn single_layer_is_one_convolution() {
        let g = fixture();
        let p = ModelParams::init(3, 4, 3, 1, 0.7, &mut stream(1, "t", &[])).unwrap();
        let mut store = SampleStore::with_layers(1);
        store.layers[0].insert(0, vec![2, 3]);
        let cache = forward(&p, &g, Some(&store)).unwrap();
        let direct = super::super::layer::neg_gcn_layer_forward(
            g.features().view(),
            &g,
            p.weights[0].view(),
            &store.layers[0],
            0.7,
        );
        assert_eq!(cache.logits(), &direct);
    }

    #[test]
    fn empty_store_matches_plain_path_bitwise() {
        let g = fixture();
        let p = ModelParams::init(3, 5, 3, 3, 0.5, &mut stream(2, "t", &[])).unwrap();
        let plain = forward(&p, &g, None).unwrap();
        let empty = forward(&p, &g, Some(&SampleStore::with_layers(3))).unwrap();
        assert_eq!(plain.outputs, empty.outputs);
        let mut zero_mu = p.clone();
        zero_mu.mu = 0.0;
        let mut store = SampleStore::with_layers(3);
        store.layers[1].insert(1, vec![4, 5]);
        let with_negs = forward(&zero_mu, &g, Some(&store)).unwrap();
        assert_eq!(plain.outputs, with_negs.outputs);
    }

    #[test]
    fn empty_mask_gives_zero_gradients() {
        let g = fixture();
        let p = ModelParams::init(3, 4, 3, 2, 0.5, &mut stream(0, "t", &[])).unwrap();
        let cache = forward(&p, &g, None).unwrap();
        let grads = backward(&p, &g, &cache, g.labels(), &[]);
        assert_eq!(grads, p.zeros_like());
    }

    #[test]
    fn mu_gradient_vanishes_without_negatives() {
        let g = fixture();
        let p = ModelParams::init(3, 4, 3, 2, 0.5, &mut stream(0, "t", &[])).unwrap();
        let cache = forward(&p, &g, Some(&SampleStore::with_layers(2))).unwrap();
        let grads = backward(&p, &g, &cache, g.labels(), &g.splits().train);
        assert_eq!(grads.mu, 0.0);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let g = fixture();
        let p = ModelParams::init(4, 4, 3, 2, 0.5, &mut stream(0, "t", &[])).unwrap();
        assert!(forward(&p, &g, None).is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(predictions(array![[1.0, 1.0], [0.0, 2.0]].view()), vec![0, 1]);
    }
}
