//! Brute-force oracles and the self-check suites run by `negdpp verify`.

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dpp::{eig_sym, esp, jacobi_eigen, sample_kdpp_rows, squeeze, EigenBasis, Kernel};
use crate::error::Result;
use crate::gnn::{backward, cross_entropy, forward, run_expressivity_cases, ModelParams};
use crate::graph::{Graph, Splits};
use crate::dpp::SampleStore;
use crate::rng::stream;

/// Determinant by LU with partial pivoting.
pub fn det_lu(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let mut a = m.clone();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| a[[x, c]].abs().total_cmp(&a[[y, c]].abs()))
            .expect("non-empty range");
        if a[[p, c]] == 0.0 {
            return 0.0;
        }
        if p != c {
            for j in 0..n {
                a.swap([p, j], [c, j]);
            }
            det = -det;
        }
        det *= a[[c, c]];
        for r in c + 1..n {
            let f = a[[r, c]] / a[[c, c]];
            for j in c..n {
                a[[r, j]] -= f * a[[c, j]];
            }
        }
    }
    det
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn principal_minor(l: &Array2<f64>, ys: &[usize]) -> f64 {
    det_lu(&Array2::from_shape_fn((ys.len(), ys.len()), |(a, b)| l[[ys[a], ys[b]]]))
}

/// Exact k-DPP law by enumeration: `det(L_Y) / Σ_{|Y'|=k} det(L_Y')`.
pub fn brute_kdpp(l: &Array2<f64>, k: usize) -> Vec<(Vec<usize>, f64)> {
    let dets: Vec<(Vec<usize>, f64)> = subsets(l.nrows(), k)
        .into_iter()
        .map(|ys| {
            let d = principal_minor(l, &ys).max(0.0);
            (ys, d)
        })
        .collect();
    let total: f64 = dets.iter().map(|(_, d)| d).sum();
    dets.into_iter().map(|(ys, d)| (ys, d / total)).collect()
}

/// `B Bᵀ` with standard normal `B` (full rank almost surely).
pub fn random_psd<R: Rng + ?Sized>(s: usize, rng: &mut R) -> Array2<f64> {
    let b = Array2::from_shape_fn((s, s), |_| rng.sample::<f64, _>(StandardNormal));
    b.dot(&b.t())
}

fn random_basis<R: Rng + ?Sized>(s: usize, rng: &mut R) -> Result<EigenBasis> {
    let m = random_psd(s, rng);
    let (eigenvalues, vectors) = jacobi_eigen(&m)?;
    Ok(EigenBasis {
        members: (0..s).collect(),
        eigenvalues,
        vectors,
        squeezed: false,
    })
}

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed error (suite-specific meaning).
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl SuiteResult {
    fn new(name: &str, worst: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed: worst < tolerance,
            worst,
            tolerance,
            detail,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Draws per kernel in the k-DPP exactness suite.
    pub draws: usize,
    pub kernels: usize,
}

/// Draw count at which the exactness suite uses its nominal tolerance.
pub const FULL_DRAWS: usize = 200_000;
pub const KDPP_TOLERANCE: f64 = 0.01;

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            draws: FULL_DRAWS,
            kernels: 20,
        }
    }
}

impl VerifyConfig {
    /// Reduced budget: 1k draws with the widened tolerance.
    pub fn fast() -> Self {
        Self {
            draws: 1_000,
            ..Self::default()
        }
    }

    /// L∞ tolerance for subset frequencies; widened to about five standard
    /// errors of a probability-½ frequency when fewer draws are requested.
    pub fn kdpp_tolerance(&self) -> (f64, bool) {
        if self.draws >= FULL_DRAWS {
            (KDPP_TOLERANCE, false)
        } else {
            (KDPP_TOLERANCE.max(2.5 / (self.draws as f64).sqrt()), true)
        }
    }
}

/// Empirical k-DPP subset frequencies against enumeration.
pub fn kdpp_exactness(cfg: &VerifyConfig) -> Result<SuiteResult> {
    let (tol, widened) = cfg.kdpp_tolerance();
    let mut worst = 0.0f64;
    for t in 0..cfg.kernels {
        let mut rng = stream(cfg.seed, "verify-kdpp", &[t as u64]);
        let s = rng.random_range(4..=7usize);
        let k = rng.random_range(1..=3usize);
        let l = random_psd(s, &mut rng);
        let basis = eig_sym(&Kernel {
            members: (0..s).collect(),
            matrix: l.clone(),
        })?;
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for _ in 0..cfg.draws {
            *counts.entry(sample_kdpp_rows(&basis, k, &mut rng)?).or_default() += 1;
        }
        for (ys, p) in brute_kdpp(&l, k) {
            let f = counts.get(&ys).copied().unwrap_or(0) as f64 / cfg.draws as f64;
            worst = worst.max((f - p).abs());
        }
    }
    let mode = if widened { "widened tolerance mode" } else { "nominal tolerance" };
    Ok(SuiteResult::new(
        "kdpp-exactness",
        worst,
        tol,
        format!("{} kernels x {} draws, {mode}", cfg.kernels, cfg.draws),
    ))
}

pub type SqueezeFn = fn(&EigenBasis, usize, f64) -> Result<EigenBasis>;

pub const SQUEEZE_GAMMAS: [f64; 5] = [0.0, 0.25, 0.5, 0.9, 1.0];

/// Squeezed row keeps `(1 − γ)` of its norm, to 1e-10.
pub fn squeeze_row_norm(seed: u64, squeeze_fn: SqueezeFn) -> Result<SuiteResult> {
    let mut worst = 0.0f64;
    for t in 0..100u64 {
        let mut rng = stream(seed, "verify-squeeze", &[t]);
        let s = rng.random_range(3..=8usize);
        let basis = random_basis(s, &mut rng)?;
        let j = rng.random_range(0..s);
        for gamma in SQUEEZE_GAMMAS {
            let out = squeeze_fn(&basis, j, gamma)?;
            worst = worst.max((out.row_norm(j) - (1.0 - gamma) * basis.row_norm(j)).abs());
        }
    }
    Ok(SuiteResult::new("squeeze-row-norm", worst, 1e-10, "100 bases x 5 weights".into()))
}

/// Rows equal to the squeezed row shrink identically; δ-similar rows stay
/// inside `[((1−δ) − γ(1+δ))₊, (1+δ) − γ(1−δ)] · ‖V[j*]‖`.
pub fn squeeze_similar_rows(seed: u64, squeeze_fn: SqueezeFn) -> Result<SuiteResult> {
    let mut worst = 0.0f64;
    let mut violations = 0usize;
    for t in 0..100u64 {
        let mut rng = stream(seed, "verify-similar", &[t]);
        let s = rng.random_range(4..=8usize);
        let mut basis = random_basis(s, &mut rng)?;
        let (j, dup) = (0, 1);
        let src = basis.vectors.row(j).to_owned();
        basis.vectors.row_mut(dup).assign(&src);
        for gamma in SQUEEZE_GAMMAS {
            let out = squeeze_fn(&basis, j, gamma)?;
            worst = worst.max((out.row_norm(dup) - (1.0 - gamma) * basis.row_norm(dup)).abs());
        }
        for delta in [0.01, 0.05] {
            let mut b = basis.clone();
            let eps: Array1<f64> = Array1::from_shape_fn(b.size(), |_| rng.random_range(-delta..=delta));
            let similar = &src * &eps.mapv(|e| 1.0 + e);
            b.vectors.row_mut(dup).assign(&similar);
            for gamma in SQUEEZE_GAMMAS {
                let out = squeeze_fn(&b, j, gamma)?;
                let n = out.row_norm(dup);
                let base = b.row_norm(j);
                let lo = ((1.0 - delta) - gamma * (1.0 + delta)).max(0.0) * base;
                let hi = ((1.0 + delta) - gamma * (1.0 - delta)) * base;
                if n < lo - 1e-10 || n > hi + 1e-10 {
                    violations += 1;
                }
            }
        }
    }
    let mut r = SuiteResult::new(
        "squeeze-similar-rows",
        worst,
        1e-10,
        format!("{violations} sandwich violations at delta 0.01 and 0.05"),
    );
    r.passed &= violations == 0;
    Ok(r)
}

/// Sum of principal k-minors equals e_k of the eigenvalues; the table also
/// matches direct enumeration of eigenvalue products.
pub fn cauchy_binet(seed: u64) -> Result<SuiteResult> {
    let mut worst = 0.0f64;
    let mut negative = 0usize;
    for t in 0..30u64 {
        let mut rng = stream(seed, "verify-esp", &[t]);
        let s = rng.random_range(1..=10usize);
        let l = random_psd(s, &mut rng);
        let (eigs, _) = jacobi_eigen(&l)?;
        let table = esp(eigs.view(), 4.min(s))?;
        for k in 1..=4.min(s) {
            let mut minors = 0.0;
            let mut products = 0.0;
            for ys in subsets(s, k) {
                let d = principal_minor(&l, &ys);
                if d < -1e-9 {
                    negative += 1;
                }
                minors += d;
                products += ys.iter().map(|&y| eigs[y]).product::<f64>();
            }
            let e = table.total(k);
            worst = worst.max((minors - e).abs() / e.abs().max(f64::MIN_POSITIVE));
            worst = worst.max((products - e).abs() / e.abs().max(f64::MIN_POSITIVE));
        }
    }
    let mut r = SuiteResult::new("cauchy-binet", worst, 1e-6, format!("{negative} negative minors"));
    r.passed &= negative == 0;
    Ok(r)
}

/// Random connected 10-node fixture with 3 classes.
pub fn gradient_fixture(seed: u64, t: u64) -> Graph {
    let mut rng = stream(seed, "verify-grad-graph", &[t]);
    let n = 10;
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (rng.random_range(0..i), i)).collect();
    for _ in 0..6 {
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        if u != v {
            edges.push((u, v));
        }
    }
    let features = Array2::from_shape_fn((n, 4), |_| rng.sample::<f64, _>(StandardNormal));
    let labels = (0..n).map(|i| (i % 3) as i64).collect();
    Graph::from_edges(
        &edges,
        features,
        labels,
        Splits {
            train: (0..7).collect(),
            val: vec![7, 8, 9],
            test: vec![],
        },
    )
    .expect("valid fixture")
}

/// A random non-neighbour negative set for a few nodes in every layer.
pub fn random_store<R: Rng + ?Sized>(g: &Graph, layers: usize, rng: &mut R) -> SampleStore {
    let mut store = SampleStore::with_layers(layers);
    for layer in &mut store.layers {
        for i in 0..g.num_nodes() {
            if rng.random_bool(0.5) {
                continue;
            }
            let negs: Vec<usize> = (0..g.num_nodes())
                .filter(|&j| j != i && !g.has_edge(i, j) && rng.random_bool(0.4))
                .collect();
            layer.insert(i, negs);
        }
    }
    store
}

/// Relative error `|a − n| / max(|a|, |n|, 1e-6)`.
fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

/// Largest relative error between analytic and central finite-difference
/// gradients (step 1e-4) over every weight entry and μ, plus the number of
/// entries skipped because the two probes straddle a ReLU kink.
pub fn gradient_error(params: &ModelParams, g: &Graph, store: Option<&SampleStore>) -> Result<(f64, usize)> {
    let mask = &g.splits().train;
    let probe = |p: &ModelParams| -> Result<(f64, Vec<bool>)> {
        let c = forward(p, g, store)?;
        let loss = cross_entropy(c.logits().view(), g.labels(), mask);
        let hidden = &c.outputs[..c.outputs.len() - 1];
        Ok((loss, hidden.iter().flat_map(|o| o.iter().map(|&x| x > 0.0)).collect()))
    };
    let cache = forward(params, g, store)?;
    let grads = backward(params, g, &cache, g.labels(), mask);
    let h = 1e-4;
    let mut worst = 0.0f64;
    let mut kinks = 0;
    let mut compare = |plus: &ModelParams, minus: &ModelParams, analytic: f64| -> Result<()> {
        let (lp, ap) = probe(plus)?;
        let (lm, am) = probe(minus)?;
        if ap != am {
            kinks += 1;
        } else {
            worst = worst.max(relative_error(analytic, (lp - lm) / (2.0 * h)));
        }
        Ok(())
    };
    for l in 0..params.num_layers() {
        for idx in 0..params.weights[l].len() {
            let (r, c) = (idx / params.weights[l].ncols(), idx % params.weights[l].ncols());
            let mut plus = params.clone();
            plus.weights[l][[r, c]] += h;
            let mut minus = params.clone();
            minus.weights[l][[r, c]] -= h;
            compare(&plus, &minus, grads.weights[l][[r, c]])?;
        }
    }
    let mut plus = params.clone();
    plus.mu += h;
    let mut minus = params.clone();
    minus.mu -= h;
    compare(&plus, &minus, grads.mu)?;
    Ok((worst, kinks))
}

/// Finite-difference check on 20 fixtures, each with and without negatives.
pub fn gradient_check(seed: u64) -> Result<SuiteResult> {
    let mut worst = 0.0f64;
    let mut kinks = 0;
    let mut checked = 0;
    for t in 0..20u64 {
        let g = gradient_fixture(seed, t);
        let mut rng = stream(seed, "verify-grad", &[t]);
        let layers = 1 + (t as usize % 3);
        let params = ModelParams::init(4, 5, 3, layers, rng.random_range(0.1..1.0), &mut rng)?;
        let store = random_store(&g, layers, &mut rng);
        for s in [None, Some(&store)] {
            let (w, k) = gradient_error(&params, &g, s)?;
            worst = worst.max(w);
            kinks += k;
            checked += params.weights.iter().map(|w| w.len()).sum::<usize>() + 1;
        }
    }
    Ok(SuiteResult::new(
        "gradient-check",
        worst,
        1e-4,
        format!("20 fixtures with and without negatives, {checked} entries, {kinks} skipped at ReLU kinks"),
    ))
}

pub fn expressivity() -> SuiteResult {
    let report = run_expressivity_cases();
    let failed: Vec<String> = report.failures().map(|c| format!("{}@mu={}", c.id, c.mu)).collect();
    SuiteResult {
        name: "expressivity-cases".into(),
        passed: failed.is_empty(),
        worst: failed.len() as f64,
        tolerance: 1.0,
        detail: if failed.is_empty() {
            format!("{} checks", report.checks.len())
        } else {
            format!("failed: {}", failed.join(", "))
        },
    }
}

/// Run every suite with the library squeeze operator.
pub fn run_all(cfg: &VerifyConfig) -> Result<VerifyReport> {
    run_all_with(cfg, squeeze)
}

/// Run every suite, substituting `squeeze_fn` for the squeeze operator.
pub fn run_all_with(cfg: &VerifyConfig, squeeze_fn: SqueezeFn) -> Result<VerifyReport> {
    Ok(VerifyReport {
        suites: vec![
            kdpp_exactness(cfg)?,
            squeeze_row_norm(cfg.seed, squeeze_fn)?,
            squeeze_similar_rows(cfg.seed, squeeze_fn)?,
            cauchy_binet(cfg.seed)?,
            gradient_check(cfg.seed)?,
            expressivity(),
        ],
    })
}
