//! Lloyd's k-means with k-means++ seeding.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

pub const DEFAULT_KMEANS_ITERS: usize = 50;

const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub centroids: Array2<f64>,
    /// Sum of squared distances after seeding and after every Lloyd iteration.
    pub objective_trace: Vec<f64>,
}

impl Clustering {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace starts with the seeding objective")
    }
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; near-ties go to the lowest index.
fn nearest(p: ArrayView1<f64>, centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.axis_iter(Axis(0)).enumerate() {
        let d = sq_dist(p, row);
        if d < best.1 - TIE_TOL {
            best = (c, d);
        }
    }
    best
}

fn kmeans_pp<R: Rng + ?Sized>(points: ArrayView2<f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let n = points.nrows();
    let mut centroids = Array2::zeros((k, points.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = points
        .axis_iter(Axis(0))
        .map(|p| sq_dist(p, points.row(first)))
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            // Never land on a zero-weight point through rounding.
            if d2[idx] == 0.0 {
                idx = d2.iter().rposition(|&w| w > 0.0).unwrap_or(idx);
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&points.row(pick));
        for (i, p) in points.axis_iter(Axis(0)).enumerate() {
            d2[i] = d2[i].min(sq_dist(p, points.row(pick)));
        }
    }
    centroids
}

/// Cluster the rows of `points` into `k` groups under Euclidean distance.
///
/// A cluster that loses all its points is reseeded with the point farthest
/// from its current centroid (ties to the lowest index).
pub fn kmeans<R: Rng + ?Sized>(
    points: ArrayView2<f64>,
    k: usize,
    iters: usize,
    rng: &mut R,
) -> Result<Clustering> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "cluster count {k} must lie in 1..={n}"
        )));
    }
    let mut centroids = kmeans_pp(points, k, rng);
    let assign = |centroids: &Array2<f64>| -> (Vec<usize>, Vec<f64>) {
        points
            .axis_iter(Axis(0))
            .map(|p| nearest(p, centroids))
            .unzip()
    };
    let (mut assignment, mut dists) = assign(&centroids);
    let mut objective_trace = vec![dists.iter().sum()];

    for _ in 0..iters {
        // Update step.
        let mut sums = Array2::<f64>::zeros(centroids.raw_dim());
        let mut counts = vec![0usize; k];
        for (p, &c) in points.axis_iter(Axis(0)).zip(&assignment) {
            let mut row = sums.row_mut(c);
            row += &p;
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                let mean = sums.row(c).mapv(|x| x / counts[c] as f64);
                centroids.row_mut(c).assign(&mean);
            } else {
                let far = (0..n)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .expect("n > 0");
                centroids.row_mut(c).assign(&points.row(far));
                dists[far] = 0.0;
            }
        }
        // Assignment step.
        let (next, next_dists) = assign(&centroids);
        let stable = next == assignment;
        assignment = next;
        dists = next_dists;
        objective_trace.push(dists.iter().sum());
        if stable && counts.iter().all(|&c| c > 0) {
            break;
        }
    }

    Ok(Clustering {
        k,
        assignment,
        centroids,
        objective_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn separated_blobs_recovered() {
        let mut rng = stream(5, "t", &[]);
        let pts = Array2::from_shape_fn((40, 2), |(i, j)| {
            let centre = if i < 20 { 0.0 } else { 100.0 };
            centre + (rng.random::<f64>() - 0.5) + j as f64
        });
        let c = kmeans(pts.view(), 2, DEFAULT_KMEANS_ITERS, &mut stream(1, "k", &[])).unwrap();
        let a = &c.assignment;
        assert!(a[..20].iter().all(|&x| x == a[0]));
        assert!(a[20..].iter().all(|&x| x == a[20]));
        assert_ne!(a[0], a[20]);
    }

    #[test]
    fn one_cluster_per_point() {
        let pts = Array2::from_shape_fn((6, 3), |(i, j)| (i * i) as f64 + j as f64 * 0.1);
        let c = kmeans(pts.view(), 6, 10, &mut stream(2, "k", &[])).unwrap();
        assert_eq!(c.objective(), 0.0);
        let mut seen = c.assignment.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn identical_points() {
        let pts = Array2::from_elem((5, 2), 3.0);
        let c = kmeans(pts.view(), 2, 10, &mut stream(2, "k", &[])).unwrap();
        assert_eq!(c.objective(), 0.0);
    }

    #[test]
    fn k_larger_than_n_rejected() {
        let pts = Array2::<f64>::zeros((2, 2));
        assert!(kmeans(pts.view(), 3, 10, &mut stream(0, "k", &[])).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn objective_never_increases_and_is_deterministic(
            vals in proptest::collection::vec(-5.0f64..5.0, 60),
            k in 1usize..6,
            seed in 0u64..1000,
        ) {
            let pts = Array2::from_shape_vec((20, 3), vals).unwrap();
            let c = kmeans(pts.view(), k, DEFAULT_KMEANS_ITERS, &mut stream(seed, "k", &[])).unwrap();
            for w in c.objective_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9, "{:?}", c.objective_trace);
            }
            for (p, &a) in pts.axis_iter(Axis(0)).zip(&c.assignment) {
                let own = sq_dist(p, c.centroids.row(a));
                for row in c.centroids.axis_iter(Axis(0)) {
                    prop_assert!(own <= sq_dist(p, row) + 1e-12);
                }
            }
            let again = kmeans(pts.view(), k, DEFAULT_KMEANS_ITERS, &mut stream(seed, "k", &[])).unwrap();
            prop_assert_eq!(c, again);
        }
    }
}
