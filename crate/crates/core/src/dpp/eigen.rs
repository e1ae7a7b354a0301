//! Cyclic Jacobi eigendecomposition for the small dense kernels we sample from.

use ndarray::{Array1, Array2};

use super::Kernel;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const OFF_DIAG_TOL: f64 = 1e-10;
const CLAMP_REL: f64 = 1e-12;

/// Eigenvalues and eigenvectors of a kernel. Row r of `vectors` belongs to
/// `members[r]`; column y is the eigenvector for `eigenvalues[y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    pub members: Vec<usize>,
    /// Ascending, clamped to be non-negative.
    pub eigenvalues: Array1<f64>,
    pub vectors: Array2<f64>,
    /// Set once a squeeze has been applied; the columns are then no longer orthonormal.
    pub squeezed: bool,
}

impl EigenBasis {
    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn positive_count(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > 0.0).count()
    }

    pub fn row_norm(&self, row: usize) -> f64 {
        self.vectors.row(row).dot(&self.vectors.row(row)).sqrt()
    }

    /// `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.vectors * &self.eigenvalues;
        scaled.dot(&self.vectors.t())
    }
}

/// Raw symmetric eigendecomposition: returns unsorted, unclamped eigenvalues
/// and the matrix whose columns are the matching eigenvectors.
pub fn jacobi_eigen(matrix: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "matrix must be square, got {}x{}",
            n,
            matrix.ncols()
        )));
    }
    let mut a = matrix.clone();
    let mut v = Array2::<f64>::eye(n);
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = OFF_DIAG_TOL * scale;

    let off_norm = |a: &Array2<f64>| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    s += a[[p, q]] * a[[p, q]];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_norm(&a) <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                a[[p, q]] = 0.0;
                a[[q, p]] = 0.0;
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged && off_norm(&a) > tol {
        return Err(Error::NoConvergence(MAX_SWEEPS));
    }
    Ok((a.diag().to_owned(), v))
}

/// Eigendecompose a kernel, sort eigenpairs ascending, and zero every
/// eigenvalue below 1e-12 of the largest one (negative ones included).
pub fn eig_sym(k: &Kernel) -> Result<EigenBasis> {
    let (vals, vecs) = jacobi_eigen(&k.matrix)?;
    let n = vals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| vals[x].total_cmp(&vals[y]));
    let max = vals.iter().copied().fold(0.0f64, f64::max);
    let eigenvalues: Array1<f64> = order
        .iter()
        .map(|&i| {
            let l = vals[i];
            if l < CLAMP_REL * max || l <= 0.0 {
                0.0
            } else {
                l
            }
        })
        .collect();
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&vecs.column(src));
    }
    Ok(EigenBasis {
        members: k.members.clone(),
        eigenvalues,
        vectors,
        squeezed: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn kernel(m: Array2<f64>) -> Kernel {
        Kernel {
            members: (0..m.nrows()).collect(),
            matrix: m,
        }
    }

    fn max_abs(a: &Array2<f64>) -> f64 {
        a.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn identity() {
        let b = eig_sym(&kernel(Array2::eye(3))).unwrap();
        assert_eq!(b.eigenvalues, array![1.0, 1.0, 1.0]);
        assert!(max_abs(&(b.reconstruct() - Array2::<f64>::eye(3))) < 1e-12);
    }

    #[test]
    fn diagonal_sorted_with_axis_vectors() {
        let b = eig_sym(&kernel(array![[2.0, 0.0], [0.0, 1.0]])).unwrap();
        assert_eq!(b.eigenvalues, array![1.0, 2.0]);
        assert_eq!(b.vectors.mapv(f64::abs), array![[0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn zero_matrix() {
        let b = eig_sym(&kernel(Array2::zeros((3, 3)))).unwrap();
        assert_eq!(b.positive_count(), 0);
    }

    #[test]
    fn negative_eigenvalues_clamped() {
        // Eigenvalues 3 and -1.
        let b = eig_sym(&kernel(array![[1.0, 2.0], [2.0, 1.0]])).unwrap();
        assert_eq!(b.eigenvalues[0], 0.0);
        assert!((b.eigenvalues[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn random_symmetric_reconstruction() {
        let mut rng = stream(11, "t", &[]);
        let a = Array2::from_shape_fn((6, 6), |_| rng.random::<f64>() - 0.5);
        let sym = &a + &a.t();
        let (vals, vecs) = jacobi_eigen(&sym).unwrap();
        let rebuilt = (&vecs * &vals).dot(&vecs.t());
        assert!(max_abs(&(rebuilt - &sym)) < 1e-8);
    }

    proptest! {
        #[test]
        fn psd_reconstruction_and_orthonormality(
            vals in proptest::collection::vec(-1.0f64..1.0, 64),
            n in 1usize..9,
            rank in 1usize..9,
        ) {
            let rank = rank.min(n);
            let b = Array2::from_shape_fn((rank, n), |(i, j)| vals[(i * 8 + j) % 64]);
            let l = b.t().dot(&b);
            let basis = eig_sym(&kernel(l.clone())).unwrap();
            let vtv = basis.vectors.t().dot(&basis.vectors);
            prop_assert!(max_abs(&(vtv - Array2::<f64>::eye(n))) < 1e-8);
            let norm = l.iter().map(|x| x * x).sum::<f64>().sqrt();
            let err = (basis.reconstruct() - &l).iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-6 * norm.max(1e-300));
            prop_assert!(basis.eigenvalues.iter().all(|&x| x >= 0.0));
            prop_assert!(basis.eigenvalues.windows(2).into_iter().all(|w| w[0] <= w[1]));
        }
    }
}
