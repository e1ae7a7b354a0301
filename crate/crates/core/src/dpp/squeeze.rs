//! Rank-one space squeeze that suppresses a previously sampled row.

use super::EigenBasis;
use crate::error::{Error, Result};

const DEGENERATE_ROW: f64 = 1e-12;

/// Column where `row` has its largest absolute coordinate (first on ties).
pub fn dominant_column(basis: &EigenBasis, row: usize) -> usize {
    let r = basis.vectors.row(row);
    let mut best = 0;
    for (y, x) in r.iter().enumerate() {
        if x.abs() > r[best].abs() {
            best = y;
        }
    }
    best
}

/// `V' = V − γ · V[:, m] ⊗ V[j*, :] / V[j*, m]` with m the dominant column
/// of row `jstar`. Row `jstar` of the result is exactly `(1 − γ)` times the
/// original row; rows parallel to it shrink by the same factor. A row with
/// (near) zero norm leaves the basis untouched.
pub fn squeeze(basis: &EigenBasis, jstar: usize, gamma: f64) -> Result<EigenBasis> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!(
            "squeeze weight must lie in [0, 1], got {gamma}"
        )));
    }
    if jstar >= basis.size() {
        return Err(Error::InvalidArgument(format!(
            "row {jstar} out of range for a basis of size {}",
            basis.size()
        )));
    }
    if basis.row_norm(jstar) <= DEGENERATE_ROW {
        return Ok(basis.clone());
    }
    let m = dominant_column(basis, jstar);
    let pivot = basis.vectors[[jstar, m]];
    let direction = basis.vectors.column(m).to_owned();
    let row = basis.vectors.row(jstar).mapv(|x| x / pivot);

    let mut out = basis.clone();
    for (mut out_row, &d) in out.vectors.rows_mut().into_iter().zip(direction.iter()) {
        out_row.scaled_add(-gamma * d, &row);
    }
    out.squeezed = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1, Array2};

    fn basis(v: Array2<f64>) -> EigenBasis {
        let n = v.nrows();
        EigenBasis {
            members: (0..n).collect(),
            eigenvalues: Array1::ones(n),
            vectors: v,
            squeezed: false,
        }
    }

    #[test]
    fn full_squeeze_annihilates_row() {
        let out = squeeze(&basis(Array2::eye(2)), 0, 1.0).unwrap();
        assert_eq!(out.vectors, array![[0.0, 0.0], [0.0, 1.0]]);
        assert!(out.squeezed);
    }

    #[test]
    fn half_squeeze_halves_row() {
        let out = squeeze(&basis(Array2::eye(2)), 0, 0.5).unwrap();
        assert_eq!(out.vectors, array![[0.5, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn duplicate_row_shrinks_too() {
        let v = array![[0.6, -0.8, 0.1], [0.3, 0.2, 0.9], [0.6, -0.8, 0.1]];
        let b = basis(v);
        let out = squeeze(&b, 0, 0.5).unwrap();
        assert!((out.row_norm(2) - 0.5 * b.row_norm(2)).abs() < 1e-12);
    }

    #[test]
    fn dominant_column_uses_magnitude() {
        let b = basis(array![[0.1, -0.9], [0.5, 0.5]]);
        assert_eq!(dominant_column(&b, 0), 1);
        let out = squeeze(&b, 0, 0.25).unwrap();
        assert!((out.row_norm(0) - 0.75 * b.row_norm(0)).abs() < 1e-12);
    }

    #[test]
    fn zero_row_is_a_no_op() {
        let b = basis(array![[0.0, 0.0], [0.0, 1.0]]);
        let out = squeeze(&b, 0, 0.9).unwrap();
        assert_eq!(out, b);
    }

    #[test]
    fn gamma_zero_is_identity() {
        let b = basis(array![[0.3, 0.4], [0.8, -0.1]]);
        assert_eq!(squeeze(&b, 1, 0.0).unwrap().vectors, b.vectors);
    }

    #[test]
    fn bad_arguments() {
        let b = basis(Array2::eye(2));
        assert!(squeeze(&b, 0, 1.5).is_err());
        assert!(squeeze(&b, 2, 0.5).is_err());
    }
}
