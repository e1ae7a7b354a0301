use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// Elementary symmetric polynomials `e[l][v]` of the first `v` eigenvalues,
/// for `l = 0..=k` and `v = 0..=S`.
#[derive(Debug, Clone, PartialEq)]
pub struct EspTable {
    table: Array2<f64>,
}

impl EspTable {
    pub fn get(&self, l: usize, v: usize) -> f64 {
        self.table[[l, v]]
    }

    pub fn max_order(&self) -> usize {
        self.table.nrows() - 1
    }

    pub fn len(&self) -> usize {
        self.table.ncols() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `e_k` over all eigenvalues.
    pub fn total(&self, l: usize) -> f64 {
        self.get(l, self.len())
    }
}

/// `e[0][v] = 1`, `e[l][0] = 0` for `l ≥ 1`, `e[l][v] = e[l][v-1] + λ_v e[l-1][v-1]`.
pub fn esp(eigenvalues: ArrayView1<f64>, k: usize) -> Result<EspTable> {
    let s = eigenvalues.len();
    if k > s {
        return Err(Error::InvalidArgument(format!(
            "order {k} exceeds the {s} available eigenvalues"
        )));
    }
    let mut table = Array2::<f64>::zeros((k + 1, s + 1));
    table.row_mut(0).fill(1.0);
    for l in 1..=k {
        for v in 1..=s {
            table[[l, v]] = table[[l, v - 1]] + eigenvalues[v - 1] * table[[l - 1, v - 1]];
        }
    }
    Ok(EspTable { table })
}
