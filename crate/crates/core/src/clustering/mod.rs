//! Community detection, k-means, and mean-feature aggregation.

mod fluid;
mod kmeans;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::graph::CandidateSet;

pub use fluid::{fluid_communities, fluid_communities_by_component, DEFAULT_FLUID_ITERS};
pub use kmeans::{kmeans, Clustering, DEFAULT_KMEANS_ITERS};

/// A partition of the nodes into `num_communities` non-empty groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Communities {
    pub num_communities: usize,
    pub assignment: Vec<usize>,
}

impl Communities {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_communities];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn of(&self, node: usize) -> usize {
        self.assignment[node]
    }
}

/// Row q is the mean of the representation rows assigned to community q.
pub fn community_features(reps: ArrayView2<f64>, c: &Communities) -> Result<Array2<f64>> {
    if reps.nrows() != c.assignment.len() {
        return Err(Error::InvalidArgument(format!(
            "{} representation rows for {} assigned nodes",
            reps.nrows(),
            c.assignment.len()
        )));
    }
    let mut sums = Array2::<f64>::zeros((c.num_communities, reps.ncols()));
    for (row, &q) in reps.axis_iter(Axis(0)).zip(&c.assignment) {
        let mut acc = sums.row_mut(q);
        acc += &row;
    }
    for (mut acc, size) in sums.axis_iter_mut(Axis(0)).zip(c.sizes()) {
        if size > 0 {
            acc /= size as f64;
        }
    }
    Ok(sums)
}

/// Mean of the representation rows of the candidate members.
pub fn candidate_features(reps: ArrayView2<f64>, s: &CandidateSet) -> Result<Array1<f64>> {
    if s.members.is_empty() {
        return Err(Error::EmptyCandidateSet(s.center));
    }
    let mut acc = Array1::<f64>::zeros(reps.ncols());
    for &j in &s.members {
        acc += &reps.row(j);
    }
    acc /= s.members.len() as f64;
    Ok(acc)
}
