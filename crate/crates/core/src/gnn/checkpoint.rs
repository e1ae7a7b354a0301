//! JSON checkpoint: shapes plus row-major weights, μ, epoch and seed.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::model::ModelParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub shapes: Vec<[usize; 2]>,
    pub weights: Vec<Vec<f64>>,
    pub mu: f64,
    pub epoch: usize,
    pub seed: u64,
}

impl Checkpoint {
    pub fn new(params: &ModelParams, epoch: usize, seed: u64) -> Self {
        Self {
            shapes: params.weights.iter().map(|w| [w.nrows(), w.ncols()]).collect(),
            weights: params.weights.iter().map(|w| w.iter().copied().collect()).collect(),
            mu: params.mu,
            epoch,
            seed,
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        if self.shapes.len() != self.weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} shapes for {} weight arrays",
                self.shapes.len(),
                self.weights.len()
            )));
        }
        let weights = self
            .shapes
            .iter()
            .zip(&self.weights)
            .map(|(&[r, c], w)| {
                Array2::from_shape_vec((r, c), w.clone())
                    .map_err(|e| Error::InvalidArgument(format!("weight shape {r}x{c}: {e}")))
            })
            .collect::<Result<_>>()?;
        Ok(ModelParams { weights, mu: self.mu })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn round_trip() {
        let p = ModelParams::init(5, 4, 3, 3, 0.25, &mut stream(0, "t", &[])).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checkpoint.json");
        Checkpoint::new(&p, 17, 9).save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.epoch, 17);
        assert_eq!(back.shapes, vec![[5, 4], [4, 4], [4, 3]]);
        assert_eq!(back.params().unwrap(), p);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let c = Checkpoint {
            shapes: vec![[2, 2]],
            weights: vec![vec![1.0; 3]],
            mu: 0.0,
            epoch: 0,
            seed: 0,
        };
        assert!(c.params().is_err());
    }
}
