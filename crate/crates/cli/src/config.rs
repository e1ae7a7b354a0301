//! Experiment configuration: a JSON file with the training fields at top
//! level plus `dataset_dir`, overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use negdpp::dpp::SamplerKind;
use negdpp::gnn::TrainConfig;
use serde::Serialize;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub dataset_dir: Option<PathBuf>,
    #[serde(flatten)]
    pub train: TrainConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        let Some(obj) = value.as_object_mut() else {
            bail!("config must be a JSON object");
        };
        let dataset_dir = match obj.remove("dataset_dir") {
            None | Some(serde_json::Value::Null) => None,
            Some(serde_json::Value::String(s)) => Some(PathBuf::from(s)),
            Some(other) => bail!("dataset_dir must be a string, got {other}"),
        };
        let train = serde_json::from_value(value)?;
        Ok(Self { dataset_dir, train })
    }

    /// Read `path` if given, otherwise start from defaults. Relative
    /// `dataset_dir` entries are resolved against the config file's directory.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let (Some(dir), Some(parent)) = (&cfg.dataset_dir, path.parent()) {
            if dir.is_relative() {
                cfg.dataset_dir = Some(parent.join(dir));
            }
        }
        Ok(cfg)
    }

    pub fn dataset_dir(&self) -> Result<&Path> {
        self.dataset_dir
            .as_deref()
            .context("no dataset: set dataset_dir in the config or pass --dataset")
    }
}

/// Flags that override config-file values.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Dataset directory (edges.txt, features.txt, labels.txt, splits.json)
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// layer-diverse, independent or none
    #[arg(long)]
    pub sampler: Option<SamplerKind>,
    /// Squeeze strength in [0, 1]
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub k_fraction: Option<f64>,
    #[arg(long)]
    pub central_fraction: Option<f64>,
    /// Maximum shortest-path length P for candidate sets
    #[arg(long)]
    pub path_length: Option<usize>,
    /// Number of fluid communities Q
    #[arg(long)]
    pub communities: Option<usize>,
    #[arg(long)]
    pub mu_init: Option<f64>,
    /// Keep μ fixed at its initial value
    #[arg(long)]
    pub freeze_mu: bool,
    /// Compute overlap and MAD every N epochs
    #[arg(long)]
    pub metrics_every: Option<usize>,
    /// Cluster-count multipliers for the cluster overlap rate, e.g. 1,5
    #[arg(long, value_delimiter = ',')]
    pub cluster_multipliers: Option<Vec<usize>>,
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) {
        let t = &mut self.train;
        if let Some(d) = &o.dataset {
            self.dataset_dir = Some(d.clone());
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = o.$field.clone() {
                    t.$field = v;
                }
            )*};
        }
        set!(layers, hidden, lr, epochs, seed, sampler, gamma, k_fraction, central_fraction, path_length);
        set!(mu_init, metrics_every, cluster_multipliers);
        if o.communities.is_some() {
            t.communities = o.communities;
        }
        if o.freeze_mu {
            t.train_mu = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_json_with_dataset() {
        let cfg = ExperimentConfig::from_json(r#"{"dataset_dir": "data/sbm", "layers": 4, "sampler": "independent"}"#)
            .unwrap();
        assert_eq!(cfg.dataset_dir.as_deref(), Some(Path::new("data/sbm")));
        assert_eq!(cfg.train.layers, 4);
        assert_eq!(cfg.train.sampler, SamplerKind::Independent);
        assert_eq!(cfg.train.hidden, 16);
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"layrs": 4}"#).is_err());
        assert!(ExperimentConfig::from_json("[1]").is_err());
    }

    #[test]
    fn flags_win() {
        let mut cfg = ExperimentConfig::from_json(r#"{"layers": 4, "gamma": 0.5, "seed": 3}"#).unwrap();
        cfg.apply(&Overrides {
            layers: Some(2),
            sampler: Some(SamplerKind::None),
            freeze_mu: true,
            communities: Some(3),
            ..Overrides::default()
        });
        assert_eq!(cfg.train.layers, 2);
        assert_eq!(cfg.train.gamma, 0.5);
        assert_eq!(cfg.train.seed, 3);
        assert_eq!(cfg.train.sampler, SamplerKind::None);
        assert_eq!(cfg.train.communities, Some(3));
        assert!(!cfg.train.train_mu);
    }

    #[test]
    fn serialized_form_reloads() {
        let cfg = ExperimentConfig {
            dataset_dir: Some(PathBuf::from("/tmp/x")),
            train: TrainConfig {
                epochs: 7,
                ..TrainConfig::default()
            },
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }
}
