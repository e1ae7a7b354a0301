//! Plain-text dataset format.
//!
//! ```text
//! edges.txt     "u v" per line, 0-indexed, each undirected edge at least once
//! features.txt  N lines of F whitespace-separated reals
//! labels.txt    N lines, one integer each, -1 for unlabeled
//! splits.json   {"train": [...], "val": [...], "test": [...]}
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::{Graph, Splits};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct DatasetPaths {
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub splits: PathBuf,
}

impl DatasetPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            edges: dir.join("edges.txt"),
            features: dir.join("features.txt"),
            labels: dir.join("labels.txt"),
            splits: dir.join("splits.json"),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        msg: msg.into(),
    }
}

/// Non-blank lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_features(path: &Path) -> Result<Array2<f64>> {
    let text = read(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in lines(&text) {
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| parse_err(path, ln, format!("bad real {tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    path,
                    ln,
                    format!("expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    let f = rows.first().map_or(0, Vec::len);
    let n = rows.len();
    Array2::from_shape_vec((n, f), rows.into_iter().flatten().collect())
        .map_err(|e| parse_err(path, 0, e.to_string()))
}

fn parse_labels(path: &Path) -> Result<Vec<i64>> {
    let text = read(path)?;
    lines(&text)
        .map(|(ln, line)| {
            line.parse::<i64>()
                .map_err(|e| parse_err(path, ln, format!("bad label {line:?}: {e}")))
        })
        .collect()
}

fn parse_edges(path: &Path, num_nodes: usize) -> Result<Vec<(usize, usize)>> {
    let text = read(path)?;
    let mut edges = Vec::new();
    for (ln, line) in lines(&text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(path, ln, "expected two node ids"));
        }
        let mut ids = [0usize; 2];
        for (slot, tok) in ids.iter_mut().zip(&toks) {
            *slot = tok
                .parse()
                .map_err(|e| parse_err(path, ln, format!("bad node id {tok:?}: {e}")))?;
            if *slot >= num_nodes {
                return Err(parse_err(
                    path,
                    ln,
                    format!("node id {slot} out of range for {num_nodes} nodes"),
                ));
            }
        }
        if ids[0] == ids[1] {
            return Err(parse_err(path, ln, format!("self-loop on node {}", ids[0])));
        }
        edges.push((ids[0], ids[1]));
    }
    Ok(edges)
}

/// Load a graph from the four dataset files. N is the number of feature rows.
pub fn load_graph(paths: &DatasetPaths) -> Result<Graph> {
    let features = parse_features(&paths.features)?;
    let labels = parse_labels(&paths.labels)?;
    if labels.len() != features.nrows() {
        return Err(parse_err(
            &paths.labels,
            labels.len(),
            format!("{} labels for {} feature rows", labels.len(), features.nrows()),
        ));
    }
    let edges = parse_edges(&paths.edges, features.nrows())?;
    let splits: Splits = serde_json::from_str(&read(&paths.splits)?).map_err(|source| Error::Json {
        path: paths.splits.clone(),
        source,
    })?;
    Graph::from_edges(&edges, features, labels, splits)
}

pub fn load_dataset_dir(dir: &Path) -> Result<Graph> {
    load_graph(&DatasetPaths::in_dir(dir))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Write `g` into `dir` using the standard file names. Reals are written in
/// shortest round-trip form, so loading the result reproduces `g` exactly.
pub fn save_graph(g: &Graph, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_owned(),
        source,
    })?;
    let paths = DatasetPaths::in_dir(dir);

    let mut edges = String::new();
    for (u, v) in g.edges() {
        let _ = writeln!(edges, "{u} {v}");
    }
    write(&paths.edges, &edges)?;

    let mut feats = String::new();
    for row in g.features().rows() {
        let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(feats, "{}", line.join(" "));
    }
    write(&paths.features, &feats)?;

    let mut labels = String::new();
    for l in g.labels() {
        let _ = writeln!(labels, "{l}");
    }
    write(&paths.labels, &labels)?;

    let splits = serde_json::to_string(g.splits()).map_err(|source| Error::Json {
        path: paths.splits.clone(),
        source,
    })?;
    write(&paths.splits, &splits)
}
