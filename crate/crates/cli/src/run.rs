use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use negdpp::dpp::SamplerKind;
use negdpp::gnn::{init_params, sample_once, train as train_model, Checkpoint, Evaluation};
use negdpp::graph::{load_dataset_dir, Graph};
use negdpp::verify::{run_all, VerifyConfig};
use serde::Serialize;

use crate::config::{ExperimentConfig, Overrides};

pub const SUMMARY_SCHEMA: u32 = 1;

pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.apply(overrides);
    cfg.train.validate()?;
    Ok(cfg)
}

fn load(cfg: &ExperimentConfig) -> Result<Graph> {
    let dir = cfg.dataset_dir()?;
    load_dataset_dir(dir).with_context(|| format!("loading dataset {}", dir.display()))
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    schema: u32,
    config: &'a ExperimentConfig,
    num_nodes: usize,
    num_edges: usize,
    num_classes: usize,
    central_nodes: Vec<usize>,
    num_communities: usize,
    #[serde(rename = "final")]
    final_eval: &'a Evaluation,
    mean_ovr_node: Option<f64>,
}

fn fresh_run_dir(seed: u64) -> Result<PathBuf> {
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S");
    let base = PathBuf::from("runs").join(format!("{stamp}-seed{seed}"));
    let mut dir = base.clone();
    let mut n = 1;
    while dir.exists() {
        dir = PathBuf::from(format!("{}-{n}", base.display()));
        n += 1;
    }
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for row in rows {
        serde_json::to_writer(&mut w, &row)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn train(cfg: &ExperimentConfig, out: Option<PathBuf>, dump_samples: bool) -> Result<PathBuf> {
    let g = load(cfg)?;
    let mut tc = cfg.train.clone();
    tc.record_samples = dump_samples;
    let outcome = train_model(&g, &tc)?;

    let dir = match out {
        Some(d) => d,
        None => fresh_run_dir(tc.seed)?,
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_json(&dir.join("config.json"), cfg)?;
    write_jsonl(&dir.join("history.jsonl"), &outcome.history)?;
    Checkpoint::new(&outcome.params, tc.epochs, tc.seed).save(&dir.join("checkpoint.json"))?;
    if dump_samples {
        write_jsonl(&dir.join("samples.jsonl"), &outcome.samples)?;
    }
    let summary = Summary {
        schema: SUMMARY_SCHEMA,
        config: cfg,
        num_nodes: g.num_nodes(),
        num_edges: g.num_edges(),
        num_classes: g.num_classes(),
        central_nodes: outcome.central.clone(),
        num_communities: outcome.num_communities,
        final_eval: &outcome.final_eval,
        mean_ovr_node: outcome.mean_ovr_node(),
    };
    write_json(&dir.join("summary.json"), &summary)?;

    let e = &outcome.final_eval;
    let fmt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    println!("run directory: {}", dir.display());
    println!(
        "test acc {}  val acc {}  mu {:.4}  MAD {:.2}  OVR_node {}",
        fmt(e.test_acc),
        fmt(e.val_acc),
        e.mu,
        e.mad,
        fmt(e.overlap.as_ref().map(|o| o.ovr_node))
    );
    Ok(dir)
}

pub fn sample(cfg: &ExperimentConfig, node: usize, checkpoint: Option<&Path>, out: &mut impl Write) -> Result<()> {
    let g = load(cfg)?;
    if node >= g.num_nodes() {
        bail!("node {node} out of range for graph with {} nodes", g.num_nodes());
    }
    let tc = &cfg.train;
    if tc.sampler == SamplerKind::None {
        bail!("sampler is none; choose layer-diverse or independent");
    }
    let params = match checkpoint {
        Some(p) => Checkpoint::load(p)?.params()?,
        None => init_params(&g, tc)?,
    };
    let records = sample_once(&g, tc, &params, &[node])?;
    let Some(layers) = records.get(&node) else {
        writeln!(out, "node {node}: candidate set is empty, skipped")?;
        return Ok(());
    };
    let members = &layers[0].1.members;
    writeln!(out, "node {node}: {} candidates (P = {})", members.len(), tc.path_length)?;
    writeln!(out, "candidates: {members:?}")?;
    for (layer, o) in layers {
        let eig: Vec<String> = o.eigenvalues.iter().map(|l| format!("{l:.4}")).collect();
        writeln!(out, "layer {layer}:")?;
        writeln!(out, "  eigenvalues: [{}]", eig.join(", "))?;
        writeln!(out, "  squeezed rows: {:?}", o.squeezed_rows)?;
        writeln!(out, "  sampled: {:?}", o.sampled)?;
    }
    Ok(())
}

pub fn verify(fast: bool, seed: u64) -> ExitCode {
    let cfg = VerifyConfig {
        seed,
        ..if fast { VerifyConfig::fast() } else { VerifyConfig::default() }
    };
    let report = match run_all(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    for s in &report.suites {
        let verdict = if s.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {:<22} worst {:.3e} (tolerance {:.1e}) {}", s.name, s.worst, s.tolerance, s.detail);
    }
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
