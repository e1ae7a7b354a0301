use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use negdpp::graph::{build_bottleneck_graph, generate_sbm, load_dataset_dir, save_graph, SbmParams, SplitRatios};
use negdpp::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Sbm,
    Bottleneck,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Output dataset directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Block sizes, e.g. 50,50,50 (default: 6x50 for sbm, 2x100 for bottleneck)
    #[arg(long, value_delimiter = ',')]
    pub blocks: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0.2)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    pub p_out: f64,
    /// Feature width (default: number of blocks)
    #[arg(long)]
    pub feature_dim: Option<usize>,
    #[arg(long, default_value_t = 0.2)]
    pub train_ratio: f64,
    #[arg(long, default_value_t = 0.2)]
    pub val_ratio: f64,
    /// Bottleneck only: start from this dataset instead of a generated SBM
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// Bottleneck only: number of fluid communities Q
    #[arg(long, default_value_t = 2)]
    pub communities: usize,
}

impl SynthArgs {
    fn sbm_params(&self) -> SbmParams {
        let blocks = self.blocks.clone().unwrap_or_else(|| match self.kind {
            Kind::Sbm => SbmParams::six_block_fixture().blocks,
            Kind::Bottleneck => SbmParams::two_block_fixture().blocks,
        });
        SbmParams {
            feature_dim: self.feature_dim.unwrap_or(blocks.len()),
            blocks,
            p_in: self.p_in,
            p_out: self.p_out,
            splits: SplitRatios {
                train: self.train_ratio,
                val: self.val_ratio,
            },
        }
    }
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let base = match &args.base {
        Some(dir) if args.kind == Kind::Bottleneck => {
            load_dataset_dir(dir).with_context(|| format!("loading base graph {}", dir.display()))?
        }
        _ => generate_sbm(&args.sbm_params(), &mut stream(args.seed, "graph-gen", &[]))?,
    };
    let g = match args.kind {
        Kind::Sbm => base,
        Kind::Bottleneck => {
            let b = build_bottleneck_graph(&base, args.communities, &mut stream(args.seed, "bottleneck", &[]))?;
            println!(
                "bottleneck: kept {} of {} nodes, bridge {:?}",
                b.graph.num_nodes(),
                base.num_nodes(),
                b.bridge
            );
            b.graph
        }
    };
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    save_graph(&g, &args.out)?;
    println!(
        "wrote {}: {} nodes, {} edges, {} classes",
        args.out.display(),
        g.num_nodes(),
        g.num_edges(),
        g.num_classes()
    );
    Ok(())
}
