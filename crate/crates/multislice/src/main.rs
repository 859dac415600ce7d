//! Thin command-line front end over the library pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use multislice::config::{self, RunConfig};
use multislice::pipeline::{self, EvalArgs};
use multislice::train::{PairLoss, ReconLoss, Variant};

#[derive(Parser)]
#[command(
    name = "multislice",
    version,
    about = "Multi-slice spatial transcriptomics integration: masked graph \
             autoencoding with adversarial slice alignment and cross-slice \
             anchor triplets"
)]
struct Cli {
    /// Print the configuration key reference and exit.
    #[arg(long, global = true)]
    help_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-slice benchmark dataset.
    Synth(Common),
    /// Train on a dataset, then cluster, evaluate, and write artifacts.
    Run(Common),
    /// Compute metrics for existing label and embedding files, no training.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Predicted labels CSV (spot_barcode,label).
        #[arg(long)]
        labels: PathBuf,
        /// Spot table CSV (spot_barcode,slice,x,y).
        #[arg(long)]
        spots: PathBuf,
        /// Embedding CSV: spot_barcode, then one column per dimension.
        #[arg(long)]
        embedding: PathBuf,
    },
    /// Train every variant over several seeds and tabulate median metrics.
    Ablate(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input dataset manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Ground-truth labels CSV (spot_barcode,label).
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed: data seed for synth, training seed otherwise.
    #[arg(long)]
    seed: Option<u64>,
    /// Model variant: full, only-mask, mask-gan, or mask-g2n.
    #[arg(long)]
    variant: Option<Variant>,
    /// Reconstruction objective: sce or mse.
    #[arg(long)]
    recon_loss: Option<ReconLoss>,
    /// Pairing objective after warmup: triplet or contrastive.
    #[arg(long)]
    pair_loss: Option<PairLoss>,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Adversarial weight in the combined objective.
    #[arg(long)]
    lambda: Option<f64>,
    /// Fraction of spots masked each epoch.
    #[arg(long)]
    rho: Option<f64>,
    /// Spatial neighbors per spot.
    #[arg(long)]
    k_spatial: Option<usize>,
    /// Cross-slice similarity candidates per anchor.
    #[arg(long)]
    kg: Option<usize>,
    /// Latent clusters used to filter anchor candidates.
    #[arg(long)]
    kc: Option<usize>,
    /// Positives sampled per anchor (even).
    #[arg(long)]
    n_pos: Option<usize>,
    /// Clusters in the final labeling.
    #[arg(long)]
    domains: Option<usize>,
    /// Seeds per variant in the ablation sweep.
    #[arg(long)]
    n_seeds: Option<usize>,
    /// Also write the spatial graph edge list.
    #[arg(long)]
    export_graph: bool,
    /// Also write the most recent anchor-triplet set.
    #[arg(long)]
    dump_triplets: bool,
}

fn build_config(common: &Common) -> multislice::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => config::parse_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &common.manifest {
        cfg.manifest = Some(v.clone());
    }
    if let Some(v) = &common.truth {
        cfg.truth_labels = Some(v.clone());
    }
    if let Some(v) = &common.out {
        cfg.out_dir = v.clone();
    }
    if let Some(v) = common.variant {
        cfg.train.variant = v;
    }
    if let Some(v) = common.recon_loss {
        cfg.train.recon = v;
    }
    if let Some(v) = common.pair_loss {
        cfg.train.pair = v;
    }
    if let Some(v) = common.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = common.lambda {
        cfg.train.weights.lambda = v;
    }
    if let Some(v) = common.rho {
        cfg.train.rho = v;
    }
    if let Some(v) = common.k_spatial {
        cfg.k_spatial = v;
    }
    if let Some(v) = common.kg {
        cfg.train.g2n.kg = v;
    }
    if let Some(v) = common.kc {
        cfg.kc = Some(v);
    }
    if let Some(v) = common.n_pos {
        cfg.train.g2n.n_pos = v;
    }
    if let Some(v) = common.domains {
        cfg.domains = v;
    }
    if let Some(v) = common.n_seeds {
        cfg.n_seeds = v;
    }
    if common.export_graph {
        cfg.export_graph = true;
    }
    if common.dump_triplets {
        cfg.dump_triplets = true;
    }
    cfg.finalize();
    Ok(cfg)
}

fn dispatch(command: Command) -> multislice::Result<()> {
    match command {
        Command::Synth(common) => {
            let mut cfg = build_config(&common)?;
            if let Some(s) = common.seed {
                cfg.synth.seed = s;
            }
            let manifest = pipeline::cmd_synth(&cfg)?;
            println!("{}", manifest.display());
        }
        Command::Run(common) => {
            let mut cfg = build_config(&common)?;
            if let Some(s) = common.seed {
                cfg.train.seed = s;
            }
            let report = pipeline::cmd_run(&cfg)?;
            log::info!("artifacts written to {}", cfg.out_dir.display());
            print!("{}", report.to_json_string()?);
        }
        Command::Eval { common, labels, spots, embedding } => {
            let cfg = build_config(&common)?;
            let args = EvalArgs { labels, spots, embedding, truth: common.truth.clone() };
            let report = pipeline::cmd_eval(&cfg, &args)?;
            print!("{}", report.to_json_string()?);
        }
        Command::Ablate(common) => {
            let mut cfg = build_config(&common)?;
            if let Some(s) = common.seed {
                cfg.train.seed = s;
            }
            let rows = pipeline::cmd_ablate(&cfg)?;
            log::info!("table written to {}", cfg.out_dir.join("ablation.csv").display());
            print!("{}", pipeline::ablation_summary(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if cli.help_config {
        print!("{}", config::help_text());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: no command given (run with --help for usage)");
        return ExitCode::from(2);
    };
    match dispatch(command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
