//! Run the four model variants over two seeds on a small dataset and print
//! the median-metric table.

use multislice::config::RunConfig;
use multislice::g2n::G2NConfig;
use multislice::pipeline::{ablation_summary, cmd_ablate, cmd_synth};
use multislice::synth::SynthConfig;
use multislice::train::TrainConfig;

fn main() -> multislice::Result<()> {
    let dir = std::env::temp_dir().join("multislice_example_ablation");
    let mut cfg = RunConfig::default();
    cfg.synth = SynthConfig {
        n_slices: 2,
        grid_side: 7,
        n_domains: 3,
        n_genes: 60,
        seed: 17,
        ..SynthConfig::default()
    };
    cfg.out_dir = dir.join("data");
    let manifest = cmd_synth(&cfg)?;

    cfg.manifest = Some(manifest);
    cfg.out_dir = dir.join("out");
    cfg.n_top_genes = 60;
    cfg.domains = 3;
    cfg.n_seeds = 2;
    cfg.train = TrainConfig {
        epochs: 40,
        warmup_epochs: 15,
        g2n_refresh_every: 10,
        seed: 1,
        g2n: G2NConfig { kg: 15, kc: 3, n_pos: 6, seed: 0 },
        ..TrainConfig::default()
    };
    cfg.finalize();

    let rows = cmd_ablate(&cfg)?;
    print!("{}", ablation_summary(&rows));
    println!("full table: {}", cfg.out_dir.join("ablation.csv").display());
    Ok(())
}
