//! Train the full model (masking + adversary + anchor triplets) on a small
//! synthetic dataset and print the loss trajectory.

use multislice::g2n::G2NConfig;
use multislice::graph::SpatialGraph;
use multislice::synth::{generate_dataset, SynthConfig};
use multislice::train::{train, TrainConfig};

fn main() -> multislice::Result<()> {
    let data = generate_dataset(
        &SynthConfig {
            n_slices: 2,
            grid_side: 7,
            n_domains: 3,
            n_genes: 60,
            seed: 5,
            ..SynthConfig::default()
        },
        60,
    )?;
    let graph = SpatialGraph::build(&data.coords, &data.slice_of, 6)?;
    let cfg = TrainConfig {
        epochs: 60,
        warmup_epochs: 20,
        g2n_refresh_every: 10,
        seed: 1,
        g2n: G2NConfig { kg: 15, kc: 3, n_pos: 6, seed: 0 },
        ..TrainConfig::default()
    };
    let result = train(&data.x, &data.slice_of, &graph, &cfg)?;

    println!("epoch   l_rec     l_dis     l_tri     l_total");
    for record in result.loss_history.iter().step_by(10) {
        println!(
            "{:>5} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            record.epoch, record.l_rec, record.l_dis, record.l_tri, record.l_total
        );
    }
    let first = &result.loss_history[0];
    let last = result.loss_history.last().expect("nonzero epochs");
    println!("reconstruction: {:.4} -> {:.4}", first.l_rec, last.l_rec);
    let active = result.loss_history.iter().filter(|r| r.l_tri > 0.0).count();
    let max_tri = result.loss_history.iter().map(|r| r.l_tri).fold(0.0, f64::max);
    println!("epochs with active pair term: {active} (max l_tri {max_tri:.4})");
    if let Some(set) = &result.last_triplets {
        println!("last triplet set: {} triples", set.len());
    }
    println!(
        "latent: {} x {}, denoised: {} x {}",
        result.h.nrows(),
        result.h.ncols(),
        result.z.nrows(),
        result.z.ncols()
    );
    println!(
        "discriminator updates: {}, triplet rebuilds: {}",
        result.counters.disc_updates, result.counters.triplet_builds
    );
    if let Some((epoch, acc)) = result.disc_accuracy.last() {
        println!("final held-out discriminator accuracy (epoch {epoch}): {acc:.3}");
    }
    Ok(())
}
