//! Train briefly, then compare spatial autocorrelation of raw versus
//! denoised expression for a few genes.

use multislice::graph::SpatialGraph;
use multislice::metrics::{gearys_c, morans_i, spatial_weights};
use multislice::synth::{generate_dataset, SynthConfig};
use multislice::train::{train, TrainConfig, Variant};

fn main() -> multislice::Result<()> {
    let data = generate_dataset(
        &SynthConfig {
            n_slices: 2,
            grid_side: 8,
            n_domains: 3,
            n_genes: 80,
            seed: 13,
            ..SynthConfig::default()
        },
        60,
    )?;
    let graph = SpatialGraph::build(&data.coords, &data.slice_of, 6)?;
    let cfg = TrainConfig {
        epochs: 80,
        warmup_epochs: 80,
        variant: Variant::OnlyMask,
        seed: 3,
        ..TrainConfig::default()
    };
    let result = train(&data.x, &data.slice_of, &graph, &cfg)?;

    let w = spatial_weights(&graph);
    println!("gene       moran_raw  moran_denoised  geary_raw  geary_denoised");
    for g in (0..data.x.ncols()).step_by(12) {
        let raw: Vec<f64> = data.x.column(g).to_vec();
        let den: Vec<f64> = result.z.column(g).to_vec();
        println!(
            "{:<10} {:>9.3} {:>15.3} {:>10.3} {:>15.3}",
            data.gene_names[g],
            morans_i(&raw, &w)?,
            morans_i(&den, &w)?,
            gearys_c(&raw, &w)?,
            gearys_c(&den, &w)?
        );
    }
    Ok(())
}
