//! Compare anchor-pair retrieval strategies on data where one slice is
//! missing a domain: global nearest neighbors filtered by shared clusters
//! versus plain mutual nearest neighbors.

use multislice::g2n::{pair_purity, select_g2n_pairs, select_mnn_pairs, G2NConfig, PassCounter};
use multislice::metrics::pca;
use multislice::synth::{generate_dataset, SynthConfig};

fn main() -> multislice::Result<()> {
    let cfg = SynthConfig {
        n_slices: 3,
        grid_side: 8,
        n_domains: 4,
        n_genes: 100,
        drop_domain_on_slice: true,
        seed: 21,
        ..SynthConfig::default()
    };
    let data = generate_dataset(&cfg, 80)?;
    let truth = data.truth.as_deref().expect("synthetic data carries truth");
    // A cheap stand-in for a trained embedding.
    let h = pca(&data.x, 8, 1)?;

    let g2n_cfg = G2NConfig { kg: 20, kc: 4, n_pos: 6, seed: 2 };
    let mut g2n_passes = PassCounter::default();
    let triplets = select_g2n_pairs(&h, &data.slice_of, &g2n_cfg, 1.0, &mut g2n_passes)?;
    let g2n_pairs = triplets.positive_pairs();

    let mut mnn_passes = PassCounter::default();
    let mnn_pairs = select_mnn_pairs(&h, &data.slice_of, 20, &mut mnn_passes)?;

    println!("slices: {}", data.n_slices());
    println!(
        "retrieval passes  g2n: {}  mnn: {}",
        g2n_passes.passes, mnn_passes.passes
    );
    println!(
        "pairs found       g2n: {}  mnn: {}",
        g2n_pairs.len(),
        mnn_pairs.len()
    );
    println!(
        "same-domain rate  g2n: {:.3}  mnn: {:.3}",
        pair_purity(&g2n_pairs, truth)?,
        pair_purity(&mnn_pairs, truth)?
    );
    Ok(())
}
