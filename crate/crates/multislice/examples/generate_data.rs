//! Generate a small synthetic multi-slice dataset and list what was written.

use multislice::synth::{write_dataset, SynthConfig};

fn main() -> multislice::Result<()> {
    let cfg = SynthConfig {
        n_slices: 3,
        grid_side: 8,
        n_domains: 4,
        n_genes: 120,
        seed: 7,
        ..SynthConfig::default()
    };
    let dir = std::env::temp_dir().join("multislice_example_data");
    let manifest = write_dataset(&cfg, &dir)?;
    println!("manifest: {}", manifest.display());
    let mut names: Vec<_> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect();
    names.sort();
    for name in names {
        println!("  {name}");
    }
    println!(
        "{} slices x {} spots, {} genes, {} domains",
        cfg.n_slices,
        cfg.grid_side * cfg.grid_side,
        cfg.n_genes,
        cfg.n_domains
    );
    Ok(())
}
