//! Build the block-diagonal spatial KNN graph for a synthetic dataset and
//! report its structure.

use multislice::graph::SpatialGraph;
use multislice::synth::{generate_dataset, SynthConfig};

fn main() -> multislice::Result<()> {
    let cfg = SynthConfig { n_slices: 2, grid_side: 10, seed: 3, ..SynthConfig::default() };
    let data = generate_dataset(&cfg, 100)?;
    let graph = SpatialGraph::build(&data.coords, &data.slice_of, 6)?;

    println!("spots: {}", graph.n_spots());
    println!("edges (directed entries): {}", graph.adjacency.nnz());

    let mut cross_slice = 0;
    let mut asymmetric = 0;
    for (i, j, _) in graph.adjacency.iter() {
        if data.slice_of[i] != data.slice_of[j] {
            cross_slice += 1;
        }
        if graph.adjacency.get(j, i) == 0.0 {
            asymmetric += 1;
        }
    }
    println!("cross-slice edges: {cross_slice}");
    println!("asymmetric edges: {asymmetric}");

    let min_deg = graph.degrees.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_deg = graph.degrees.iter().cloned().fold(0.0, f64::max);
    println!("degree range (incl. self-loop): {min_deg} ..= {max_deg}");
    Ok(())
}
