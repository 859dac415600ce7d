//! Walk the metric suite on small hand-built inputs where every value can be
//! reasoned about directly.

use ndarray::Array2;

use multislice::metrics;

fn main() -> multislice::Result<()> {
    // Agreement between two labelings of four items.
    let truth = [0, 0, 1, 1];
    println!("ari perfect:      {:>7.3}", metrics::ari(&truth, &truth)?);
    println!("ari anti:         {:>7.3}", metrics::ari(&truth, &[0, 1, 0, 1])?);
    println!("hom singletons:   {:>7.3}", metrics::hom(&truth, &[0, 1, 2, 3])?);
    println!("com singletons:   {:>7.3}", metrics::com(&truth, &[0, 1, 2, 3])?);
    println!("accuracy(.9,.6,.6): {:>5.3}", metrics::accuracy(0.9, 0.6, 0.6));

    // Spatial coherence on a 5x5 grid with one mislabeled corner spot.
    let mut coords = Array2::zeros((25, 2));
    let mut labels = vec![0usize; 25];
    for i in 0..25 {
        coords[[i, 0]] = (i % 5) as f64;
        coords[[i, 1]] = (i / 5) as f64;
        labels[i] = if i % 5 < 3 { 0 } else { 1 };
    }
    labels[24] = 0;
    println!("chaos striped:    {:>7.3}", metrics::chaos(&coords, &labels)?);
    println!("pas striped:      {:>7.3}", metrics::pas(&coords, &labels, 4)?);

    // Mixing: a 16/15 split seen through a neighborhood of 30 covers all
    // other spots, so effective label diversity hits its ceiling of 2.
    let mut line = Array2::zeros((31, 2));
    for i in 0..31 {
        line[[i, 0]] = i as f64;
    }
    let split: Vec<usize> = (0..31).map(|i| usize::from(i >= 16)).collect();
    let lisi = metrics::lisi(&line, &split, 30)?;
    println!("lisi[0]:          {:>7.3}", lisi[0]);
    println!(
        "f1(batch=0.5, domain=0.2 normed): {:.5}",
        metrics::f1_lisi(&[1.5, 1.5], &[1.2, 1.2], 2, 2)?
    );

    // Spatial autocorrelation along a 10-node path.
    let w = {
        let mut coords = Array2::zeros((10, 2));
        for i in 0..10 {
            coords[[i, 0]] = i as f64;
        }
        let g = multislice::graph::SpatialGraph::build(&coords, &[0; 10], 1)?;
        metrics::spatial_weights(&g)
    };
    let gradient: Vec<f64> = (0..10).map(|i| i as f64).collect();
    let checker: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    println!("moran gradient:   {:>7.3}", metrics::morans_i(&gradient, &w)?);
    println!("moran checker:    {:>7.3}", metrics::morans_i(&checker, &w)?);
    println!("geary gradient:   {:>7.3}", metrics::gearys_c(&gradient, &w)?);
    println!("geary checker:    {:>7.3}", metrics::gearys_c(&checker, &w)?);
    Ok(())
}
