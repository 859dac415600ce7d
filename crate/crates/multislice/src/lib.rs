//! Multi-slice spatially resolved transcriptomics integration.
//!
//! The crate trains a masked graph-convolutional autoencoder over spots from
//! several tissue slices at once, aligns the slices with an adversarial
//! discriminator plus cross-slice anchor triplets, and evaluates the learned
//! embedding with clustering, spatial-coherence, and batch-mixing metrics.
//! A synthetic data generator makes the whole pipeline runnable end to end
//! without external downloads; see the `examples/` directory for entry
//! points to each stage.

pub mod autodiff;
pub mod config;
pub mod g2n;
pub mod graph;
pub mod ingest;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod error;
pub mod pipeline;
pub mod sparse;
pub mod synth;
pub mod train;

pub use error::{Error, Result};

/// Derives a child RNG seed from a base seed and two stream labels
/// (splitmix64-style finalizer). Keeps every stochastic stage on its own
/// stream so reordering one stage never perturbs another.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base
        .wrapping_add(a.wrapping_mul(0x9e3779b97f4a7c15))
        .wrapping_add(b.wrapping_mul(0xbf58476d1ce4e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
