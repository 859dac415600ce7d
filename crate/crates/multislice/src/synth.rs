//! Synthetic multi-slice datasets with known spatial domains.
//!
//! Each slice is a square lattice of spots. Domains are contiguous vertical
//! bands with identical geometry on every slice, so matching domains exist
//! across slices by construction. Gene expression is built in log space from
//! a domain signature (a boost on a random 10% gene subset), a per
//! (slice, gene) batch offset that plays the role of a batch effect, and
//! spot-level noise; counts are the rounded exponential with elementwise
//! dropout. Everything is a pure function of the seed.

use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::ingest::SliceRaw;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_slices: usize,
    /// Spots per slice = grid_side².
    pub grid_side: usize,
    pub n_domains: usize,
    pub n_genes: usize,
    /// Log-space boost on each domain's signature genes.
    pub signature_strength: f64,
    /// Std dev of the per (slice, gene) batch offset.
    pub batch_shift_sd: f64,
    /// Std dev of per-spot log-space noise.
    pub noise_sd: f64,
    /// Probability a count is zeroed.
    pub dropout_rate: f64,
    /// Remove the last domain's band from slice 0, so one slice lacks a
    /// domain the others have.
    pub drop_domain_on_slice: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_slices: 3,
            grid_side: 10,
            n_domains: 4,
            n_genes: 200,
            signature_strength: 2.0,
            batch_shift_sd: 1.0,
            noise_sd: 0.5,
            dropout_rate: 0.3,
            drop_domain_on_slice: false,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_slices < 2 {
            return Err(Error::config("n_slices must be at least 2"));
        }
        if self.n_domains < 2 {
            return Err(Error::config("n_domains must be at least 2"));
        }
        if self.grid_side < 2 {
            return Err(Error::config("grid_side must be at least 2"));
        }
        if self.n_domains > self.grid_side {
            return Err(Error::config(
                "n_domains cannot exceed grid_side (each band needs a column)",
            ));
        }
        if self.n_genes == 0 {
            return Err(Error::config("n_genes must be at least 1"));
        }
        if self.signature_strength < 0.0 || self.batch_shift_sd < 0.0 || self.noise_sd < 0.0 {
            return Err(Error::config("strengths and std devs must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::config("dropout_rate must be in [0, 1)"));
        }
        Ok(())
    }

    /// Domain of a lattice column.
    pub fn domain_of_column(&self, col: usize) -> usize {
        col * self.n_domains / self.grid_side
    }
}

/// Generates the slices plus the true domain label of every spot, in the
/// same slice-major row order the ingest pipeline will use.
pub fn generate(cfg: &SynthConfig) -> Result<(Vec<SliceRaw>, Vec<usize>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sd).expect("validated sd");
    let batch = Normal::new(0.0, cfg.batch_shift_sd).expect("validated sd");

    let n_signature = ((cfg.n_genes as f64 * 0.1).round() as usize).max(1);
    let mut signature = vec![vec![false; cfg.n_genes]; cfg.n_domains];
    for sig in signature.iter_mut() {
        for g in sample(&mut rng, cfg.n_genes, n_signature) {
            sig[g] = true;
        }
    }

    let mut batch_offset = Array2::zeros((cfg.n_slices, cfg.n_genes));
    for s in 0..cfg.n_slices {
        for g in 0..cfg.n_genes {
            batch_offset[[s, g]] = batch.sample(&mut rng);
        }
    }

    let gene_names: Vec<String> = (0..cfg.n_genes).map(|g| format!("gene{g}")).collect();
    let mut slices = Vec::with_capacity(cfg.n_slices);
    let mut truth = Vec::new();
    for s in 0..cfg.n_slices {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut coords: Vec<[f64; 2]> = Vec::new();
        let mut barcodes = Vec::new();
        for r in 0..cfg.grid_side {
            for c in 0..cfg.grid_side {
                let d = cfg.domain_of_column(c);
                if cfg.drop_domain_on_slice && s == 0 && d == cfg.n_domains - 1 {
                    continue;
                }
                let mut row = Vec::with_capacity(cfg.n_genes);
                for g in 0..cfg.n_genes {
                    let mut log_expr = batch_offset[[s, g]] + noise.sample(&mut rng);
                    if signature[d][g] {
                        log_expr += cfg.signature_strength;
                    }
                    let mut count = log_expr.exp().round();
                    if rng.random_bool(cfg.dropout_rate) {
                        count = 0.0;
                    }
                    row.push(count);
                }
                rows.push(row);
                coords.push([c as f64, r as f64]);
                barcodes.push(format!("slice{s}_r{r}_c{c}"));
                truth.push(d);
            }
        }
        let n = rows.len();
        let mut values = Array2::zeros((n, cfg.n_genes));
        let mut coord_mat = Array2::zeros((n, 2));
        for (i, row) in rows.iter().enumerate() {
            for (g, v) in row.iter().enumerate() {
                values[[i, g]] = *v;
            }
            coord_mat[[i, 0]] = coords[i][0];
            coord_mat[[i, 1]] = coords[i][1];
        }
        slices.push(SliceRaw {
            slice_id: format!("slice{s}"),
            genes: gene_names.clone(),
            values,
            coords: coord_mat,
            barcodes,
        });
    }
    Ok((slices, truth))
}

/// Writes slices, manifest, and truth labels under `dir` in the same format
/// the ingest module reads. Returns the manifest path.
pub fn write_dataset(cfg: &SynthConfig, dir: &Path) -> Result<std::path::PathBuf> {
    let (slices, truth) = generate(cfg)?;
    std::fs::create_dir_all(dir)?;

    let mut manifest_entries = Vec::new();
    for slice in &slices {
        let expr_name = format!("{}_expr.csv", slice.slice_id);
        let coords_name = format!("{}_coords.csv", slice.slice_id);

        let mut e = std::io::BufWriter::new(std::fs::File::create(dir.join(&expr_name))?);
        write!(e, "barcode")?;
        for g in &slice.genes {
            write!(e, ",{g}")?;
        }
        writeln!(e)?;
        for (i, row) in slice.values.rows().into_iter().enumerate() {
            write!(e, "{}", slice.barcodes[i])?;
            for v in row.iter() {
                write!(e, ",{v}")?;
            }
            writeln!(e)?;
        }

        let mut c = std::io::BufWriter::new(std::fs::File::create(dir.join(&coords_name))?);
        writeln!(c, "spot_barcode,x,y")?;
        for (i, bc) in slice.barcodes.iter().enumerate() {
            writeln!(c, "{bc},{},{}", slice.coords[[i, 0]], slice.coords[[i, 1]])?;
        }

        manifest_entries.push(serde_json::json!({
            "slice_id": slice.slice_id,
            "expression": expr_name,
            "coords": coords_name,
        }));
    }

    let manifest_path = dir.join("manifest.json");
    let manifest_text = serde_json::to_string_pretty(&manifest_entries)
        .map_err(|e| Error::data(format!("manifest serialization: {e}")))?;
    std::fs::write(&manifest_path, manifest_text + "\n")?;

    let mut t = std::io::BufWriter::new(std::fs::File::create(dir.join("truth_labels.csv"))?);
    writeln!(t, "spot_barcode,domain")?;
    let mut i = 0;
    for slice in &slices {
        for bc in &slice.barcodes {
            writeln!(t, "{bc},{}", truth[i])?;
            i += 1;
        }
    }
    Ok(manifest_path)
}

/// Generate and preprocess in memory, attaching truth labels.
pub fn generate_dataset(cfg: &SynthConfig, n_top: usize) -> Result<crate::ingest::Dataset> {
    let (slices, truth) = generate(cfg)?;
    let slices = crate::ingest::intersect_genes(slices)?;
    let slices = crate::ingest::normalize(slices)?;
    let mut ds = crate::ingest::select_hvg(slices, n_top)?;
    ds.truth = Some(truth);
    Ok(ds)
}
