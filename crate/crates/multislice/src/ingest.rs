//! Loading and preprocessing multi-slice expression data.
//!
//! A JSON manifest (array of `{"slice_id", "expression", "coords"}` objects)
//! points at per-slice count and coordinate tables. Slices are harmonized to
//! the sorted intersection of their gene sets, library-size normalized to
//! the global median per-spot total, log(1+x) transformed, and reduced to
//! the most variable genes. Spot rows are stacked slice by slice in manifest
//! order.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::Deserialize;

use crate::error::{Error, Result};

/// One slice as read from disk, prior to harmonization.
#[derive(Debug, Clone)]
pub struct SliceRaw {
    pub slice_id: String,
    pub genes: Vec<String>,
    /// Spots x genes; raw counts on load, normalized values after
    /// [`normalize`].
    pub values: Array2<f64>,
    /// Spots x 2.
    pub coords: Array2<f64>,
    pub barcodes: Vec<String>,
}

/// All slices stacked into one matrix, ready for graph building and training.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// N x N_t expression matrix, rows slice-contiguous in manifest order.
    pub x: Array2<f64>,
    /// N x 2 spot coordinates.
    pub coords: Array2<f64>,
    /// Slice index of each row, in [0, S).
    pub slice_of: Vec<usize>,
    pub slice_names: Vec<String>,
    /// Retained genes, ordered by descending pooled variance.
    pub gene_names: Vec<String>,
    pub barcodes: Vec<String>,
    /// Ground-truth domain label per spot, when known.
    pub truth: Option<Vec<usize>>,
}

impl Dataset {
    pub fn n_spots(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_slices(&self) -> usize {
        self.slice_names.len()
    }
}

#[derive(Deserialize)]
struct ManifestEntry {
    slice_id: String,
    expression: PathBuf,
    coords: PathBuf,
}

fn delimiter_for(path: &Path) -> u8 {
    match path.extension().and_then(|e| e.to_str()) {
        Some("tsv") => b'\t',
        _ => b',',
    }
}

fn read_table(path: &Path) -> Result<Vec<Vec<String>>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter_for(path))
        .from_reader(file);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
        rows.push(record.iter().map(|f| f.trim().to_string()).collect());
    }
    Ok(rows)
}

fn parse_count(field: &str, path: &Path, row: usize, col: usize) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| {
        Error::data(format!(
            "{}: row {row}, column {col}: not a number: {field:?}",
            path.display()
        ))
    })?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::data(format!(
            "{}: row {row}, column {col}: counts must be finite and non-negative, got {v}",
            path.display()
        )));
    }
    Ok(v)
}

fn read_expression(path: &Path) -> Result<(Vec<String>, Vec<String>, Array2<f64>)> {
    let rows = read_table(path)?;
    if rows.len() < 2 {
        return Err(Error::data(format!(
            "{}: expected a gene-name header plus at least one spot row",
            path.display()
        )));
    }
    let genes: Vec<String> = rows[0][1..].to_vec();
    if genes.is_empty() {
        return Err(Error::data(format!("{}: no gene columns", path.display())));
    }
    let n_spots = rows.len() - 1;
    let mut barcodes = Vec::with_capacity(n_spots);
    let mut values = Array2::zeros((n_spots, genes.len()));
    for (i, row) in rows[1..].iter().enumerate() {
        if row.len() != genes.len() + 1 {
            return Err(Error::data(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                i + 1,
                row.len(),
                genes.len() + 1
            )));
        }
        barcodes.push(row[0].clone());
        for (j, field) in row[1..].iter().enumerate() {
            values[[i, j]] = parse_count(field, path, i + 1, j + 1)?;
        }
    }
    Ok((genes, barcodes, values))
}

fn read_coords(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let rows = read_table(path)?;
    if rows.is_empty() {
        return Err(Error::data(format!("{}: empty coords file", path.display())));
    }
    let header = &rows[0];
    if header.len() < 3 || header[0] != "spot_barcode" || header[1] != "x" || header[2] != "y" {
        return Err(Error::data(format!(
            "{}: coords header must be spot_barcode,x,y",
            path.display()
        )));
    }
    let mut barcodes = Vec::with_capacity(rows.len() - 1);
    let mut coords = Array2::zeros((rows.len() - 1, 2));
    for (i, row) in rows[1..].iter().enumerate() {
        if row.len() < 3 {
            return Err(Error::data(format!(
                "{}: row {} has {} fields, expected 3",
                path.display(),
                i + 1,
                row.len()
            )));
        }
        barcodes.push(row[0].clone());
        for (j, field) in row[1..3].iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::data(format!(
                    "{}: row {}: bad coordinate {field:?}",
                    path.display(),
                    i + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::data(format!(
                    "{}: row {}: non-finite coordinate",
                    path.display(),
                    i + 1
                )));
            }
            coords[[i, j]] = v;
        }
    }
    Ok((barcodes, coords))
}

/// Reads the manifest and every slice it names. Relative paths inside the
/// manifest resolve against the manifest's own directory.
pub fn load_manifest(path: &Path) -> Result<Vec<SliceRaw>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(format!("cannot read manifest {}: {e}", path.display())))?;
    let entries: Vec<ManifestEntry> = serde_json::from_str(&text)
        .map_err(|e| Error::data(format!("{}: invalid manifest: {e}", path.display())))?;
    if entries.is_empty() {
        return Err(Error::data("empty manifest"));
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut seen = BTreeSet::new();
    let mut slices = Vec::with_capacity(entries.len());
    for entry in entries {
        if !seen.insert(entry.slice_id.clone()) {
            return Err(Error::data(format!(
                "duplicate slice_id {:?} in manifest",
                entry.slice_id
            )));
        }
        let expr_path = base.join(&entry.expression);
        let coords_path = base.join(&entry.coords);
        let (genes, barcodes, values) = read_expression(&expr_path)?;
        let (coord_barcodes, coords) = read_coords(&coords_path)?;
        if coord_barcodes.len() != barcodes.len() {
            return Err(Error::data(format!(
                "slice {:?}: row mismatch: {} expression spots vs {} coordinate rows",
                entry.slice_id,
                barcodes.len(),
                coord_barcodes.len()
            )));
        }
        if coord_barcodes != barcodes {
            return Err(Error::data(format!(
                "slice {:?}: coordinate barcodes do not match expression barcodes",
                entry.slice_id
            )));
        }
        slices.push(SliceRaw {
            slice_id: entry.slice_id,
            genes,
            values,
            coords,
            barcodes,
        });
    }
    Ok(slices)
}

/// Reorders every slice to the sorted intersection of all gene sets.
pub fn intersect_genes(slices: Vec<SliceRaw>) -> Result<Vec<SliceRaw>> {
    let mut shared: BTreeSet<&str> = slices
        .first()
        .ok_or_else(|| Error::data("empty manifest"))?
        .genes
        .iter()
        .map(String::as_str)
        .collect();
    for slice in &slices[1..] {
        let here: BTreeSet<&str> = slice.genes.iter().map(String::as_str).collect();
        shared = shared.intersection(&here).copied().collect();
    }
    if shared.is_empty() {
        return Err(Error::data("empty gene intersection"));
    }
    let shared: Vec<String> = shared.into_iter().map(String::from).collect();

    let mut out = Vec::with_capacity(slices.len());
    for slice in slices {
        let col_of: std::collections::BTreeMap<&str, usize> = slice
            .genes
            .iter()
            .enumerate()
            .map(|(j, g)| (g.as_str(), j))
            .collect();
        let mut values = Array2::zeros((slice.values.nrows(), shared.len()));
        for (jj, gene) in shared.iter().enumerate() {
            let j = col_of[gene.as_str()];
            for i in 0..slice.values.nrows() {
                values[[i, jj]] = slice.values[[i, j]];
            }
        }
        out.push(SliceRaw {
            genes: shared.clone(),
            values,
            ..slice
        });
    }
    Ok(out)
}

/// Scales every spot to the global median per-spot total, then log(1+x).
pub fn normalize(mut slices: Vec<SliceRaw>) -> Result<Vec<SliceRaw>> {
    let mut totals = Vec::new();
    for slice in &slices {
        for (i, row) in slice.values.rows().into_iter().enumerate() {
            let total = row.sum();
            if total <= 0.0 {
                return Err(Error::data(format!(
                    "zero-count spot (slice {:?}, row {i})",
                    slice.slice_id
                )));
            }
            totals.push(total);
        }
    }
    totals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = totals.len();
    let median = if n % 2 == 1 {
        totals[n / 2]
    } else {
        0.5 * (totals[n / 2 - 1] + totals[n / 2])
    };

    for slice in &mut slices {
        for mut row in slice.values.rows_mut() {
            let scale = median / row.sum();
            for v in row.iter_mut() {
                *v = (*v * scale).ln_1p();
            }
        }
    }
    Ok(slices)
}

/// Keeps the `n_top` genes with largest variance pooled over all spots of
/// all slices, output columns ordered by descending variance (ties by
/// ascending original column index), and stacks slices into one matrix.
pub fn select_hvg(slices: Vec<SliceRaw>, n_top: usize) -> Result<Dataset> {
    if n_top == 0 {
        return Err(Error::config("hvg count must be at least 1"));
    }
    let n_genes = slices[0].genes.len();
    let n_spots: usize = slices.iter().map(|s| s.values.nrows()).sum();

    let mut mean = vec![0.0; n_genes];
    for slice in &slices {
        for row in slice.values.rows() {
            for (j, v) in row.iter().enumerate() {
                mean[j] += v;
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= n_spots as f64);
    let mut var = vec![0.0; n_genes];
    for slice in &slices {
        for row in slice.values.rows() {
            for (j, v) in row.iter().enumerate() {
                let d = v - mean[j];
                var[j] += d * d;
            }
        }
    }
    var.iter_mut().for_each(|v| *v /= n_spots as f64);

    let mut order: Vec<usize> = (0..n_genes).collect();
    order.sort_by(|&a, &b| var[b].partial_cmp(&var[a]).unwrap().then(a.cmp(&b)));
    order.truncate(n_top.min(n_genes));

    let gene_names: Vec<String> = order.iter().map(|&j| slices[0].genes[j].clone()).collect();
    let mut x = Array2::zeros((n_spots, order.len()));
    let mut coords = Array2::zeros((n_spots, 2));
    let mut slice_of = Vec::with_capacity(n_spots);
    let mut slice_names = Vec::with_capacity(slices.len());
    let mut barcodes = Vec::with_capacity(n_spots);
    let mut r = 0;
    for (s, slice) in slices.iter().enumerate() {
        slice_names.push(slice.slice_id.clone());
        for i in 0..slice.values.nrows() {
            for (jj, &j) in order.iter().enumerate() {
                x[[r, jj]] = slice.values[[i, j]];
            }
            coords[[r, 0]] = slice.coords[[i, 0]];
            coords[[r, 1]] = slice.coords[[i, 1]];
            slice_of.push(s);
            barcodes.push(slice.barcodes[i].clone());
            r += 1;
        }
    }

    Ok(Dataset {
        x,
        coords,
        slice_of,
        slice_names,
        gene_names,
        barcodes,
        truth: None,
    })
}

/// Manifest to trained-ready dataset in one call.
pub fn load_dataset(manifest: &Path, n_top: usize) -> Result<Dataset> {
    let slices = load_manifest(manifest)?;
    let slices = intersect_genes(slices)?;
    let slices = normalize(slices)?;
    select_hvg(slices, n_top)
}

/// Reads a `spot_barcode,label` CSV (header required) into pairs.
pub fn read_labels_csv(path: &Path) -> Result<Vec<(String, String)>> {
    let rows = read_table(path)?;
    if rows.is_empty() {
        return Err(Error::data(format!("{}: empty labels file", path.display())));
    }
    let mut out = Vec::with_capacity(rows.len() - 1);
    for (i, row) in rows[1..].iter().enumerate() {
        if row.len() < 2 {
            return Err(Error::data(format!(
                "{}: row {} has {} fields, expected 2",
                path.display(),
                i + 1,
                row.len()
            )));
        }
        out.push((row[0].clone(), row[1].clone()));
    }
    Ok(out)
}

/// Maps label strings to dense codes by order of first appearance.
pub fn encode_labels(labels: &[String]) -> Vec<usize> {
    let mut code_of: std::collections::BTreeMap<&str, usize> = Default::default();
    let mut next = 0;
    let mut codes = Vec::with_capacity(labels.len());
    for l in labels {
        let code = *code_of.entry(l.as_str()).or_insert_with(|| {
            let c = next;
            next += 1;
            c
        });
        codes.push(code);
    }
    codes
}
