//! Spatial neighbor graphs.
//!
//! Each slice gets its own k-nearest-neighbor graph over spot coordinates;
//! the per-slice graphs are stacked block-diagonally so no edge ever crosses
//! a slice boundary. Convolution uses the renormalized adjacency
//! D^{-1/2} (A + I) D^{-1/2} built from the union-symmetrized KNN edges.

use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Indices of the k nearest points to each point (Euclidean, self excluded).
/// Distance ties break toward the smaller index, so results do not depend on
/// input perturbation order. Points beyond `n - 1` neighbors get all others.
pub fn knn_indices(coords: &[[f64; 2]], k: usize) -> Vec<Vec<usize>> {
    let n = coords.len();
    let mut out = Vec::with_capacity(n);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n {
        cand.clear();
        for (j, c) in coords.iter().enumerate() {
            if j == i {
                continue;
            }
            let dx = coords[i][0] - c[0];
            let dy = coords[i][1] - c[1];
            cand.push((dx * dx + dy * dy, j));
        }
        cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        out.push(cand.iter().take(k).map(|&(_, j)| j).collect());
    }
    out
}

/// Block-diagonal spatial graph over all slices.
#[derive(Debug, Clone)]
pub struct SpatialGraph {
    /// Symmetrized binary adjacency, no self-loops.
    pub adjacency: CsrMatrix,
    /// D^{-1/2} (A + I) D^{-1/2}.
    pub a_norm: CsrMatrix,
    /// Degree of each spot including its self-loop.
    pub degrees: Vec<f64>,
    /// Neighbor count the graph was built with.
    pub k: usize,
}

impl SpatialGraph {
    /// Builds per-slice directed KNN graphs, symmetrizes each by edge union,
    /// and assembles the block-diagonal whole. `slice_ids[i]` assigns spot i
    /// to a slice; spots of a slice need not be contiguous.
    pub fn build(coords: &Array2<f64>, slice_ids: &[usize], k: usize) -> Result<SpatialGraph> {
        let n = coords.nrows();
        if coords.ncols() != 2 {
            return Err(Error::data(format!(
                "coordinates must be n x 2, got {:?}",
                coords.dim()
            )));
        }
        if slice_ids.len() != n {
            return Err(Error::data(format!(
                "slice id count {} does not match {} spots",
                slice_ids.len(),
                n
            )));
        }
        if k == 0 {
            return Err(Error::config("spatial k must be at least 1"));
        }
        if !coords.iter().all(|v| v.is_finite()) {
            return Err(Error::data("non-finite spot coordinate"));
        }

        let n_slices = slice_ids.iter().copied().max().map_or(0, |m| m + 1);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_slices];
        for (i, &s) in slice_ids.iter().enumerate() {
            members[s].push(i);
        }

        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        for (s, local) in members.iter().enumerate() {
            if local.len() < 2 {
                return Err(Error::data(format!(
                    "slice {s} has {} spot(s); need at least 2 to build a neighbor graph",
                    local.len()
                )));
            }
            let pts: Vec<[f64; 2]> = local
                .iter()
                .map(|&i| [coords[[i, 0]], coords[[i, 1]]])
                .collect();
            for (a, neigh) in knn_indices(&pts, k).into_iter().enumerate() {
                for b in neigh {
                    let (gi, gj) = (local[a], local[b]);
                    // Union symmetrization: insert both directions.
                    triplets.push((gi, gj, 1.0));
                    triplets.push((gj, gi, 1.0));
                }
            }
        }
        // from_triplets sums duplicates; clamp back to binary.
        let mut adjacency = CsrMatrix::from_triplets(n, n, triplets);
        adjacency.data_mut().iter_mut().for_each(|v| *v = 1.0);

        let mut degrees = adjacency.row_sums();
        degrees.iter_mut().for_each(|d| *d += 1.0); // self-loop
        let mut norm_triplets: Vec<(usize, usize, f64)> =
            Vec::with_capacity(adjacency.nnz() + n);
        for (i, j, _) in adjacency.iter() {
            norm_triplets.push((i, j, 1.0 / (degrees[i] * degrees[j]).sqrt()));
        }
        for (i, &d) in degrees.iter().enumerate() {
            norm_triplets.push((i, i, 1.0 / d));
        }
        let a_norm = CsrMatrix::from_triplets(n, n, norm_triplets);

        Ok(SpatialGraph {
            adjacency,
            a_norm,
            degrees,
            k,
        })
    }

    pub fn n_spots(&self) -> usize {
        self.adjacency.nrows()
    }

    /// Writes the normalized adjacency as a `src,dst,weight` CSV edge list.
    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "src,dst,weight")?;
        for (i, j, w) in self.a_norm.iter() {
            writeln!(f, "{i},{j},{w}")?;
        }
        Ok(())
    }
}
