//! Cross-slice anchor pairing.
//!
//! For every anchor spot, candidate positives are the globally most similar
//! spots pooled over all other slices (one retrieval pass per anchor slice,
//! not one per slice pair). The candidates are filtered to those sharing the
//! anchor's k-means cluster, subsampled, and matched with same-slice
//! negatives from different clusters. A mutual-nearest-neighbor selector
//! over slice pairs is kept as the baseline for pass-count and pair-purity
//! comparisons.

use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::derive_seed;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct G2NConfig {
    /// Top candidates retained by cross-slice similarity.
    pub kg: usize,
    /// Cluster count for the global semantic filter.
    pub kc: usize,
    /// Positive budget per anchor; n_pos/2 positives are sampled.
    pub n_pos: usize,
    pub seed: u64,
}

impl Default for G2NConfig {
    fn default() -> Self {
        G2NConfig { kg: 50, kc: 4, n_pos: 10, seed: 0 }
    }
}

impl G2NConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kg == 0 {
            return Err(Error::config("kg must be at least 1"));
        }
        if self.kc < 2 {
            return Err(Error::config("kc must be at least 2"));
        }
        if self.n_pos < 2 || self.n_pos % 2 != 0 {
            return Err(Error::config("n_pos must be even and at least 2"));
        }
        Ok(())
    }
}

/// Anchor/positive/negative index triples plus the margin they will be
/// trained with.
#[derive(Debug, Clone)]
pub struct TripletSet {
    pub triples: Vec<[usize; 3]>,
    pub tau: f64,
}

impl TripletSet {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// (anchor, positive) pairs, for purity measurements.
    pub fn positive_pairs(&self) -> Vec<(usize, usize)> {
        self.triples.iter().map(|t| (t[0], t[1])).collect()
    }
}

/// Counts candidate-retrieval passes so the linear-vs-quadratic scaling of
/// the two selectors is observable.
#[derive(Debug, Clone, Default)]
pub struct PassCounter {
    pub passes: usize,
}

// ── k-means ────────────────────────────────────────────────────────────

fn sq_dist(a: &Array2<f64>, i: usize, center: &[f64]) -> f64 {
    let mut d = 0.0;
    for (c, v) in center.iter().enumerate() {
        let diff = a[[i, c]] - v;
        d += diff * diff;
    }
    d
}

/// Lloyd's algorithm with k-means++ seeding, at most 100 iterations,
/// assignment ties broken toward the lower cluster id. Empty clusters are
/// repaired by moving in the point farthest from its own centroid. Runs 10
/// restarts on sub-seeds derived from `seed` and keeps the lowest-inertia
/// labeling (ties toward the earliest restart), so the result is still a
/// deterministic function of the inputs.
pub fn kmeans(data: &Array2<f64>, k: usize, seed: u64) -> Result<Vec<usize>> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..10 {
        let (labels, inertia) = kmeans_once(data, k, derive_seed(seed, restart, 11))?;
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    Ok(best.expect("at least one restart ran").1)
}

fn kmeans_once(data: &Array2<f64>, k: usize, seed: u64) -> Result<(Vec<usize>, f64)> {
    let n = data.nrows();
    let dim = data.ncols();
    if k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    if n < k {
        return Err(Error::data(format!("cannot split {n} points into {k} clusters")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding.
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let first = rand::Rng::random_range(&mut rng, 0..n);
    centers.push(data.row(first).to_vec());
    let mut best_d2: Vec<f64> = (0..n).map(|i| sq_dist(data, i, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = best_d2.iter().sum();
        let pick = if total > 0.0 {
            let u = rand::Rng::random_range(&mut rng, 0.0..total);
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, d) in best_d2.iter().enumerate() {
                acc += d;
                if u < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All remaining mass at distance zero (duplicate points).
            rand::Rng::random_range(&mut rng, 0..n)
        };
        centers.push(data.row(pick).to_vec());
        for i in 0..n {
            best_d2[i] = best_d2[i].min(sq_dist(data, i, centers.last().unwrap()));
        }
    }

    let mut labels = vec![0_usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..n {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(data, i, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }

        let mut counts = vec![0_usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        for empty in 0..k {
            if counts[empty] > 0 {
                continue;
            }
            // Farthest point whose cluster can spare it.
            let mut worst = (f64::NEG_INFINITY, usize::MAX);
            for i in 0..n {
                if counts[labels[i]] < 2 {
                    continue;
                }
                let d = sq_dist(data, i, &centers[labels[i]]);
                if d > worst.0 {
                    worst = (d, i);
                }
            }
            let i = worst.1;
            counts[labels[i]] -= 1;
            labels[i] = empty;
            counts[empty] = 1;
            changed = true;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        for i in 0..n {
            for c in 0..dim {
                sums[labels[i]][c] += data[[i, c]];
            }
        }
        for (c, sum) in sums.iter().enumerate() {
            for (j, v) in sum.iter().enumerate() {
                centers[c][j] = v / counts[c] as f64;
            }
        }
        if !changed {
            break;
        }
    }
    let inertia: f64 = (0..n).map(|i| sq_dist(data, i, &centers[labels[i]])).sum();
    Ok((labels, inertia))
}

// ── similarity helpers ─────────────────────────────────────────────────

fn row_norms(h: &Array2<f64>) -> Vec<f64> {
    h.rows()
        .into_iter()
        .map(|r| (r.iter().map(|v| v * v).sum::<f64>() + 1e-12).sqrt())
        .collect()
}

fn cosine(h: &Array2<f64>, norms: &[f64], i: usize, j: usize) -> f64 {
    let mut dot = 0.0;
    for c in 0..h.ncols() {
        dot += h[[i, c]] * h[[j, c]];
    }
    dot / (norms[i] * norms[j])
}

/// Indices of the top-k `candidates` by cosine similarity to `i`,
/// descending, ties toward the smaller index.
fn top_k_similar(
    h: &Array2<f64>,
    norms: &[f64],
    i: usize,
    candidates: &[usize],
    k: usize,
) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .map(|&j| (cosine(h, norms, i, j), j))
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    scored.iter().take(k).map(|&(_, j)| j).collect()
}

fn slice_members(slice_of: &[usize]) -> Vec<Vec<usize>> {
    let s = slice_of.iter().copied().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); s];
    for (i, &sl) in slice_of.iter().enumerate() {
        members[sl].push(i);
    }
    members
}

// ── selectors ──────────────────────────────────────────────────────────

/// One candidate-retrieval pass per anchor slice: rank all spots on the
/// other slices by similarity, keep the top kg, intersect with the anchor's
/// k-means cluster, sample n_pos/2 positives, and pair each with a
/// same-slice negative from a different cluster. Anchors with no surviving
/// candidates or no negatives are skipped.
pub fn select_g2n_pairs(
    h: &Array2<f64>,
    slice_of: &[usize],
    cfg: &G2NConfig,
    tau: f64,
    counter: &mut PassCounter,
) -> Result<TripletSet> {
    cfg.validate()?;
    let n = h.nrows();
    if slice_of.len() != n {
        return Err(Error::data(format!(
            "slice label count {} does not match {n} embedding rows",
            slice_of.len()
        )));
    }
    let members = slice_members(slice_of);
    if members.len() < 2 {
        return Err(Error::data("anchor pairing needs at least 2 slices"));
    }
    let labels = kmeans(h, cfg.kc, derive_seed(cfg.seed, 0, 1))?;
    let norms = row_norms(h);

    let mut triples = Vec::new();
    for (s, anchors) in members.iter().enumerate() {
        counter.passes += 1;
        let others: Vec<usize> = (0..n).filter(|&j| slice_of[j] != s).collect();
        for &a in anchors {
            let candidates = top_k_similar(h, &norms, a, &others, cfg.kg);
            let filtered: Vec<usize> = candidates
                .into_iter()
                .filter(|&j| labels[j] == labels[a])
                .collect();
            if filtered.is_empty() {
                continue;
            }
            let neg_pool: Vec<usize> = anchors
                .iter()
                .copied()
                .filter(|&j| labels[j] != labels[a])
                .collect();
            if neg_pool.is_empty() {
                continue;
            }
            let want = (cfg.n_pos / 2).min(filtered.len()).min(neg_pool.len());
            let mut anchor_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, a as u64, 2));
            let pos_picks = rand::seq::index::sample(&mut anchor_rng, filtered.len(), want);
            let neg_picks = rand::seq::index::sample(&mut anchor_rng, neg_pool.len(), want);
            for (pi, ni) in pos_picks.into_iter().zip(neg_picks) {
                triples.push([a, filtered[pi], neg_pool[ni]]);
            }
        }
    }
    if triples.is_empty() {
        log::warn!("anchor selection produced no triples (degenerate clustering?)");
    }
    Ok(TripletSet { triples, tau })
}

/// Baseline: mutual top-k cosine neighbors for every unordered slice pair.
pub fn select_mnn_pairs(
    h: &Array2<f64>,
    slice_of: &[usize],
    k: usize,
    counter: &mut PassCounter,
) -> Result<Vec<(usize, usize)>> {
    if k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    let n = h.nrows();
    if slice_of.len() != n {
        return Err(Error::data(format!(
            "slice label count {} does not match {n} embedding rows",
            slice_of.len()
        )));
    }
    let members = slice_members(slice_of);
    if members.len() < 2 {
        return Err(Error::data("pairing needs at least 2 slices"));
    }
    let norms = row_norms(h);

    let mut pairs = Vec::new();
    for s in 0..members.len() {
        for t in (s + 1)..members.len() {
            counter.passes += 1;
            let fwd: Vec<Vec<usize>> = members[s]
                .iter()
                .map(|&i| top_k_similar(h, &norms, i, &members[t], k))
                .collect();
            let back: Vec<Vec<usize>> = members[t]
                .iter()
                .map(|&j| top_k_similar(h, &norms, j, &members[s], k))
                .collect();
            let pos_in_t: std::collections::BTreeMap<usize, usize> =
                members[t].iter().enumerate().map(|(idx, &j)| (j, idx)).collect();
            for (ai, &i) in members[s].iter().enumerate() {
                for &j in &fwd[ai] {
                    if back[pos_in_t[&j]].contains(&i) {
                        pairs.push((i, j));
                    }
                }
            }
        }
    }
    Ok(pairs)
}

/// Fraction of pairs whose two spots share a true domain label.
pub fn pair_purity(pairs: &[(usize, usize)], truth: &[usize]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::data("no pairs to score"));
    }
    let matching = pairs.iter().filter(|&&(a, b)| truth[a] == truth[b]).count();
    Ok(matching as f64 / pairs.len() as f64)
}

/// Dump as `anchor,positive,negative,epoch` CSV.
pub fn write_triplets_csv(path: &Path, set: &TripletSet, epoch: usize) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "anchor,positive,negative,epoch")?;
    for t in &set.triples {
        writeln!(f, "{},{},{},{epoch}", t[0], t[1], t[2])?;
    }
    Ok(())
}
