//! Evaluation metrics: clustering agreement (ARI, NMI, homogeneity,
//! completeness), spatial coherence (CHAOS, PAS), batch mixing (LISI and its
//! F1 combination), and per-gene spatial autocorrelation (Moran's I,
//! Geary's C). Also hosts the PCA helper used for raw-data baselines.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SpatialGraph;
use crate::sparse::CsrMatrix;

/// Everything one evaluation produces. Agreement scores are `None` when no
/// ground-truth labels exist. Field order fixes the JSON key order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ari: Option<f64>,
    pub nmi: Option<f64>,
    pub hom: Option<f64>,
    pub com: Option<f64>,
    pub accuracy: Option<f64>,
    pub chaos: f64,
    pub pas: f64,
    pub consistency: f64,
    pub lisi_batch: f64,
    pub lisi_domain: f64,
    pub f1_lisi: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub morans_i: Option<Vec<Option<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gearys_c: Option<Vec<Option<f64>>>,
}

impl MetricsReport {
    /// Pretty JSON with a trailing newline. Key order follows the struct,
    /// so equal reports serialize to identical bytes.
    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::data(format!("metrics serialization failed: {e}")))?;
        s.push('\n');
        Ok(s)
    }
}

// ── label agreement ────────────────────────────────────────────────────

fn check_paired(a: &[usize], b: &[usize]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::data(format!(
            "label vectors differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::data("label vectors are empty"));
    }
    Ok(())
}

fn contingency(a: &[usize], b: &[usize]) -> BTreeMap<(usize, usize), usize> {
    let mut table = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_insert(0) += 1;
    }
    table
}

fn marginals(a: &[usize]) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for &x in a {
        *counts.entry(x).or_insert(0) += 1;
    }
    counts
}

fn choose2(n: usize) -> f64 {
    (n as f64) * (n as f64 - 1.0) / 2.0
}

/// Adjusted Rand index by pair counting. A zero adjustment denominator
/// (both labelings trivial) counts as perfect agreement.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    check_paired(a, b)?;
    if a.len() < 2 {
        return Err(Error::data("ARI needs at least 2 items"));
    }
    let index: f64 = contingency(a, b).values().map(|&n| choose2(n)).sum();
    let sum_a: f64 = marginals(a).values().map(|&n| choose2(n)).sum();
    let sum_b: f64 = marginals(b).values().map(|&n| choose2(n)).sum();
    let expected = sum_a * sum_b / choose2(a.len());
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

fn entropy_nats(counts: &BTreeMap<usize, usize>, n: usize) -> f64 {
    counts
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.ln()
        })
        .sum()
}

/// H(a | b) from the contingency table, in nats.
fn conditional_entropy(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let table = contingency(a, b);
    let b_counts = marginals(b);
    table
        .iter()
        .map(|(&(_, y), &c)| {
            let p = c as f64 / n;
            -p * ((c as f64 / b_counts[&y] as f64).ln())
        })
        .sum()
}

/// Mutual information normalized by the arithmetic mean of the two label
/// entropies; 0/0 counts as 1.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    check_paired(a, b)?;
    let n = a.len();
    let ha = entropy_nats(&marginals(a), n);
    let hb = entropy_nats(&marginals(b), n);
    let mi = ha - conditional_entropy(a, b);
    if ha + hb == 0.0 {
        return Ok(1.0);
    }
    Ok(mi / (0.5 * (ha + hb)))
}

/// Homogeneity of `pred` with respect to `truth`: 1 minus the fraction of
/// class entropy left unresolved inside predicted clusters.
pub fn hom(truth: &[usize], pred: &[usize]) -> Result<f64> {
    check_paired(truth, pred)?;
    let h_class = entropy_nats(&marginals(truth), truth.len());
    if h_class == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - conditional_entropy(truth, pred) / h_class)
}

/// Completeness of `pred` with respect to `truth`.
pub fn com(truth: &[usize], pred: &[usize]) -> Result<f64> {
    check_paired(truth, pred)?;
    let h_cluster = entropy_nats(&marginals(pred), pred.len());
    if h_cluster == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - conditional_entropy(pred, truth) / h_cluster)
}

pub fn accuracy(nmi: f64, hom: f64, com: f64) -> f64 {
    (nmi + hom + com) / 3.0
}

// ── spatial coherence ──────────────────────────────────────────────────

fn zscore_columns(coords: &Array2<f64>) -> Array2<f64> {
    let n = coords.nrows() as f64;
    let mut out = coords.clone();
    for c in 0..coords.ncols() {
        let col = coords.column(c);
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        for r in 0..coords.nrows() {
            out[[r, c]] = if sd > 0.0 { (coords[[r, c]] - mean) / sd } else { 0.0 };
        }
    }
    out
}

fn sq_dist_rows(x: &Array2<f64>, i: usize, j: usize) -> f64 {
    let mut d = 0.0;
    for c in 0..x.ncols() {
        let diff = x[[i, c]] - x[[j, c]];
        d += diff * diff;
    }
    d
}

/// Mean within-cluster nearest-neighbor edge length over globally z-scored
/// coordinates, weighted by cluster size. Lower means spatially tighter
/// clusters. Singleton clusters are skipped; error if nothing remains.
pub fn chaos(coords: &Array2<f64>, labels: &[usize]) -> Result<f64> {
    if coords.nrows() != labels.len() {
        return Err(Error::data(format!(
            "{} coordinate rows vs {} labels",
            coords.nrows(),
            labels.len()
        )));
    }
    let scaled = zscore_columns(coords);
    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        clusters.entry(l).or_default().push(i);
    }
    let mut weighted = 0.0;
    let mut total = 0_usize;
    for members in clusters.values() {
        if members.len() < 2 {
            continue;
        }
        let mut sum = 0.0;
        for &i in members {
            let nearest = members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| sq_dist_rows(&scaled, i, j))
                .fold(f64::INFINITY, f64::min);
            sum += nearest.sqrt();
        }
        weighted += sum;
        total += members.len();
    }
    if total == 0 {
        return Err(Error::data("all clusters are singletons"));
    }
    Ok(weighted / total as f64)
}

/// Euclidean k-nearest-neighbor indices over matrix rows, self excluded,
/// distance ties broken toward the smaller index.
fn knn_rows(x: &Array2<f64>, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = x.nrows();
    if n <= k {
        return Err(Error::data(format!("need more than {k} rows, got {n}")));
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut scored: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (sq_dist_rows(x, i, j), j))
            .collect();
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        out.push(scored.iter().take(k).map(|&(_, j)| j).collect());
    }
    Ok(out)
}

/// Fraction of spots disagreeing with the majority of their k spatial
/// nearest neighbors (strictly more than k/2 differing labels).
pub fn pas(coords: &Array2<f64>, labels: &[usize], k: usize) -> Result<f64> {
    if coords.nrows() != labels.len() {
        return Err(Error::data(format!(
            "{} coordinate rows vs {} labels",
            coords.nrows(),
            labels.len()
        )));
    }
    let neighbors = knn_rows(coords, k)?;
    let anomalous = neighbors
        .iter()
        .enumerate()
        .filter(|(i, nbrs)| {
            let differing = nbrs.iter().filter(|&&j| labels[j] != labels[*i]).count();
            2 * differing > k
        })
        .count();
    Ok(anomalous as f64 / labels.len() as f64)
}

pub fn consistency(chaos: f64, pas: f64) -> f64 {
    0.5 * (chaos + pas)
}

// ── batch mixing ───────────────────────────────────────────────────────

/// Per-spot inverse Simpson index of label proportions among the k nearest
/// embedding neighbors. 1 means a pure neighborhood; the label count is the
/// ceiling.
pub fn lisi(embedding: &Array2<f64>, labels: &[usize], k: usize) -> Result<Vec<f64>> {
    if embedding.nrows() != labels.len() {
        return Err(Error::data(format!(
            "{} embedding rows vs {} labels",
            embedding.nrows(),
            labels.len()
        )));
    }
    let neighbors = knn_rows(embedding, k)?;
    let mut out = Vec::with_capacity(labels.len());
    for nbrs in &neighbors {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &j in nbrs {
            *counts.entry(labels[j]).or_insert(0) += 1;
        }
        let simpson: f64 = counts
            .values()
            .map(|&c| {
                let p = c as f64 / k as f64;
                p * p
            })
            .sum();
        out.push(1.0 / simpson);
    }
    Ok(out)
}

/// Median; the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::data("median of empty vector"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

/// Harmonic combination of batch mixing (higher is better) and domain
/// purity (lower domain LISI is better), each median-normalized by its
/// label-count ceiling and clamped to [0, 1]. A 0/0 combination scores 0.
pub fn f1_lisi(
    lisi_batch: &[f64],
    lisi_domain: &[f64],
    n_batches: usize,
    n_domains: usize,
) -> Result<f64> {
    if n_batches < 2 {
        return Err(Error::data("need at least 2 batches"));
    }
    if n_domains < 2 {
        return Err(Error::data("need at least 2 domains"));
    }
    let batch_norm = ((median(lisi_batch)? - 1.0) / (n_batches as f64 - 1.0)).clamp(0.0, 1.0);
    let domain_norm = ((median(lisi_domain)? - 1.0) / (n_domains as f64 - 1.0)).clamp(0.0, 1.0);
    let num = 2.0 * (1.0 - domain_norm) * batch_norm;
    let den = (1.0 - domain_norm) + batch_norm;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

// ── spatial autocorrelation ────────────────────────────────────────────

/// Row-normalized spatial weights from the binary adjacency (self loops
/// excluded).
pub fn spatial_weights(graph: &SpatialGraph) -> CsrMatrix {
    let a = &graph.adjacency;
    let mut triplets = Vec::with_capacity(a.nnz());
    for i in 0..a.nrows() {
        let entries: Vec<(usize, f64)> = a.row(i).collect();
        let deg: f64 = entries.iter().map(|&(_, v)| v).sum();
        if deg == 0.0 {
            continue;
        }
        for (j, v) in entries {
            triplets.push((i, j, v / deg));
        }
    }
    CsrMatrix::from_triplets(a.nrows(), a.ncols(), triplets)
}

fn centered_stats(x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let ss: f64 = dev.iter().map(|d| d * d).sum();
    if ss == 0.0 {
        return Err(Error::data("zero variance"));
    }
    Ok((dev, ss))
}

/// Moran's I: positive for spatially smooth signals, near −1/(N−1) for
/// spatially random ones.
pub fn morans_i(x: &[f64], w: &CsrMatrix) -> Result<f64> {
    if x.len() != w.nrows() {
        return Err(Error::data(format!(
            "{} values vs {} weight rows",
            x.len(),
            w.nrows()
        )));
    }
    let (dev, ss) = centered_stats(x)?;
    let mut cross = 0.0;
    let mut w_sum = 0.0;
    for i in 0..w.nrows() {
        for (j, v) in w.row(i) {
            cross += v * dev[i] * dev[j];
            w_sum += v;
        }
    }
    Ok((x.len() as f64 / w_sum) * (cross / ss))
}

/// Geary's C: below 1 for spatially smooth signals, above 1 for
/// checkerboard-like ones.
pub fn gearys_c(x: &[f64], w: &CsrMatrix) -> Result<f64> {
    if x.len() != w.nrows() {
        return Err(Error::data(format!(
            "{} values vs {} weight rows",
            x.len(),
            w.nrows()
        )));
    }
    let (_, ss) = centered_stats(x)?;
    let mut cross = 0.0;
    let mut w_sum = 0.0;
    for i in 0..w.nrows() {
        for (j, v) in w.row(i) {
            let d = x[i] - x[j];
            cross += v * d * d;
            w_sum += v;
        }
    }
    Ok(((x.len() as f64 - 1.0) / (2.0 * w_sum)) * (cross / ss))
}

// ── embedding helpers ──────────────────────────────────────────────────

/// Cluster a latent embedding into the requested number of domains.
/// Labels are renumbered by first appearance so that the same partition
/// always gets the same codes, whatever order k-means assigned them in.
pub fn cluster_latent(h: &Array2<f64>, n_domains: usize, seed: u64) -> Result<Vec<usize>> {
    let raw = crate::g2n::kmeans(h, n_domains, seed)?;
    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out = Vec::with_capacity(raw.len());
    for label in raw {
        let next = remap.len();
        out.push(*remap.entry(label).or_insert(next));
    }
    Ok(out)
}

/// Principal component scores via power iteration on the implicit
/// covariance (columns are centered, components deflated by
/// Gram-Schmidt). Deterministic in the seed.
pub fn pca(x: &Array2<f64>, n_components: usize, seed: u64) -> Result<Array2<f64>> {
    let (n, d) = x.dim();
    if n_components == 0 || n_components > d.min(n) {
        return Err(Error::config(format!(
            "cannot extract {n_components} components from a {n} x {d} matrix"
        )));
    }
    let mut centered = x.clone();
    for c in 0..d {
        let mean = centered.column(c).sum() / n as f64;
        centered.column_mut(c).mapv_inplace(|v| v - mean);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut components: Vec<Vec<f64>> = Vec::with_capacity(n_components);
    for _ in 0..n_components {
        let mut v: Vec<f64> =
            (0..d).map(|_| rand::Rng::random_range(&mut rng, -1.0_f64..1.0)).collect();
        for _ in 0..200 {
            // w = Xcᵀ (Xc v), never forming the d x d covariance.
            let mut xv = vec![0.0; n];
            for i in 0..n {
                let mut s = 0.0;
                for c in 0..d {
                    s += centered[[i, c]] * v[c];
                }
                xv[i] = s;
            }
            let mut w = vec![0.0; d];
            for i in 0..n {
                for c in 0..d {
                    w[c] += centered[[i, c]] * xv[i];
                }
            }
            for prev in &components {
                let dot: f64 = w.iter().zip(prev).map(|(a, b)| a * b).sum();
                for (wc, pc) in w.iter_mut().zip(prev) {
                    *wc -= dot * pc;
                }
            }
            let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            for wc in &mut w {
                *wc /= norm;
            }
            v = w;
        }
        components.push(v);
    }
    let mut scores = Array2::zeros((n, n_components));
    for i in 0..n {
        for (c, comp) in components.iter().enumerate() {
            let mut s = 0.0;
            for j in 0..d {
                s += centered[[i, j]] * comp[j];
            }
            scores[[i, c]] = s;
        }
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph;
    use rand::Rng;

    // Pair-enumeration ARI, an independent oracle for the contingency
    // implementation.
    fn ari_by_pairs(a: &[usize], b: &[usize]) -> f64 {
        let n = a.len();
        let (mut n11, mut n00, mut n10, mut n01) = (0.0_f64, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                match (a[i] == a[j], b[i] == b[j]) {
                    (true, true) => n11 += 1.0,
                    (false, false) => n00 += 1.0,
                    (true, false) => n10 += 1.0,
                    (false, true) => n01 += 1.0,
                }
            }
        }
        let den = (n11 + n10) * (n10 + n00) + (n11 + n01) * (n01 + n00);
        if den == 0.0 {
            return 1.0;
        }
        2.0 * (n11 * n00 - n10 * n01) / den
    }

    // Entropy-identity oracles built from joint entropy rather than the
    // conditional sums the implementation uses.
    fn joint_entropy(a: &[usize], b: &[usize]) -> f64 {
        let pairs: Vec<usize> = a.iter().zip(b).map(|(&x, &y)| x * 1000 + y).collect();
        entropy_nats(&marginals(&pairs), pairs.len())
    }

    fn oracle_scores(truth: &[usize], pred: &[usize]) -> (f64, f64, f64) {
        let n = truth.len();
        let ht = entropy_nats(&marginals(truth), n);
        let hp = entropy_nats(&marginals(pred), n);
        let hj = joint_entropy(truth, pred);
        let mi = ht + hp - hj;
        let nmi = if ht + hp == 0.0 { 1.0 } else { mi / (0.5 * (ht + hp)) };
        let hom = if ht == 0.0 { 1.0 } else { 1.0 - (hj - hp) / ht };
        let com = if hp == 0.0 { 1.0 } else { 1.0 - (hj - ht) / hp };
        (nmi, hom, com)
    }

    #[test]
    fn ari_perfect_and_permuted() {
        let a = vec![0, 0, 1, 1];
        assert_eq!(ari(&a, &a).unwrap(), 1.0);
        assert_eq!(ari(&a, &[1, 1, 0, 0]).unwrap(), 1.0);
    }

    #[test]
    fn ari_crossed_toy_is_minus_half() {
        let got = ari(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert!((got - (-0.5)).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn agreement_scores_match_independent_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let n = rng.random_range(2..=12);
            let ka = rng.random_range(1..=4_usize);
            let kb = rng.random_range(1..=4_usize);
            let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..ka)).collect();
            let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..kb)).collect();
            assert!((ari(&a, &b).unwrap() - ari_by_pairs(&a, &b)).abs() < 1e-12);
            let (onmi, ohom, ocom) = oracle_scores(&a, &b);
            assert!((nmi(&a, &b).unwrap() - onmi).abs() < 1e-12);
            assert!((hom(&a, &b).unwrap() - ohom).abs() < 1e-12);
            assert!((com(&a, &b).unwrap() - ocom).abs() < 1e-12);
        }
    }

    #[test]
    fn hom_com_worked_examples() {
        let truth = vec![0, 0, 1, 1];
        // One predicted cluster resolves nothing but splits nothing.
        assert_eq!(hom(&truth, &[0, 0, 0, 0]).unwrap(), 0.0);
        assert_eq!(com(&truth, &[0, 0, 0, 0]).unwrap(), 1.0);
        // Full shattering is perfectly homogeneous, half complete.
        let shattered = vec![0, 1, 2, 3];
        assert!((hom(&truth, &shattered).unwrap() - 1.0).abs() < 1e-12);
        assert!((com(&truth, &shattered).unwrap() - 0.5).abs() < 1e-12);
        // Identical labelings max out everything.
        assert_eq!(nmi(&truth, &truth).unwrap(), 1.0);
        assert_eq!(hom(&truth, &truth).unwrap(), 1.0);
        assert_eq!(com(&truth, &truth).unwrap(), 1.0);
        // Degenerate 0/0 cases count as agreement.
        let flat = vec![0, 0, 0];
        assert_eq!(nmi(&flat, &flat).unwrap(), 1.0);
        assert_eq!(hom(&flat, &[0, 1, 2]).unwrap(), 1.0);
    }

    #[test]
    fn agreement_scores_are_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a: Vec<usize> = (0..30).map(|_| rng.random_range(0..3_usize)).collect();
        let b: Vec<usize> = (0..30).map(|_| rng.random_range(0..4_usize)).collect();
        let relabel_a: Vec<usize> = a.iter().map(|&x| [2, 0, 1][x]).collect();
        let relabel_b: Vec<usize> = b.iter().map(|&x| [3, 2, 1, 0][x]).collect();
        assert!((ari(&a, &b).unwrap() - ari(&relabel_a, &relabel_b).unwrap()).abs() < 1e-12);
        assert!((nmi(&a, &b).unwrap() - nmi(&relabel_a, &relabel_b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn accuracy_is_plain_mean() {
        assert_eq!(accuracy(1.0, 1.0, 1.0), 1.0);
        assert_eq!(accuracy(0.0, 0.0, 0.0), 0.0);
        assert!((accuracy(0.9, 0.6, 0.6) - 0.7).abs() < 1e-12);
    }

    fn tight_blobs() -> (Array2<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut coords = Array2::zeros((20, 2));
        let mut labels = Vec::new();
        for i in 0..20 {
            let (cx, cy, l) = if i < 10 { (0.0, 0.0, 0) } else { (100.0, 100.0, 1) };
            coords[[i, 0]] = cx + rng.random_range(-0.01..0.01);
            coords[[i, 1]] = cy + rng.random_range(-0.01..0.01);
            labels.push(l);
        }
        (coords, labels)
    }

    #[test]
    fn chaos_prefers_tight_clusters_over_shuffled_labels() {
        // Ten far-apart blob pairs. Cluster = blob keeps every 1-NN edge
        // inside a blob; rotating the labels by one spot forces every edge
        // to span two blobs.
        let mut coords = Array2::zeros((20, 2));
        for b in 0..10 {
            coords[[2 * b, 0]] = 100.0 * b as f64 - 0.005;
            coords[[2 * b + 1, 0]] = 100.0 * b as f64 + 0.005;
        }
        let labels: Vec<usize> = (0..20).map(|i| i / 2).collect();
        let rotated: Vec<usize> = (0..20).map(|i| labels[(i + 1) % 20]).collect();
        let tight = chaos(&coords, &labels).unwrap();
        let loose = chaos(&coords, &rotated).unwrap();
        assert!(tight < 0.01 * loose, "tight {tight} vs rotated {loose}");
    }

    #[test]
    fn chaos_of_duplicated_points_is_zero() {
        let coords = Array2::from_elem((6, 2), 3.0);
        assert_eq!(chaos(&coords, &[0, 0, 0, 1, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn chaos_penalizes_merging_far_blobs() {
        let (coords, labels) = tight_blobs();
        let split = chaos(&coords, &labels).unwrap();
        let merged = chaos(&coords, &vec![0; 20]).unwrap();
        assert!(merged <= split + 1e-15, "1-NN edges unchanged by merging here");
        // Force a cross-blob edge: one point per blob in its own cluster.
        let mut mixed = labels.clone();
        mixed[0] = 2;
        mixed[10] = 2;
        let bridged = chaos(&coords, &mixed).unwrap();
        assert!(bridged > split * 10.0, "bridged {bridged} vs split {split}");
    }

    #[test]
    fn chaos_rejects_all_singletons() {
        let coords = Array2::zeros((3, 2));
        assert!(chaos(&coords, &[0, 1, 2]).is_err());
    }

    fn grid_coords(side: usize) -> Array2<f64> {
        let mut coords = Array2::zeros((side * side, 2));
        for r in 0..side {
            for c in 0..side {
                coords[[r * side + c, 0]] = c as f64;
                coords[[r * side + c, 1]] = r as f64;
            }
        }
        coords
    }

    #[test]
    fn pas_is_zero_for_uniform_labels() {
        let coords = grid_coords(5);
        assert_eq!(pas(&coords, &vec![0; 25], 10).unwrap(), 0.0);
    }

    #[test]
    fn pas_counts_one_isolated_mislabel() {
        let coords = grid_coords(5);
        let mut labels = vec![0; 25];
        labels[12] = 1;
        let got = pas(&coords, &labels, 10).unwrap();
        assert!((got - 1.0 / 25.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn pas_on_random_labels_exceeds_binomial_floor() {
        let coords = grid_coords(20);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let labels: Vec<usize> = (0..400).map(|_| rng.random_range(0..2_usize)).collect();
        assert!(pas(&coords, &labels, 10).unwrap() > 0.2);
    }

    #[test]
    fn pas_requires_enough_spots() {
        let coords = grid_coords(3);
        assert!(pas(&coords, &vec![0; 9], 10).is_err());
    }

    #[test]
    fn consistency_is_plain_mean() {
        assert_eq!(consistency(0.0, 0.0), 0.0);
        assert!((consistency(0.2, 0.4) - 0.3).abs() < 1e-12);
        assert_eq!(consistency(1.0, 0.0), 0.5);
    }

    #[test]
    fn lisi_is_one_for_a_single_label() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let emb = Array2::from_shape_fn((40, 3), |_| rng.random_range(-1.0_f64..1.0));
        let vals = lisi(&emb, &vec![0; 40], 30).unwrap();
        assert!(vals.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn lisi_hits_two_on_a_fifteen_fifteen_split() {
        // 31 spots, k = 30: every neighborhood is "everyone else". With 16
        // zeros and 15 ones, a zero-labeled spot sees exactly 15/15 and
        // scores 2; a one-labeled spot sees 16/14 and scores 900/452.
        let mut emb = Array2::zeros((31, 1));
        for i in 0..31 {
            emb[[i, 0]] = i as f64;
        }
        let labels: Vec<usize> = (0..31).map(|i| usize::from(i >= 16)).collect();
        let vals = lisi(&emb, &labels, 30).unwrap();
        for (i, &v) in vals.iter().enumerate() {
            let expected = if i < 16 { 2.0 } else { 900.0 / 452.0 };
            assert!((v - expected).abs() < 1e-12, "spot {i}: {v}");
        }
    }

    #[test]
    fn lisi_is_bounded_by_label_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let emb = Array2::from_shape_fn((50, 4), |_| rng.random_range(-1.0_f64..1.0));
        let labels: Vec<usize> = (0..50).map(|_| rng.random_range(0..3_usize)).collect();
        for v in lisi(&emb, &labels, 30).unwrap() {
            assert!((1.0..=3.0 + 1e-12).contains(&v), "out of range: {v}");
        }
    }

    #[test]
    fn f1_lisi_endpoints_and_worked_value() {
        // Ideal: batches fully mixed, domains fully pure.
        assert_eq!(f1_lisi(&[2.0], &[1.0], 2, 2).unwrap(), 1.0);
        // No batch mixing at all.
        assert_eq!(f1_lisi(&[1.0], &[1.0], 2, 2).unwrap(), 0.0);
        // domain_norm 0.2 (median 2 of 6 domains), batch_norm 0.5
        // (median 2 of 3 batches): 2 * 0.8 * 0.5 / 1.3 = 8/13.
        let got = f1_lisi(&[2.0], &[2.0], 3, 6).unwrap();
        assert!((got - 8.0 / 13.0).abs() < 1e-12, "got {got}");
        // Degenerate 0/0.
        assert_eq!(f1_lisi(&[1.0], &[5.0], 2, 2).unwrap(), 0.0);
        assert!(f1_lisi(&[2.0], &[1.0], 1, 2).is_err());
        assert!(f1_lisi(&[2.0], &[1.0], 2, 1).is_err());
    }

    #[test]
    fn f1_lisi_is_always_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let b: Vec<f64> = (0..9).map(|_| rng.random_range(1.0..4.0)).collect();
            let d: Vec<f64> = (0..9).map(|_| rng.random_range(1.0..4.0)).collect();
            let f = f1_lisi(&b, &d, 4, 4).unwrap();
            assert!((0.0..=1.0).contains(&f), "f1 {f}");
        }
    }

    fn path_weights(n: usize) -> CsrMatrix {
        let coords: Vec<[f64; 2]> = (0..n).map(|i| [i as f64, 0.0]).collect();
        let mut flat = Array2::zeros((n, 2));
        for (i, c) in coords.iter().enumerate() {
            flat[[i, 0]] = c[0];
            flat[[i, 1]] = c[1];
        }
        let g = graph::SpatialGraph::build(&flat, &vec![0; n], 1).unwrap();
        spatial_weights(&g)
    }

    #[test]
    fn spatial_weights_rows_sum_to_one() {
        let w = path_weights(6);
        for i in 0..6 {
            let s: f64 = w.row(i).map(|(_, v)| v).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn moran_and_geary_on_gradient_and_checkerboard() {
        let w = path_weights(10);
        let gradient: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(morans_i(&gradient, &w).unwrap() > 0.0);
        assert!(gearys_c(&gradient, &w).unwrap() < 1.0);
        let checker: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(morans_i(&checker, &w).unwrap() < 0.0);
        assert!(gearys_c(&checker, &w).unwrap() > 1.0);
        assert!(morans_i(&vec![2.0; 10], &w).is_err());
    }

    #[test]
    fn moran_of_permuted_signal_concentrates_at_null() {
        let n = 30;
        let w = path_weights(n);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0_f64..1.0)).collect();
        let mut values = Vec::new();
        for _ in 0..200 {
            let mut perm = x.clone();
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                perm.swap(i, j);
            }
            values.push(morans_i(&perm, &w).unwrap());
        }
        let mean = values.iter().sum::<f64>() / 200.0;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 199.0;
        let se = (var / 200.0).sqrt();
        let null = -1.0 / (n as f64 - 1.0);
        assert!(
            (mean - null).abs() < 3.0 * se,
            "mean {mean}, null {null}, se {se}"
        );
    }

    #[test]
    fn pca_recovers_a_dominant_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let n = 80;
        let mut x = Array2::zeros((n, 3));
        for i in 0..n {
            let t = i as f64 / n as f64 * 10.0;
            x[[i, 0]] = 3.0 * t + rng.random_range(-0.01..0.01);
            x[[i, 1]] = -2.0 * t + rng.random_range(-0.01..0.01);
            x[[i, 2]] = rng.random_range(-0.01..0.01);
        }
        let scores = pca(&x, 2, 0).unwrap();
        assert_eq!(scores.dim(), (n, 2));
        // First score should be (anti)monotone in t.
        let first: Vec<f64> = (0..n).map(|i| scores[[i, 0]]).collect();
        let increasing = first.windows(2).all(|w| w[1] > w[0]);
        let decreasing = first.windows(2).all(|w| w[1] < w[0]);
        assert!(increasing || decreasing);
        // Scores of orthogonal components are uncorrelated.
        let dot: f64 = (0..n).map(|i| scores[[i, 0]] * scores[[i, 1]]).sum();
        let n0: f64 = (0..n).map(|i| scores[[i, 0]].powi(2)).sum::<f64>().sqrt();
        let n1: f64 = (0..n).map(|i| scores[[i, 1]].powi(2)).sum::<f64>().sqrt();
        assert!((dot / (n0 * n1)).abs() < 1e-6);
        assert_eq!(pca(&x, 2, 0).unwrap(), scores);
        assert!(pca(&x, 4, 0).is_err());
    }

    #[test]
    fn report_serializes_with_fixed_keys_and_nulls() {
        let report = MetricsReport {
            ari: None,
            nmi: None,
            hom: None,
            com: None,
            accuracy: None,
            chaos: 0.5,
            pas: 0.25,
            consistency: 0.375,
            lisi_batch: 1.5,
            lisi_domain: 1.25,
            f1_lisi: 0.5,
            morans_i: None,
            gearys_c: None,
        };
        let json = report.to_json_string().unwrap();
        let expected = "{\n  \"ari\": null,\n  \"nmi\": null,\n  \"hom\": null,\n  \"com\": null,\n  \"accuracy\": null,\n  \"chaos\": 0.5,\n  \"pas\": 0.25,\n  \"consistency\": 0.375,\n  \"lisi_batch\": 1.5,\n  \"lisi_domain\": 1.25,\n  \"f1_lisi\": 0.5\n}\n";
        assert_eq!(json, expected);
        let with_genes = MetricsReport {
            morans_i: Some(vec![Some(0.25), None]),
            gearys_c: Some(vec![Some(0.75), None]),
            ..report
        };
        let json = with_genes.to_json_string().unwrap();
        assert!(json.contains("\"morans_i\": [\n    0.25,\n    null\n  ]"));
        let back: MetricsReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.morans_i.unwrap()[0], Some(0.25));
    }

    #[test]
    fn length_mismatches_are_rejected() {
        assert!(ari(&[0, 1], &[0, 1, 2]).is_err());
        assert!(nmi(&[0], &[]).is_err());
        let coords = grid_coords(4);
        assert!(chaos(&coords, &[0; 3]).is_err());
        assert!(lisi(&coords, &[0; 3], 2).is_err());
    }

    #[test]
    fn cluster_labels_are_numbered_by_first_appearance() {
        let mut h = Array2::<f64>::zeros((9, 2));
        for i in 0..9 {
            h[[i, 0]] = (i / 3) as f64 * 50.0;
            h[[i, 1]] = i as f64 * 0.01;
        }
        let labels = cluster_latent(&h, 3, 123).unwrap();
        assert_eq!(labels, vec![0, 0, 0, 1, 1, 1, 2, 2, 2]);
        let again = cluster_latent(&h, 3, 987).unwrap();
        assert_eq!(labels, again, "canonical numbering is seed-independent here");
    }
}
