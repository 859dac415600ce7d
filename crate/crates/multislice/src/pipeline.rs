//! Command implementations behind the CLI: synthetic data generation, the
//! full train-and-evaluate pipeline, training-free evaluation of existing
//! outputs, and the variant-by-seed ablation sweep.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ndarray::Array2;

use crate::config::RunConfig;
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::g2n;
use crate::graph::SpatialGraph;
use crate::ingest::{self, Dataset};
use crate::metrics::{self, MetricsReport};
use crate::synth;
use crate::train::{self, TrainResult, Variant};

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn distinct(labels: &[usize]) -> usize {
    labels.iter().collect::<std::collections::BTreeSet<_>>().len()
}

/// Generate a synthetic dataset under the output directory; returns the
/// manifest path.
pub fn cmd_synth(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.synth.validate()?;
    ensure_dir(&cfg.out_dir)?;
    synth::write_dataset(&cfg.synth, &cfg.out_dir)
}

/// Ground-truth labels: explicit config path first, otherwise
/// `truth_labels.csv` next to the manifest if it exists.
fn attach_truth(data: &mut Dataset, cfg: &RunConfig, manifest: &Path) -> Result<()> {
    let path = match &cfg.truth_labels {
        Some(p) => Some(p.clone()),
        None => {
            let candidate = manifest.parent().unwrap_or(Path::new(".")).join("truth_labels.csv");
            if candidate.is_file() {
                log::info!("using ground truth found at {}", candidate.display());
                Some(candidate)
            } else {
                None
            }
        }
    };
    if let Some(path) = path {
        data.truth = Some(read_aligned_labels(&path, &data.barcodes)?);
    }
    Ok(())
}

/// Reads a `spot_barcode,label` CSV and returns integer codes aligned to
/// `barcodes` order (codes by first appearance).
fn read_aligned_labels(path: &Path, barcodes: &[String]) -> Result<Vec<usize>> {
    let pairs = ingest::read_labels_csv(path)?;
    let by_barcode: BTreeMap<&str, &str> =
        pairs.iter().map(|(b, l)| (b.as_str(), l.as_str())).collect();
    let mut ordered = Vec::with_capacity(barcodes.len());
    for b in barcodes {
        let label = by_barcode.get(b.as_str()).ok_or_else(|| {
            Error::data(format!("{}: no label for spot {b:?}", path.display()))
        })?;
        ordered.push((*label).to_string());
    }
    Ok(ingest::encode_labels(&ordered))
}

/// All metrics for one embedding + labeling. `spatial` enables the
/// per-gene autocorrelation block on a denoised expression matrix.
pub fn compute_report(
    coords: &Array2<f64>,
    slice_of: &[usize],
    truth: Option<&[usize]>,
    labels: &[usize],
    h: &Array2<f64>,
    pas_k: usize,
    lisi_k: usize,
    spatial: Option<(&SpatialGraph, &Array2<f64>)>,
) -> Result<MetricsReport> {
    let (ari, nmi, hom, com, accuracy) = match truth {
        Some(t) => {
            let nmi_v = metrics::nmi(t, labels)?;
            let hom_v = metrics::hom(t, labels)?;
            let com_v = metrics::com(t, labels)?;
            (
                Some(metrics::ari(t, labels)?),
                Some(nmi_v),
                Some(hom_v),
                Some(com_v),
                Some(metrics::accuracy(nmi_v, hom_v, com_v)),
            )
        }
        None => (None, None, None, None, None),
    };

    let chaos = metrics::chaos(coords, labels)?;
    let pas = metrics::pas(coords, labels, pas_k)?;
    let consistency = metrics::consistency(chaos, pas);

    let lisi_batch_vec = metrics::lisi(h, slice_of, lisi_k)?;
    let domain_labels = truth.unwrap_or(labels);
    let lisi_domain_vec = metrics::lisi(h, domain_labels, lisi_k)?;
    let f1_lisi = metrics::f1_lisi(
        &lisi_batch_vec,
        &lisi_domain_vec,
        distinct(slice_of),
        distinct(domain_labels),
    )?;

    let (morans_i, gearys_c) = match spatial {
        Some((graph, z)) => {
            let w = metrics::spatial_weights(graph);
            let mut mi = Vec::with_capacity(z.ncols());
            let mut gc = Vec::with_capacity(z.ncols());
            for g in 0..z.ncols() {
                let x: Vec<f64> = z.column(g).to_vec();
                let constant = x.iter().all(|&v| v == x[0]);
                if constant {
                    mi.push(None);
                    gc.push(None);
                } else {
                    mi.push(Some(metrics::morans_i(&x, &w)?));
                    gc.push(Some(metrics::gearys_c(&x, &w)?));
                }
            }
            (Some(mi), Some(gc))
        }
        None => (None, None),
    };

    Ok(MetricsReport {
        ari,
        nmi,
        hom,
        com,
        accuracy,
        chaos,
        pas,
        consistency,
        lisi_batch: metrics::median(&lisi_batch_vec)?,
        lisi_domain: metrics::median(&lisi_domain_vec)?,
        f1_lisi,
        morans_i,
        gearys_c,
    })
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))?;
    w.write_record(header).map_err(|e| Error::data(e.to_string()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| Error::data(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn write_run_artifacts(
    cfg: &RunConfig,
    data: &Dataset,
    graph: &SpatialGraph,
    result: &TrainResult,
    labels: &[usize],
    report: &MetricsReport,
) -> Result<()> {
    let out = &cfg.out_dir;
    ensure_dir(out)?;

    let h_header: Vec<String> = std::iter::once("spot_barcode".to_string())
        .chain((0..result.h.ncols()).map(|c| format!("h{c}")))
        .collect();
    write_csv(
        &out.join("H.csv"),
        &h_header.iter().map(String::as_str).collect::<Vec<_>>(),
        data.barcodes.iter().enumerate().map(|(i, b)| {
            std::iter::once(b.clone())
                .chain(result.h.row(i).iter().map(|v| format!("{v}")))
                .collect()
        }),
    )?;

    let z_header: Vec<String> = std::iter::once("spot_barcode".to_string())
        .chain(data.gene_names.iter().cloned())
        .collect();
    write_csv(
        &out.join("Z.csv"),
        &z_header.iter().map(String::as_str).collect::<Vec<_>>(),
        data.barcodes.iter().enumerate().map(|(i, b)| {
            std::iter::once(b.clone())
                .chain(result.z.row(i).iter().map(|v| format!("{v}")))
                .collect()
        }),
    )?;

    write_csv(
        &out.join("labels.csv"),
        &["spot_barcode", "label"],
        data.barcodes
            .iter()
            .zip(labels)
            .map(|(b, l)| vec![b.clone(), l.to_string()]),
    )?;

    write_csv(
        &out.join("spots.csv"),
        &["spot_barcode", "slice", "x", "y"],
        data.barcodes.iter().enumerate().map(|(i, b)| {
            vec![
                b.clone(),
                data.slice_names[data.slice_of[i]].clone(),
                format!("{}", data.coords[[i, 0]]),
                format!("{}", data.coords[[i, 1]]),
            ]
        }),
    )?;

    std::fs::write(out.join("metrics.json"), report.to_json_string()?)?;

    write_csv(
        &out.join("loss_history.csv"),
        &["epoch", "l_rec", "l_dis", "l_tri", "l_total"],
        result.loss_history.iter().map(|r| {
            vec![
                r.epoch.to_string(),
                format!("{}", r.l_rec),
                format!("{}", r.l_dis),
                format!("{}", r.l_tri),
                format!("{}", r.l_total),
            ]
        }),
    )?;

    result.params.save_generator(&out.join("checkpoint.txt"))?;
    if cfg.train.variant.uses_discriminator() {
        result.params.save_discriminator(&out.join("checkpoint_disc.txt"))?;
        write_csv(
            &out.join("disc_accuracy.csv"),
            &["epoch", "accuracy"],
            result
                .disc_accuracy
                .iter()
                .map(|(e, a)| vec![e.to_string(), format!("{a}")]),
        )?;
    }

    if cfg.export_graph {
        graph.write_edge_list(&out.join("graph_edges.csv"))?;
    }
    if cfg.dump_triplets {
        if let (Some(set), Some(epoch)) = (&result.last_triplets, result.last_refresh_epoch) {
            g2n::write_triplets_csv(&out.join("triplets.csv"), set, epoch)?;
        }
    }
    Ok(())
}

/// Full pipeline: ingest, graph, train, cluster, evaluate, write artifacts.
pub fn cmd_run(cfg: &RunConfig) -> Result<MetricsReport> {
    cfg.validate_run()?;
    let manifest = cfg
        .manifest
        .clone()
        .ok_or_else(|| Error::config("no input manifest (set data.manifest or --manifest)"))?;
    let mut data = ingest::load_dataset(&manifest, cfg.n_top_genes)?;
    attach_truth(&mut data, cfg, &manifest)?;
    log::info!(
        "loaded {} spots, {} slices, {} genes",
        data.n_spots(),
        data.n_slices(),
        data.gene_names.len()
    );
    let graph = SpatialGraph::build(&data.coords, &data.slice_of, cfg.k_spatial)?;
    let result = train::train(&data.x, &data.slice_of, &graph, &cfg.train)?;
    let labels = metrics::cluster_latent(&result.h, cfg.domains, derive_seed(cfg.train.seed, 0, 7))?;
    let spatial = if cfg.spatial_stats { Some((&graph, &result.z)) } else { None };
    let report = compute_report(
        &data.coords,
        &data.slice_of,
        data.truth.as_deref(),
        &labels,
        &result.h,
        cfg.pas_k,
        cfg.lisi_k,
        spatial.map(|(g, z)| (g, z)),
    )?;
    write_run_artifacts(cfg, &data, &graph, &result, &labels, &report)?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    /// `spot_barcode,label` predictions.
    pub labels: PathBuf,
    /// `spot_barcode,slice,x,y` table as written by the run command.
    pub spots: PathBuf,
    /// Embedding CSV (`spot_barcode`, then one column per dimension).
    pub embedding: PathBuf,
    pub truth: Option<PathBuf>,
}

fn read_spots_csv(path: &Path) -> Result<(Vec<String>, Vec<String>, Array2<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| Error::data(e.to_string()))?.clone();
    let expected = ["spot_barcode", "slice", "x", "y"];
    if headers.iter().ne(expected) {
        return Err(Error::data(format!(
            "{}: expected header spot_barcode,slice,x,y, got {headers:?}",
            path.display()
        )));
    }
    let mut barcodes = Vec::new();
    let mut slices = Vec::new();
    let mut xy = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::data(e.to_string()))?;
        barcodes.push(record[0].to_string());
        slices.push(record[1].to_string());
        for c in [2, 3] {
            let v: f64 = record[c].parse().map_err(|_| {
                Error::data(format!("{}: bad coordinate {:?}", path.display(), &record[c]))
            })?;
            xy.push(v);
        }
    }
    if barcodes.is_empty() {
        return Err(Error::data(format!("{}: no spots", path.display())));
    }
    let coords = Array2::from_shape_vec((barcodes.len(), 2), xy)
        .expect("two coordinates pushed per row");
    Ok((barcodes, slices, coords))
}

fn read_matrix_csv(path: &Path, barcodes: &[String]) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    let width = reader.headers().map_err(|e| Error::data(e.to_string()))?.len();
    if width < 2 {
        return Err(Error::data(format!("{}: no value columns", path.display())));
    }
    let mut by_barcode: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::data(e.to_string()))?;
        if record.len() != width {
            return Err(Error::data(format!(
                "{}: row has {} fields, header has {width}",
                path.display(),
                record.len()
            )));
        }
        let mut values = Vec::with_capacity(width - 1);
        for field in record.iter().skip(1) {
            values.push(field.parse().map_err(|_| {
                Error::data(format!("{}: bad value {field:?}", path.display()))
            })?);
        }
        by_barcode.insert(record[0].to_string(), values);
    }
    let mut out = Array2::zeros((barcodes.len(), width - 1));
    for (i, b) in barcodes.iter().enumerate() {
        let row = by_barcode
            .get(b)
            .ok_or_else(|| Error::data(format!("{}: no row for spot {b:?}", path.display())))?;
        for (c, &v) in row.iter().enumerate() {
            out[[i, c]] = v;
        }
    }
    Ok(out)
}

/// Metrics without training, from files a previous run (or another tool)
/// produced. Writes `metrics.json` into the output directory.
pub fn cmd_eval(cfg: &RunConfig, args: &EvalArgs) -> Result<MetricsReport> {
    let (barcodes, slice_names, coords) = read_spots_csv(&args.spots)?;
    let slice_of = ingest::encode_labels(&slice_names);
    let labels = read_aligned_labels(&args.labels, &barcodes)?;
    let h = read_matrix_csv(&args.embedding, &barcodes)?;
    let truth = match &args.truth {
        Some(p) => Some(read_aligned_labels(p, &barcodes)?),
        None => None,
    };
    let report = compute_report(
        &coords,
        &slice_of,
        truth.as_deref(),
        &labels,
        &h,
        cfg.pas_k,
        cfg.lisi_k,
        None,
    )?;
    ensure_dir(&cfg.out_dir)?;
    std::fs::write(cfg.out_dir.join("metrics.json"), report.to_json_string()?)?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub variant: Variant,
    pub seed: u64,
    pub report: MetricsReport,
}

/// Every variant over `n_seeds` consecutive seeds, in a fixed order
/// (variant-major, seed ascending). Runs are independent and execute on a
/// small thread pool; results are ordered by job index, not completion.
pub fn cmd_ablate(cfg: &RunConfig) -> Result<Vec<AblationRow>> {
    cfg.validate_run()?;
    let manifest = cfg
        .manifest
        .clone()
        .ok_or_else(|| Error::config("no input manifest (set data.manifest or --manifest)"))?;
    let mut data = ingest::load_dataset(&manifest, cfg.n_top_genes)?;
    attach_truth(&mut data, cfg, &manifest)?;
    let graph = SpatialGraph::build(&data.coords, &data.slice_of, cfg.k_spatial)?;

    let jobs: Vec<(Variant, u64)> = Variant::all()
        .into_iter()
        .flat_map(|v| (0..cfg.n_seeds as u64).map(move |i| (v, cfg.train.seed + i)))
        .collect();

    let results: Vec<Mutex<Option<Result<AblationRow>>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism().map_or(1, |p| p.get()).min(jobs.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= jobs.len() {
                    break;
                }
                let (variant, seed) = jobs[idx];
                let outcome = run_one_ablation(cfg, &data, &graph, variant, seed);
                *results[idx].lock().expect("result slot poisoned") = Some(outcome);
            });
        }
    });

    let mut rows = Vec::with_capacity(jobs.len());
    for slot in results {
        rows.push(slot.into_inner().expect("result slot poisoned").expect("worker filled slot")?);
    }

    ensure_dir(&cfg.out_dir)?;
    write_ablation_csv(&cfg.out_dir.join("ablation.csv"), &rows)?;
    Ok(rows)
}

fn run_one_ablation(
    cfg: &RunConfig,
    data: &Dataset,
    graph: &SpatialGraph,
    variant: Variant,
    seed: u64,
) -> Result<AblationRow> {
    let mut train_cfg = cfg.train.clone();
    train_cfg.variant = variant;
    train_cfg.seed = seed;
    let result = train::train(&data.x, &data.slice_of, graph, &train_cfg)?;
    let labels = metrics::cluster_latent(&result.h, cfg.domains, derive_seed(seed, 0, 7))?;
    let report = compute_report(
        &data.coords,
        &data.slice_of,
        data.truth.as_deref(),
        &labels,
        &result.h,
        cfg.pas_k,
        cfg.lisi_k,
        None,
    )?;
    Ok(AblationRow { variant, seed, report })
}

fn opt_str(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

fn write_ablation_csv(path: &Path, rows: &[AblationRow]) -> Result<()> {
    write_csv(
        path,
        &[
            "variant",
            "seed",
            "ari",
            "nmi",
            "hom",
            "com",
            "accuracy",
            "chaos",
            "pas",
            "consistency",
            "lisi_batch",
            "lisi_domain",
            "f1_lisi",
        ],
        rows.iter().map(|r| {
            vec![
                r.variant.name().to_string(),
                r.seed.to_string(),
                opt_str(r.report.ari),
                opt_str(r.report.nmi),
                opt_str(r.report.hom),
                opt_str(r.report.com),
                opt_str(r.report.accuracy),
                format!("{}", r.report.chaos),
                format!("{}", r.report.pas),
                format!("{}", r.report.consistency),
                format!("{}", r.report.lisi_batch),
                format!("{}", r.report.lisi_domain),
                format!("{}", r.report.f1_lisi),
            ]
        }),
    )
}

/// Per-variant medians over seeds, as a printable table.
pub fn ablation_summary(rows: &[AblationRow]) -> String {
    let mut out = String::new();
    out.push_str("variant    median_ari  median_accuracy  median_f1_lisi  median_consistency\n");
    for variant in Variant::all() {
        let of_variant: Vec<&AblationRow> =
            rows.iter().filter(|r| r.variant == variant).collect();
        if of_variant.is_empty() {
            continue;
        }
        let med = |f: &dyn Fn(&AblationRow) -> Option<f64>| -> String {
            let vals: Vec<f64> = of_variant.iter().filter_map(|r| f(r)).collect();
            if vals.is_empty() {
                return "-".to_string();
            }
            format!("{:.4}", metrics::median(&vals).expect("non-empty"))
        };
        let line = format!(
            "{:<10} {:>10} {:>16} {:>15} {:>19}\n",
            variant.name(),
            med(&|r| r.report.ari),
            med(&|r| r.report.accuracy),
            med(&|r| Some(r.report.f1_lisi)),
            med(&|r| Some(r.report.consistency)),
        );
        out.push_str(&line);
    }
    out
}
