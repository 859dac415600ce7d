//! Training orchestration: per-epoch mask resampling, alternating
//! discriminator/generator updates, staged anchor-pair activation after a
//! reconstruction-only warm-up, and final inference on the unmasked input.

use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{AdamState, Tape};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::g2n::{self, G2NConfig, PassCounter, TripletSet};
use crate::graph::SpatialGraph;
use crate::losses::{self, LossWeights};
use crate::model::{self, MaskPlan, ModelParams};
use crate::sparse::CsrMatrix;

/// Which loss terms participate in the generator objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Reconstruction − λ·adversarial + (1 − λ)·pairs.
    Full,
    /// Reconstruction only.
    OnlyMask,
    /// Reconstruction − λ·adversarial.
    MaskGan,
    /// Reconstruction + (1 − λ)·pairs.
    MaskG2n,
}

impl Variant {
    pub fn uses_discriminator(self) -> bool {
        matches!(self, Variant::Full | Variant::MaskGan)
    }

    pub fn uses_pairs(self) -> bool {
        matches!(self, Variant::Full | Variant::MaskG2n)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::OnlyMask => "only-mask",
            Variant::MaskGan => "mask-gan",
            Variant::MaskG2n => "mask-g2n",
        }
    }

    pub fn all() -> [Variant; 4] {
        [Variant::Full, Variant::OnlyMask, Variant::MaskGan, Variant::MaskG2n]
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Variant> {
        match s {
            "full" => Ok(Variant::Full),
            "only-mask" => Ok(Variant::OnlyMask),
            "mask-gan" => Ok(Variant::MaskGan),
            "mask-g2n" => Ok(Variant::MaskG2n),
            other => Err(Error::config(format!(
                "unknown variant {other:?} (expected full, only-mask, mask-gan, or mask-g2n)"
            ))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconLoss {
    Sce,
    Mse,
}

impl ReconLoss {
    pub fn name(self) -> &'static str {
        match self {
            ReconLoss::Sce => "sce",
            ReconLoss::Mse => "mse",
        }
    }
}

impl FromStr for ReconLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<ReconLoss> {
        match s {
            "sce" => Ok(ReconLoss::Sce),
            "mse" => Ok(ReconLoss::Mse),
            other => Err(Error::config(format!(
                "unknown reconstruction loss {other:?} (expected sce or mse)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairLoss {
    Triplet,
    Contrastive,
}

impl PairLoss {
    pub fn name(self) -> &'static str {
        match self {
            PairLoss::Triplet => "triplet",
            PairLoss::Contrastive => "contrastive",
        }
    }
}

impl FromStr for PairLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<PairLoss> {
        match s {
            "triplet" => Ok(PairLoss::Triplet),
            "contrastive" => Ok(PairLoss::Contrastive),
            other => Err(Error::config(format!(
                "unknown pair loss {other:?} (expected triplet or contrastive)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Reconstruction-only epochs before the adversarial and pair terms
    /// switch on.
    pub warmup_epochs: usize,
    /// Anchor pairs are rebuilt on the current inference embedding this
    /// often once warm-up ends.
    pub g2n_refresh_every: usize,
    /// Fraction of spots masked each epoch.
    pub rho: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub disc_steps_per_epoch: usize,
    pub seed: u64,
    pub variant: Variant,
    pub recon: ReconLoss,
    pub pair: PairLoss,
    pub weights: LossWeights,
    pub g2n: G2NConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 600,
            warmup_epochs: 200,
            g2n_refresh_every: 50,
            rho: 0.5,
            lr: 1e-3,
            weight_decay: 2e-4,
            disc_steps_per_epoch: 1,
            seed: 0,
            variant: Variant::Full,
            recon: ReconLoss::Sce,
            pair: PairLoss::Triplet,
            weights: LossWeights::default(),
            g2n: G2NConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.warmup_epochs > self.epochs {
            return Err(Error::config(format!(
                "warmup_epochs ({}) exceeds epochs ({})",
                self.warmup_epochs, self.epochs
            )));
        }
        if self.g2n_refresh_every == 0 {
            return Err(Error::config("g2n_refresh_every must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::config(format!("masking rate must be in [0, 1], got {}", self.rho)));
        }
        if self.lr <= 0.0 || !self.lr.is_finite() {
            return Err(Error::config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.weight_decay < 0.0 || !self.weight_decay.is_finite() {
            return Err(Error::config(format!(
                "weight decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if self.disc_steps_per_epoch == 0 {
            return Err(Error::config("disc_steps_per_epoch must be at least 1"));
        }
        self.weights.validate()?;
        if self.variant.uses_pairs() {
            self.g2n.validate()?;
        }
        Ok(())
    }
}

/// Loss terms recorded for one epoch. Terms a variant excludes are stored
/// as zero, so `l_rec − λ·l_dis + (1 − λ)·l_tri` always reproduces
/// `l_total`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub epoch: usize,
    pub l_rec: f64,
    pub l_dis: f64,
    pub l_tri: f64,
    pub l_total: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrainCounters {
    pub disc_updates: usize,
    pub triplet_builds: usize,
}

#[derive(Debug)]
pub struct TrainResult {
    pub params: ModelParams,
    /// Inference-mode latent embedding (unmasked input).
    pub h: Array2<f64>,
    /// Denoised expression from the same unmasked pass.
    pub z: Array2<f64>,
    pub loss_history: Vec<LossRecord>,
    /// (epoch, held-out discriminator accuracy); empty for variants
    /// without an adversary.
    pub disc_accuracy: Vec<(usize, f64)>,
    pub counters: TrainCounters,
    pub pass_counter: PassCounter,
    pub last_triplets: Option<TripletSet>,
    /// Epoch at which `last_triplets` was built.
    pub last_refresh_epoch: Option<usize>,
}

fn with_epoch<T>(epoch: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Numeric(m) => Error::Numeric(format!("epoch {epoch}: {m}")),
        other => other,
    })
}

/// Single unmasked forward pass: latent embedding and denoised expression.
pub fn infer(
    params: &ModelParams,
    x: &Array2<f64>,
    a_norm: &Rc<CsrMatrix>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let tape = Tape::new();
    let vars = params.register(&tape)?;
    let x_const = tape.constant(x.clone())?;
    let h = model::encode(&tape, x_const, a_norm, &vars)?;
    let z = model::decode(&tape, h, a_norm, &vars)?;
    Ok((tape.value(h), tape.value(z)))
}

fn masked_latent(
    params: &ModelParams,
    x: &Array2<f64>,
    plan: &MaskPlan,
    a_norm: &Rc<CsrMatrix>,
) -> Result<Array2<f64>> {
    let tape = Tape::new();
    let vars = params.register(&tape)?;
    let x_masked = model::apply_mask(&tape, x, plan, vars.mask_token)?;
    let h = model::encode(&tape, x_masked, a_norm, &vars)?;
    Ok(tape.value(h))
}

fn disc_step(
    params: &mut ModelParams,
    adam: &mut AdamState,
    h_detached: &Array2<f64>,
    slice_of: &[usize],
    plan: &MaskPlan,
) -> Result<()> {
    let tape = Tape::new();
    let vars = params.register(&tape)?;
    let h = tape.constant(h_detached.clone())?;
    let p = model::discriminate(&tape, h, &vars)?;
    let loss = losses::dis_loss(&tape, p, slice_of, &plan.masked_set)?;
    tape.backward(loss)?;
    let grads: Vec<Array2<f64>> = vars.discriminator().iter().map(|&v| tape.grad(v)).collect();
    let mut arrays = params.discriminator_arrays_mut();
    adam.step(&mut arrays, &grads);
    Ok(())
}

fn disc_accuracy_on(
    params: &ModelParams,
    h_detached: &Array2<f64>,
    slice_of: &[usize],
    heldout: &[usize],
) -> Result<f64> {
    let tape = Tape::new();
    let vars = params.register(&tape)?;
    let h = tape.constant(h_detached.clone())?;
    let p_var = model::discriminate(&tape, h, &vars)?;
    let p = tape.value(p_var);
    let correct = heldout
        .iter()
        .filter(|&&i| {
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for (c, &v) in p.row(i).iter().enumerate() {
                if v > best_v {
                    best_v = v;
                    best = c;
                }
            }
            best == slice_of[i]
        })
        .count();
    Ok(correct as f64 / heldout.len() as f64)
}

struct GenOutcome {
    l_rec: f64,
    l_dis: f64,
    l_tri: f64,
    l_total: f64,
}

#[allow(clippy::too_many_arguments)]
fn gen_step(
    params: &mut ModelParams,
    adam: &mut AdamState,
    x: &Array2<f64>,
    slice_of: &[usize],
    plan: &MaskPlan,
    a_norm: &Rc<CsrMatrix>,
    cfg: &TrainConfig,
    post_warmup: bool,
    triplets: Option<&TripletSet>,
) -> Result<GenOutcome> {
    let tape = Tape::new();
    let vars = params.register(&tape)?;
    let x_masked = model::apply_mask(&tape, x, plan, vars.mask_token)?;
    let h = model::encode(&tape, x_masked, a_norm, &vars)?;
    let z = model::decode(&tape, h, a_norm, &vars)?;
    let x_target = tape.constant(x.clone())?;
    let rec = match cfg.recon {
        ReconLoss::Sce => losses::sce_loss(&tape, x_target, z, &plan.masked_set, cfg.weights.gamma)?,
        ReconLoss::Mse => losses::mse_loss(&tape, x_target, z, &plan.masked_set)?,
    };

    let mut total = rec;
    let mut l_dis = 0.0;
    let mut l_tri = 0.0;
    if post_warmup && cfg.variant.uses_discriminator() {
        let p = model::discriminate(&tape, h, &vars)?;
        let dis = losses::dis_loss(&tape, p, slice_of, &plan.masked_set)?;
        l_dis = tape.scalar(dis);
        total = tape.sub(total, tape.scale(dis, cfg.weights.lambda)?)?;
    }
    if post_warmup && cfg.variant.uses_pairs() {
        let triples: &[[usize; 3]] = triplets.map_or(&[], |t| t.triples.as_slice());
        let tri = match cfg.pair {
            PairLoss::Triplet => losses::triplet_loss(&tape, h, triples, cfg.weights.tau)?,
            PairLoss::Contrastive => losses::contrastive_loss(&tape, h, triples)?,
        };
        l_tri = tape.scalar(tri);
        total = tape.add(total, tape.scale(tri, 1.0 - cfg.weights.lambda)?)?;
    }
    let l_total = tape.scalar(total);
    if !l_total.is_finite() {
        return Err(Error::numeric(format!("non-finite total loss {l_total}")));
    }

    tape.backward(total)?;
    let grads: Vec<Array2<f64>> = vars.generator().iter().map(|&v| tape.grad(v)).collect();
    let l_rec = tape.scalar(rec);
    let mut arrays = params.generator_arrays_mut();
    adam.step(&mut arrays, &grads);
    Ok(GenOutcome { l_rec, l_dis, l_tri, l_total })
}

/// Runs the full schedule and returns trained parameters plus inference
/// outputs. Deterministic in the config seed.
pub fn train(
    x: &Array2<f64>,
    slice_of: &[usize],
    graph: &SpatialGraph,
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    cfg.validate()?;
    let (n, n_genes) = x.dim();
    if slice_of.len() != n {
        return Err(Error::data(format!("{n} expression rows vs {} slice labels", slice_of.len())));
    }
    if graph.n_spots() != n {
        return Err(Error::data(format!("{n} expression rows vs {} graph nodes", graph.n_spots())));
    }
    let n_slices = slice_of.iter().copied().max().map_or(0, |m| m + 1);
    if n_slices < 2 && (cfg.variant.uses_discriminator() || cfg.variant.uses_pairs()) {
        return Err(Error::data(format!(
            "variant {} needs at least 2 slices, got {n_slices}",
            cfg.variant
        )));
    }
    if cfg.epochs > 0 && (cfg.rho * n as f64).round() as usize == 0 {
        return Err(Error::config(format!(
            "masking rate {} leaves no spots masked out of {n}",
            cfg.rho
        )));
    }

    let mut params = ModelParams::init(n_genes, n_slices.max(2), derive_seed(cfg.seed, 0, 0))?;
    let gen_shapes: Vec<(usize, usize)> =
        params.generator_named().iter().map(|(_, a)| a.dim()).collect();
    let disc_shapes: Vec<(usize, usize)> =
        params.discriminator_named().iter().map(|(_, a)| a.dim()).collect();
    let mut gen_adam = AdamState::new(&gen_shapes, cfg.lr, cfg.weight_decay);
    let mut disc_adam = AdamState::new(&disc_shapes, cfg.lr, cfg.weight_decay);
    let a_norm = Rc::new(graph.a_norm.clone());

    // Fixed spot subset for tracking how well the adversary still separates
    // slices as training progresses.
    let heldout: Vec<usize> = if cfg.variant.uses_discriminator() {
        let count = (n / 10).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0, 3));
        let mut picks: Vec<usize> =
            rand::seq::index::sample(&mut rng, n, count).into_iter().collect();
        picks.sort_unstable();
        picks
    } else {
        Vec::new()
    };

    let mut triplets: Option<TripletSet> = None;
    let mut last_refresh_epoch = None;
    let mut counters = TrainCounters::default();
    let mut pass_counter = PassCounter::default();
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    let mut disc_accuracy = Vec::new();

    for epoch in 1..=cfg.epochs {
        let post_warmup = epoch > cfg.warmup_epochs;

        if cfg.variant.uses_pairs()
            && post_warmup
            && (epoch - cfg.warmup_epochs - 1) % cfg.g2n_refresh_every == 0
        {
            let h_now = with_epoch(epoch, model::infer_latent(&params, x, &a_norm))?;
            let mut pair_cfg = cfg.g2n.clone();
            pair_cfg.seed = derive_seed(cfg.seed, epoch as u64, 4);
            let set = with_epoch(
                epoch,
                g2n::select_g2n_pairs(&h_now, slice_of, &pair_cfg, cfg.weights.tau, &mut pass_counter),
            )?;
            counters.triplet_builds += 1;
            triplets = Some(set);
            last_refresh_epoch = Some(epoch);
        }

        let plan = MaskPlan::sample(n, cfg.rho, derive_seed(cfg.seed, epoch as u64, 1))?;

        if cfg.variant.uses_discriminator() {
            let h_detached = with_epoch(epoch, masked_latent(&params, x, &plan, &a_norm))?;
            for _ in 0..cfg.disc_steps_per_epoch {
                with_epoch(
                    epoch,
                    disc_step(&mut params, &mut disc_adam, &h_detached, slice_of, &plan),
                )?;
                counters.disc_updates += 1;
            }
            let acc =
                with_epoch(epoch, disc_accuracy_on(&params, &h_detached, slice_of, &heldout))?;
            disc_accuracy.push((epoch, acc));
        }

        let out = with_epoch(
            epoch,
            gen_step(
                &mut params,
                &mut gen_adam,
                x,
                slice_of,
                &plan,
                &a_norm,
                cfg,
                post_warmup,
                triplets.as_ref(),
            ),
        )?;
        loss_history.push(LossRecord {
            epoch,
            l_rec: out.l_rec,
            l_dis: out.l_dis,
            l_tri: out.l_tri,
            l_total: out.l_total,
        });
    }

    let (h, z) = infer(&params, x, &a_norm)?;
    Ok(TrainResult {
        params,
        h,
        z,
        loss_history,
        disc_accuracy,
        counters,
        pass_counter,
        last_triplets: triplets,
        last_refresh_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::D_LATENT;
    use crate::synth::SynthConfig;

    fn tiny_setup() -> (Array2<f64>, Vec<usize>, SpatialGraph) {
        let cfg = SynthConfig {
            n_slices: 2,
            grid_side: 4,
            n_domains: 2,
            n_genes: 30,
            seed: 7,
            ..SynthConfig::default()
        };
        let data = crate::synth::generate_dataset(&cfg, 20).unwrap();
        let graph = SpatialGraph::build(&data.coords, &data.slice_of, 3).unwrap();
        (data.x, data.slice_of, graph)
    }

    fn short_cfg(variant: Variant) -> TrainConfig {
        TrainConfig {
            epochs: 6,
            warmup_epochs: 2,
            g2n_refresh_every: 2,
            seed: 3,
            variant,
            g2n: G2NConfig { kg: 5, kc: 2, n_pos: 4, seed: 0 },
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_epochs_returns_initialized_model() {
        let (x, slice_of, graph) = tiny_setup();
        let cfg = TrainConfig {
            epochs: 0,
            warmup_epochs: 0,
            ..short_cfg(Variant::Full)
        };
        let result = train(&x, &slice_of, &graph, &cfg).unwrap();
        assert!(result.loss_history.is_empty());
        assert!(result.disc_accuracy.is_empty());
        assert_eq!(result.h.dim(), (32, D_LATENT));
        assert_eq!(result.z.dim(), x.dim());
        // H must be the inference output of the returned parameters.
        let a_norm = Rc::new(graph.a_norm.clone());
        let (h2, _) = infer(&result.params, &x, &a_norm).unwrap();
        assert_eq!(result.h, h2);
    }

    #[test]
    fn training_is_deterministic_in_the_seed() {
        let (x, slice_of, graph) = tiny_setup();
        let cfg = short_cfg(Variant::Full);
        let a = train(&x, &slice_of, &graph, &cfg).unwrap();
        let b = train(&x, &slice_of, &graph, &cfg).unwrap();
        assert_eq!(a.loss_history, b.loss_history);
        assert_eq!(a.h, b.h);
        assert_eq!(a.disc_accuracy, b.disc_accuracy);
    }

    #[test]
    fn recorded_terms_recombine_to_the_total() {
        let (x, slice_of, graph) = tiny_setup();
        for variant in Variant::all() {
            let cfg = short_cfg(variant);
            let result = train(&x, &slice_of, &graph, &cfg).unwrap();
            assert_eq!(result.loss_history.len(), cfg.epochs);
            let lambda = cfg.weights.lambda;
            for r in &result.loss_history {
                let recombined = (r.l_rec - lambda * r.l_dis) + (1.0 - lambda) * r.l_tri;
                assert!(
                    (recombined - r.l_total).abs() < 1e-12,
                    "{variant} epoch {}: {recombined} vs {}",
                    r.epoch,
                    r.l_total
                );
            }
        }
    }

    #[test]
    fn variants_touch_only_their_own_machinery() {
        let (x, slice_of, graph) = tiny_setup();

        let only_mask = train(&x, &slice_of, &graph, &short_cfg(Variant::OnlyMask)).unwrap();
        assert_eq!(only_mask.counters, TrainCounters { disc_updates: 0, triplet_builds: 0 });
        assert!(only_mask.disc_accuracy.is_empty());
        assert!(only_mask.last_triplets.is_none());
        assert_eq!(only_mask.pass_counter.passes, 0);

        let mask_gan = train(&x, &slice_of, &graph, &short_cfg(Variant::MaskGan)).unwrap();
        assert_eq!(mask_gan.counters, TrainCounters { disc_updates: 6, triplet_builds: 0 });
        assert_eq!(mask_gan.disc_accuracy.len(), 6);

        // Epochs 3 and 5 are the post-warm-up refresh points.
        let mask_g2n = train(&x, &slice_of, &graph, &short_cfg(Variant::MaskG2n)).unwrap();
        assert_eq!(mask_g2n.counters, TrainCounters { disc_updates: 0, triplet_builds: 2 });
        assert_eq!(mask_g2n.pass_counter.passes, 4, "2 builds x 2 slices");
        assert!(mask_g2n.last_triplets.is_some());

        let full = train(&x, &slice_of, &graph, &short_cfg(Variant::Full)).unwrap();
        assert_eq!(full.counters, TrainCounters { disc_updates: 6, triplet_builds: 2 });
    }

    #[test]
    fn warmup_records_zero_for_disabled_terms() {
        let (x, slice_of, graph) = tiny_setup();
        let result = train(&x, &slice_of, &graph, &short_cfg(Variant::Full)).unwrap();
        for r in &result.loss_history {
            if r.epoch <= 2 {
                assert_eq!(r.l_dis, 0.0, "epoch {}", r.epoch);
                assert_eq!(r.l_tri, 0.0, "epoch {}", r.epoch);
                assert_eq!(r.l_rec, r.l_total);
            }
        }
        // Cross-entropy of a softmax is strictly positive, so the recorded
        // adversarial term must be nonzero once it is active.
        assert!(result.loss_history.iter().any(|r| r.epoch > 2 && r.l_dis > 0.0));
    }

    #[test]
    fn reconstruction_loss_decreases_under_training() {
        let (x, slice_of, graph) = tiny_setup();
        let cfg = TrainConfig {
            epochs: 40,
            warmup_epochs: 40,
            variant: Variant::OnlyMask,
            seed: 1,
            ..TrainConfig::default()
        };
        let result = train(&x, &slice_of, &graph, &cfg).unwrap();
        let first: f64 = result.loss_history[..5].iter().map(|r| r.l_rec).sum::<f64>() / 5.0;
        let last: f64 = result.loss_history[35..].iter().map(|r| r.l_rec).sum::<f64>() / 5.0;
        assert!(last < first, "no progress: first {first}, last {last}");
    }

    #[test]
    fn exploding_run_reports_the_epoch() {
        let (x, slice_of, graph) = tiny_setup();
        let cfg = TrainConfig {
            lr: 1e160,
            epochs: 4,
            warmup_epochs: 4,
            variant: Variant::OnlyMask,
            ..TrainConfig::default()
        };
        let err = train(&x, &slice_of, &graph, &cfg).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("epoch"), "missing epoch context: {msg}");
    }

    #[test]
    fn adversarial_variants_demand_multiple_slices() {
        let (x, _, _) = tiny_setup();
        let n = x.nrows();
        let coords = Array2::from_shape_fn((n, 2), |(i, c)| if c == 0 { i as f64 } else { 0.0 });
        let one_slice = vec![0; n];
        let graph = SpatialGraph::build(&coords, &one_slice, 3).unwrap();
        let err = train(&x, &one_slice, &graph, &short_cfg(Variant::MaskGan)).unwrap_err();
        assert!(err.to_string().contains("2 slices"), "{err}");
        // The reconstruction-only variant is fine with a single slice.
        let cfg = TrainConfig { epochs: 1, warmup_epochs: 1, ..short_cfg(Variant::OnlyMask) };
        assert!(train(&x, &one_slice, &graph, &cfg).is_ok());
    }

    #[test]
    fn config_validation_rejects_bad_schedules() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        assert!(TrainConfig { warmup_epochs: 601, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { rho: 1.5, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { disc_steps_per_epoch: 0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { lr: 0.0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { g2n_refresh_every: 0, ..ok }.validate().is_err());
    }

    #[test]
    fn names_round_trip_through_fromstr() {
        for v in Variant::all() {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("sce".parse::<ReconLoss>().unwrap(), ReconLoss::Sce);
        assert_eq!("mse".parse::<ReconLoss>().unwrap(), ReconLoss::Mse);
        assert_eq!("triplet".parse::<PairLoss>().unwrap(), PairLoss::Triplet);
        assert_eq!("contrastive".parse::<PairLoss>().unwrap(), PairLoss::Contrastive);
        assert!("fancy".parse::<Variant>().is_err());
    }
}
