//! The network: feature masking, FC+GCN encoder, FC+GCN decoder, and the
//! slice discriminator, all expressed over autodiff primitives.
//!
//! Layer sizes are fixed: the encoder runs two biased FC layers
//! N_t -> 64 -> 32 with ReLU, then two bias-free graph convolutions
//! 32 -> 64 -> 16 (inner ReLU only). The decoder mirrors with one bias-free
//! FC 16 -> 64 under LeakyReLU and a final graph convolution back to N_t.
//! The discriminator is a plain 16 -> 64 -> 32 -> S MLP with row softmax.

use std::collections::BTreeMap;
use std::io::{BufRead, Write as _};
use std::path::Path;
use std::rc::Rc;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{glorot_uniform, Tape, Var};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub const ENC_FC_HIDDEN: usize = 64;
pub const D_F: usize = 32;
pub const GCN_HIDDEN: usize = 64;
pub const D_LATENT: usize = 16;
pub const DEC_HIDDEN: usize = 64;
pub const DISC_H1: usize = 64;
pub const DISC_H2: usize = 32;
pub const LEAKY_SLOPE: f64 = 0.01;

/// Which spots have their features replaced by the mask token this epoch.
#[derive(Debug, Clone)]
pub struct MaskPlan {
    pub rho: f64,
    /// Ascending, unique, |set| = round(rho * N).
    pub masked_set: Vec<usize>,
    pub seed: u64,
}

impl MaskPlan {
    pub fn sample(n_spots: usize, rho: f64, seed: u64) -> Result<MaskPlan> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::config(format!("masking rate must be in [0, 1], got {rho}")));
        }
        let count = (rho * n_spots as f64).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut masked_set: Vec<usize> =
            rand::seq::index::sample(&mut rng, n_spots, count).into_iter().collect();
        masked_set.sort_unstable();
        Ok(MaskPlan { rho, masked_set, seed })
    }
}

/// All trainable arrays, grouped into the generator (mask token, encoder,
/// decoder) and the discriminator.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub n_genes: usize,
    pub n_slices: usize,
    pub mask_token: Array2<f64>,
    pub enc_w_a: Array2<f64>,
    pub enc_b_a: Array2<f64>,
    pub enc_w_b: Array2<f64>,
    pub enc_b_b: Array2<f64>,
    pub enc_w0: Array2<f64>,
    pub enc_w1: Array2<f64>,
    pub dec_w0: Array2<f64>,
    pub dec_w1: Array2<f64>,
    pub disc_w1: Array2<f64>,
    pub disc_b1: Array2<f64>,
    pub disc_w2: Array2<f64>,
    pub disc_b2: Array2<f64>,
    pub disc_w3: Array2<f64>,
    pub disc_b3: Array2<f64>,
}

impl ModelParams {
    /// Glorot-uniform weights in a fixed draw order, zero biases, zero mask
    /// token.
    pub fn init(n_genes: usize, n_slices: usize, seed: u64) -> Result<ModelParams> {
        if n_slices < 2 {
            return Err(Error::config("need at least 2 slices to discriminate"));
        }
        if n_genes == 0 {
            return Err(Error::config("need at least 1 gene"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = |r: usize, c: usize| glorot_uniform(r, c, &mut rng);
        Ok(ModelParams {
            n_genes,
            n_slices,
            mask_token: Array2::zeros((1, n_genes)),
            enc_w_a: w(n_genes, ENC_FC_HIDDEN),
            enc_b_a: Array2::zeros((1, ENC_FC_HIDDEN)),
            enc_w_b: w(ENC_FC_HIDDEN, D_F),
            enc_b_b: Array2::zeros((1, D_F)),
            enc_w0: w(D_F, GCN_HIDDEN),
            enc_w1: w(GCN_HIDDEN, D_LATENT),
            dec_w0: w(D_LATENT, DEC_HIDDEN),
            dec_w1: w(DEC_HIDDEN, n_genes),
            disc_w1: w(D_LATENT, DISC_H1),
            disc_b1: Array2::zeros((1, DISC_H1)),
            disc_w2: w(DISC_H1, DISC_H2),
            disc_b2: Array2::zeros((1, DISC_H2)),
            disc_w3: w(DISC_H2, n_slices),
            disc_b3: Array2::zeros((1, n_slices)),
        })
    }

    pub fn generator_named(&self) -> Vec<(&'static str, &Array2<f64>)> {
        vec![
            ("mask_token", &self.mask_token),
            ("enc_w_a", &self.enc_w_a),
            ("enc_b_a", &self.enc_b_a),
            ("enc_w_b", &self.enc_w_b),
            ("enc_b_b", &self.enc_b_b),
            ("enc_w0", &self.enc_w0),
            ("enc_w1", &self.enc_w1),
            ("dec_w0", &self.dec_w0),
            ("dec_w1", &self.dec_w1),
        ]
    }

    pub fn generator_arrays_mut(&mut self) -> Vec<&mut Array2<f64>> {
        vec![
            &mut self.mask_token,
            &mut self.enc_w_a,
            &mut self.enc_b_a,
            &mut self.enc_w_b,
            &mut self.enc_b_b,
            &mut self.enc_w0,
            &mut self.enc_w1,
            &mut self.dec_w0,
            &mut self.dec_w1,
        ]
    }

    pub fn discriminator_named(&self) -> Vec<(&'static str, &Array2<f64>)> {
        vec![
            ("disc_w1", &self.disc_w1),
            ("disc_b1", &self.disc_b1),
            ("disc_w2", &self.disc_w2),
            ("disc_b2", &self.disc_b2),
            ("disc_w3", &self.disc_w3),
            ("disc_b3", &self.disc_b3),
        ]
    }

    pub fn discriminator_arrays_mut(&mut self) -> Vec<&mut Array2<f64>> {
        vec![
            &mut self.disc_w1,
            &mut self.disc_b1,
            &mut self.disc_w2,
            &mut self.disc_b2,
            &mut self.disc_w3,
            &mut self.disc_b3,
        ]
    }

    /// Registers every parameter on a fresh tape, in the same order the
    /// `*_named` accessors use.
    pub fn register(&self, tape: &Tape) -> Result<ModelVars> {
        Ok(ModelVars {
            mask_token: tape.param(self.mask_token.clone())?,
            enc_w_a: tape.param(self.enc_w_a.clone())?,
            enc_b_a: tape.param(self.enc_b_a.clone())?,
            enc_w_b: tape.param(self.enc_w_b.clone())?,
            enc_b_b: tape.param(self.enc_b_b.clone())?,
            enc_w0: tape.param(self.enc_w0.clone())?,
            enc_w1: tape.param(self.enc_w1.clone())?,
            dec_w0: tape.param(self.dec_w0.clone())?,
            dec_w1: tape.param(self.dec_w1.clone())?,
            disc_w1: tape.param(self.disc_w1.clone())?,
            disc_b1: tape.param(self.disc_b1.clone())?,
            disc_w2: tape.param(self.disc_w2.clone())?,
            disc_b2: tape.param(self.disc_b2.clone())?,
            disc_w3: tape.param(self.disc_w3.clone())?,
            disc_b3: tape.param(self.disc_b3.clone())?,
        })
    }

    pub fn save_generator(&self, path: &Path) -> Result<()> {
        save_arrays(path, &self.generator_named())
    }

    pub fn save_discriminator(&self, path: &Path) -> Result<()> {
        save_arrays(path, &self.discriminator_named())
    }

    pub fn load_generator(&mut self, path: &Path) -> Result<()> {
        let loaded = load_arrays(path)?;
        let expect: Vec<&'static str> = self.generator_named().iter().map(|(n, _)| *n).collect();
        for name in expect {
            let arr = loaded
                .get(name)
                .ok_or_else(|| Error::data(format!("checkpoint missing array {name:?}")))?;
            let slot: &mut Array2<f64> = match name {
                "mask_token" => &mut self.mask_token,
                "enc_w_a" => &mut self.enc_w_a,
                "enc_b_a" => &mut self.enc_b_a,
                "enc_w_b" => &mut self.enc_w_b,
                "enc_b_b" => &mut self.enc_b_b,
                "enc_w0" => &mut self.enc_w0,
                "enc_w1" => &mut self.enc_w1,
                "dec_w0" => &mut self.dec_w0,
                "dec_w1" => &mut self.dec_w1,
                _ => unreachable!(),
            };
            if slot.dim() != arr.dim() {
                return Err(Error::data(format!(
                    "checkpoint array {name:?} has shape {:?}, expected {:?}",
                    arr.dim(),
                    slot.dim()
                )));
            }
            *slot = arr.clone();
        }
        Ok(())
    }
}

/// Tape handles for all parameters, mirroring [`ModelParams`].
#[derive(Debug, Clone, Copy)]
pub struct ModelVars {
    pub mask_token: Var,
    pub enc_w_a: Var,
    pub enc_b_a: Var,
    pub enc_w_b: Var,
    pub enc_b_b: Var,
    pub enc_w0: Var,
    pub enc_w1: Var,
    pub dec_w0: Var,
    pub dec_w1: Var,
    pub disc_w1: Var,
    pub disc_b1: Var,
    pub disc_w2: Var,
    pub disc_b2: Var,
    pub disc_w3: Var,
    pub disc_b3: Var,
}

impl ModelVars {
    /// Generator parameters in `generator_named` order.
    pub fn generator(&self) -> Vec<Var> {
        vec![
            self.mask_token,
            self.enc_w_a,
            self.enc_b_a,
            self.enc_w_b,
            self.enc_b_b,
            self.enc_w0,
            self.enc_w1,
            self.dec_w0,
            self.dec_w1,
        ]
    }

    /// Discriminator parameters in `discriminator_named` order.
    pub fn discriminator(&self) -> Vec<Var> {
        vec![
            self.disc_w1,
            self.disc_b1,
            self.disc_w2,
            self.disc_b2,
            self.disc_w3,
            self.disc_b3,
        ]
    }
}

/// Replaces the rows in the mask plan with the trainable token; gradient
/// flows into the token from exactly those rows.
pub fn apply_mask(tape: &Tape, x: &Array2<f64>, plan: &MaskPlan, token: Var) -> Result<Var> {
    let (n, g) = x.dim();
    let mut keep = Array2::ones((n, g));
    let mut indicator = Array2::zeros((n, 1));
    for &i in &plan.masked_set {
        if i >= n {
            return Err(Error::data(format!("mask index {i} out of bounds for {n} spots")));
        }
        keep.row_mut(i).fill(0.0);
        indicator[[i, 0]] = 1.0;
    }
    let x_const = tape.constant(x.clone())?;
    let keep_const = tape.constant(keep)?;
    let ind_const = tape.constant(indicator)?;
    let kept = tape.mul(x_const, keep_const)?;
    let broadcast = tape.matmul(ind_const, token)?;
    tape.add(kept, broadcast)
}

/// Two biased FC layers with ReLU, then H = A (ReLU(A H_f W0)) W1.
pub fn encode(tape: &Tape, x_tilde: Var, a_norm: &Rc<CsrMatrix>, vars: &ModelVars) -> Result<Var> {
    let h1 = tape.relu(tape.add_row(tape.matmul(x_tilde, vars.enc_w_a)?, vars.enc_b_a)?)?;
    let h_f = tape.relu(tape.add_row(tape.matmul(h1, vars.enc_w_b)?, vars.enc_b_b)?)?;
    let inner = tape.relu(tape.spmm(a_norm, tape.matmul(h_f, vars.enc_w0)?)?)?;
    tape.matmul(tape.spmm(a_norm, inner)?, vars.enc_w1)
}

/// Z = A (LeakyReLU(H W'0)) W'1; the whole path is bias-free.
pub fn decode(tape: &Tape, h: Var, a_norm: &Rc<CsrMatrix>, vars: &ModelVars) -> Result<Var> {
    let hidden = tape.leaky_relu(tape.matmul(h, vars.dec_w0)?, LEAKY_SLOPE)?;
    tape.matmul(tape.spmm(a_norm, hidden)?, vars.dec_w1)
}

/// Per-spot slice-membership probabilities; rows sum to 1.
pub fn discriminate(tape: &Tape, h: Var, vars: &ModelVars) -> Result<Var> {
    let d1 = tape.relu(tape.add_row(tape.matmul(h, vars.disc_w1)?, vars.disc_b1)?)?;
    let d2 = tape.relu(tape.add_row(tape.matmul(d1, vars.disc_w2)?, vars.disc_b2)?)?;
    let logits = tape.add_row(tape.matmul(d2, vars.disc_w3)?, vars.disc_b3)?;
    tape.row_softmax(logits)
}

/// Encoder output on the unmasked input with current parameters; the
/// embedding used for clustering, anchor search, and metrics.
pub fn infer_latent(params: &ModelParams, x: &Array2<f64>, a_norm: &Rc<CsrMatrix>) -> Result<Array2<f64>> {
    let tape = Tape::new();
    let vars = params.register(&tape)?;
    let x_const = tape.constant(x.clone())?;
    let h = encode(&tape, x_const, a_norm, &vars)?;
    Ok(tape.value(h))
}

/// Decoder output on the unmasked input: the denoised expression matrix.
pub fn infer_denoised(params: &ModelParams, x: &Array2<f64>, a_norm: &Rc<CsrMatrix>) -> Result<Array2<f64>> {
    let tape = Tape::new();
    let vars = params.register(&tape)?;
    let x_const = tape.constant(x.clone())?;
    let h = encode(&tape, x_const, a_norm, &vars)?;
    let z = decode(&tape, h, a_norm, &vars)?;
    Ok(tape.value(z))
}

// ── checkpoint text format ─────────────────────────────────────────────
//
// Repeated blocks of:
//   <name> <rows> <cols>
//   <row of space-separated values>   (rows lines)
// Values are written with shortest round-trip formatting and re-read
// exactly.

pub fn save_arrays(path: &Path, arrays: &[(&str, &Array2<f64>)]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (name, arr) in arrays {
        writeln!(f, "{name} {} {}", arr.nrows(), arr.ncols())?;
        for row in arr.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

pub fn load_arrays(path: &Path) -> Result<BTreeMap<String, Array2<f64>>> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::data(format!("cannot open checkpoint {}: {e}", path.display())))?;
    let mut lines = std::io::BufReader::new(f).lines();
    let mut out = BTreeMap::new();
    while let Some(header) = lines.next() {
        let header = header?;
        if header.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::data(format!("bad checkpoint header: {header:?}")));
        }
        let name = parts[0].to_string();
        let rows: usize = parts[1]
            .parse()
            .map_err(|_| Error::data(format!("bad row count in {header:?}")))?;
        let cols: usize = parts[2]
            .parse()
            .map_err(|_| Error::data(format!("bad column count in {header:?}")))?;
        let mut arr = Array2::zeros((rows, cols));
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| Error::data(format!("checkpoint truncated in {name:?}")))?;
            let line = line?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != cols {
                return Err(Error::data(format!(
                    "array {name:?} row {r}: {} values, expected {cols}",
                    fields.len()
                )));
            }
            for (c, field) in fields.iter().enumerate() {
                arr[[r, c]] = field
                    .parse()
                    .map_err(|_| Error::data(format!("bad value {field:?} in {name:?}")))?;
            }
        }
        if out.insert(name.clone(), arr).is_some() {
            return Err(Error::data(format!("duplicate array {name:?} in checkpoint")));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn identity_graph(n: usize) -> Rc<CsrMatrix> {
        Rc::new(CsrMatrix::identity(n))
    }

    #[test]
    fn mask_plan_cardinality_and_uniqueness() {
        let plan = MaskPlan::sample(4, 0.5, 7).unwrap();
        assert_eq!(plan.masked_set.len(), 2);
        let plan = MaskPlan::sample(10, 0.0, 7).unwrap();
        assert!(plan.masked_set.is_empty());
        let plan = MaskPlan::sample(10, 1.0, 7).unwrap();
        assert_eq!(plan.masked_set, (0..10).collect::<Vec<_>>());
        let plan = MaskPlan::sample(100, 0.5, 3).unwrap();
        let mut dedup = plan.masked_set.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 50);
        assert!(plan.masked_set.windows(2).all(|w| w[0] < w[1]));
        assert!(MaskPlan::sample(10, 1.5, 0).is_err());
    }

    #[test]
    fn mask_plan_same_seed_same_set() {
        let a = MaskPlan::sample(50, 0.3, 11).unwrap();
        let b = MaskPlan::sample(50, 0.3, 11).unwrap();
        let c = MaskPlan::sample(50, 0.3, 12).unwrap();
        assert_eq!(a.masked_set, b.masked_set);
        assert_ne!(a.masked_set, c.masked_set);
    }

    #[test]
    fn apply_mask_replaces_exactly_the_planned_rows() {
        let tape = Tape::new();
        let x = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]];
        let token_val = array![[-1.0, -2.0]];
        let token = tape.param(token_val.clone()).unwrap();
        let plan = MaskPlan {
            rho: 0.5,
            masked_set: vec![1, 3],
            seed: 0,
        };
        let xt = apply_mask(&tape, &x, &plan, token).unwrap();
        let v = tape.value(xt);
        assert_eq!(v.row(0).to_vec(), vec![1.0, 2.0]);
        assert_eq!(v.row(1).to_vec(), vec![-1.0, -2.0]);
        assert_eq!(v.row(2).to_vec(), vec![5.0, 6.0]);
        assert_eq!(v.row(3).to_vec(), vec![-1.0, -2.0]);

        // Token gradient = sum of upstream grads over masked rows.
        let s = tape.sum(xt).unwrap();
        tape.backward(s).unwrap();
        assert_eq!(tape.grad(token), array![[2.0, 2.0]]);
    }

    #[test]
    fn rho_zero_is_identity_rho_one_zero_token_is_zeros() {
        let tape = Tape::new();
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        let token = tape.param(Array2::zeros((1, 2))).unwrap();
        let empty = MaskPlan { rho: 0.0, masked_set: vec![], seed: 0 };
        let xt = apply_mask(&tape, &x, &empty, token).unwrap();
        assert_eq!(tape.value(xt), x);
        let full = MaskPlan { rho: 1.0, masked_set: vec![0, 1], seed: 0 };
        let xt = apply_mask(&tape, &x, &full, token).unwrap();
        assert_eq!(tape.value(xt), Array2::<f64>::zeros((2, 2)));
    }

    #[test]
    fn latent_has_sixteen_columns_and_zero_params_give_zero() {
        let params = ModelParams::init(20, 2, 0).unwrap();
        let x = Array2::from_elem((5, 20), 0.3);
        let a = identity_graph(5);
        let h = infer_latent(&params, &x, &a).unwrap();
        assert_eq!(h.dim(), (5, D_LATENT));

        let mut zeroed = params.clone();
        for arr in zeroed.generator_arrays_mut() {
            arr.fill(0.0);
        }
        let h = infer_latent(&zeroed, &x, &a).unwrap();
        assert!(h.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn decoder_output_matches_gene_count_and_zero_latent_gives_zero() {
        let params = ModelParams::init(17, 2, 1).unwrap();
        let x = Array2::from_elem((4, 17), 0.5);
        let a = identity_graph(4);
        let z = infer_denoised(&params, &x, &a).unwrap();
        assert_eq!(z.dim(), (4, 17));

        // Zero H through the bias-free decoder path must give zero Z.
        let tape = Tape::new();
        let vars = params.register(&tape).unwrap();
        let h0 = tape.constant(Array2::zeros((4, D_LATENT))).unwrap();
        let z = decode(&tape, h0, &a, &vars).unwrap();
        assert!(tape.value(z).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn identity_graph_collapses_encoder_to_mlp() {
        let params = ModelParams::init(6, 2, 3).unwrap();
        let x = array![
            [0.5, -0.2, 0.1, 0.9, -0.4, 0.3],
            [0.1, 0.8, -0.3, 0.2, 0.6, -0.1]
        ];
        let a = identity_graph(2);
        let h = infer_latent(&params, &x, &a).unwrap();

        let relu = |m: Array2<f64>| m.mapv(|v| v.max(0.0));
        let add_row = |m: Array2<f64>, b: &Array2<f64>| {
            let mut out = m;
            for mut r in out.rows_mut() {
                for (j, v) in r.iter_mut().enumerate() {
                    *v += b[[0, j]];
                }
            }
            out
        };
        let h1 = relu(add_row(x.dot(&params.enc_w_a), &params.enc_b_a));
        let hf = relu(add_row(h1.dot(&params.enc_w_b), &params.enc_b_b));
        let expected = relu(hf.dot(&params.enc_w0)).dot(&params.enc_w1);
        let diff = (&h - &expected).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(diff < 1e-12, "MLP collapse drift {diff}");
    }

    #[test]
    fn unmasked_rows_ignore_the_token_on_identity_graph() {
        let params = ModelParams::init(8, 2, 5).unwrap();
        let x = Array2::from_shape_fn((6, 8), |(i, j)| ((i * 8 + j) as f64 * 0.7).sin());
        let a = identity_graph(6);
        let plan = MaskPlan { rho: 0.5, masked_set: vec![0, 2, 4], seed: 0 };

        let z_with = |token_fill: f64| {
            let mut p = params.clone();
            p.mask_token.fill(token_fill);
            let tape = Tape::new();
            let vars = p.register(&tape).unwrap();
            let xt = apply_mask(&tape, &x, &plan, vars.mask_token).unwrap();
            let h = encode(&tape, xt, &a, &vars).unwrap();
            let z = decode(&tape, h, &a, &vars).unwrap();
            tape.value(z)
        };
        let z0 = z_with(0.0);
        let z1 = z_with(2.5);
        for i in [1_usize, 3, 5] {
            assert_eq!(z0.row(i), z1.row(i), "unmasked row {i} moved");
        }
        assert_ne!(z0.row(0), z1.row(0));
    }

    #[test]
    fn discriminator_rows_are_distributions() {
        let params = ModelParams::init(10, 3, 9).unwrap();
        let tape = Tape::new();
        let vars = params.register(&tape).unwrap();
        let h = tape
            .constant(Array2::from_shape_fn((7, D_LATENT), |(i, j)| {
                ((i + 2 * j) as f64 * 0.31).cos()
            }))
            .unwrap();
        let p = discriminate(&tape, h, &vars).unwrap();
        let pv = tape.value(p);
        assert_eq!(pv.dim(), (7, 3));
        for row in pv.rows() {
            let sum: f64 = row.sum();
            assert!((sum - 1.0).abs() < 1e-12, "row sum {sum}");
            assert!(row.iter().all(|v| *v > 0.0));
        }

        // Zero final layer: every row uniform at 1/S.
        let mut uniform = params.clone();
        uniform.disc_w3.fill(0.0);
        uniform.disc_b3.fill(0.0);
        let tape = Tape::new();
        let vars = uniform.register(&tape).unwrap();
        let h = tape.constant(Array2::from_elem((4, D_LATENT), 0.2)).unwrap();
        let p = discriminate(&tape, h, &vars).unwrap();
        for v in tape.value(p).iter() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_slice_model_is_rejected() {
        assert!(ModelParams::init(10, 1, 0).is_err());
    }

    #[test]
    fn checkpoint_roundtrips_bitwise() {
        let params = ModelParams::init(12, 2, 42).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let gen_path = dir.path().join("checkpoint.txt");
        let disc_path = dir.path().join("checkpoint_disc.txt");
        params.save_generator(&gen_path).unwrap();
        params.save_discriminator(&disc_path).unwrap();

        let mut other = ModelParams::init(12, 2, 43).unwrap();
        assert_ne!(other.enc_w_a, params.enc_w_a);
        other.load_generator(&gen_path).unwrap();
        assert_eq!(other.enc_w_a, params.enc_w_a);
        assert_eq!(other.mask_token, params.mask_token);
        assert_eq!(other.dec_w1, params.dec_w1);

        let loaded = load_arrays(&disc_path).unwrap();
        assert_eq!(loaded["disc_w3"], params.disc_w3);
    }

    #[test]
    fn checkpoint_shape_mismatch_is_an_error() {
        let params = ModelParams::init(12, 2, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checkpoint.txt");
        params.save_generator(&path).unwrap();
        let mut other = ModelParams::init(13, 2, 0).unwrap();
        let err = other.load_generator(&path).unwrap_err();
        assert!(err.to_string().contains("shape"), "{err}");
    }
}
