//! The training objectives: scaled cosine reconstruction over masked spots,
//! slice-discriminator cross-entropy, anchor triplet margin loss, and their
//! weighted combination L = L_rec - lambda * L_dis + (1 - lambda) * L_tri.
//! MSE reconstruction and a contrastive pair loss exist only as ablation
//! alternatives.

use ndarray::Array2;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};

/// Guards cosine and distance denominators; small enough not to disturb the
/// worked loss values beyond 1e-9.
pub const NORM_EPS: f64 = 1e-12;
/// Probability floor inside the discriminator cross-entropy.
pub const PROB_FLOOR: f64 = 1e-12;
/// Softmax temperature of the contrastive ablation loss.
pub const CONTRASTIVE_TEMP: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
pub struct LossWeights {
    /// Trade-off between the adversarial and pairing terms.
    pub lambda: f64,
    /// Cosine loss sharpening exponent.
    pub gamma: f64,
    /// Triplet margin.
    pub tau: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { lambda: 0.5, gamma: 2.0, tau: 1.0 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::config(format!("lambda must be in [0, 1], got {}", self.lambda)));
        }
        if self.gamma < 1.0 {
            return Err(Error::config(format!("gamma must be >= 1, got {}", self.gamma)));
        }
        if self.tau <= 0.0 {
            return Err(Error::config(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

/// Row-wise cosine similarity of two equal-shaped matrices, as an m x 1
/// column.
fn row_cosine(tape: &Tape, a: Var, b: Var) -> Result<Var> {
    let dot = tape.row_sum(tape.mul(a, b)?)?;
    let na = tape.row_l2_norm(a, NORM_EPS)?;
    let nb = tape.row_l2_norm(b, NORM_EPS)?;
    tape.div(dot, tape.mul(na, nb)?)
}

/// Mean over masked spots of (1 - cos(x_i, z_i))^gamma.
pub fn sce_loss(tape: &Tape, x: Var, z: Var, masked_set: &[usize], gamma: f64) -> Result<Var> {
    if masked_set.is_empty() {
        return Err(Error::data("reconstruction loss needs a non-empty masked set"));
    }
    let xm = tape.gather_rows(x, masked_set)?;
    let zm = tape.gather_rows(z, masked_set)?;
    let cos = row_cosine(tape, xm, zm)?;
    let ones = tape.constant(Array2::ones((masked_set.len(), 1)))?;
    let gap = tape.sub(ones, cos)?;
    tape.mean(tape.pow_const(gap, gamma)?)
}

/// Mean squared error over the masked rows (ablation alternative).
pub fn mse_loss(tape: &Tape, x: Var, z: Var, masked_set: &[usize]) -> Result<Var> {
    if masked_set.is_empty() {
        return Err(Error::data("reconstruction loss needs a non-empty masked set"));
    }
    let xm = tape.gather_rows(x, masked_set)?;
    let zm = tape.gather_rows(z, masked_set)?;
    let diff = tape.sub(xm, zm)?;
    tape.mean(tape.mul(diff, diff)?)
}

/// Cross-entropy of the discriminator's slice probabilities against the true
/// slice labels, averaged over the masked spots. Probabilities are floored
/// so a confident miss stays finite.
pub fn dis_loss(tape: &Tape, p: Var, slice_of: &[usize], masked_set: &[usize]) -> Result<Var> {
    if masked_set.is_empty() {
        return Err(Error::data("discriminator loss needs a non-empty masked set"));
    }
    let (n, s) = tape.shape(p);
    if slice_of.len() != n {
        return Err(Error::data(format!(
            "slice label count {} does not match {} probability rows",
            slice_of.len(),
            n
        )));
    }
    let mut onehot = Array2::zeros((masked_set.len(), s));
    for (k, &i) in masked_set.iter().enumerate() {
        if slice_of[i] >= s {
            return Err(Error::data(format!(
                "slice label {} out of range for {s} slices",
                slice_of[i]
            )));
        }
        onehot[[k, slice_of[i]]] = 1.0;
    }
    let pm = tape.gather_rows(p, masked_set)?;
    let logp = tape.ln(tape.clamp_min(pm, PROB_FLOOR)?)?;
    let picked = tape.row_sum(tape.mul(tape.constant(onehot)?, logp)?)?;
    tape.scale(tape.mean(picked)?, -1.0)
}

/// Mean hinge over (anchor, positive, negative) index triples:
/// max(|h_a - h_p| - |h_a - h_n| + tau, 0). An empty triple list contributes
/// zero so the schedule can run before any pairs exist.
pub fn triplet_loss(tape: &Tape, h: Var, triples: &[[usize; 3]], tau: f64) -> Result<Var> {
    if triples.is_empty() {
        log::warn!("triplet loss evaluated with no triples; contributing 0");
        return tape.scalar_const(0.0);
    }
    let anchors: Vec<usize> = triples.iter().map(|t| t[0]).collect();
    let positives: Vec<usize> = triples.iter().map(|t| t[1]).collect();
    let negatives: Vec<usize> = triples.iter().map(|t| t[2]).collect();
    let ha = tape.gather_rows(h, &anchors)?;
    let hp = tape.gather_rows(h, &positives)?;
    let hn = tape.gather_rows(h, &negatives)?;
    let dap = tape.row_l2_norm(tape.sub(ha, hp)?, NORM_EPS)?;
    let dan = tape.row_l2_norm(tape.sub(ha, hn)?, NORM_EPS)?;
    let tau_col = tape.constant(Array2::from_elem((triples.len(), 1), tau))?;
    let margin = tape.add(tape.sub(dap, dan)?, tau_col)?;
    tape.mean(tape.relu(margin)?)
}

/// Two-candidate InfoNCE over the same triples (ablation alternative):
/// -log softmax of cos(a, p)/T against cos(a, n)/T.
pub fn contrastive_loss(tape: &Tape, h: Var, triples: &[[usize; 3]]) -> Result<Var> {
    if triples.is_empty() {
        log::warn!("contrastive loss evaluated with no triples; contributing 0");
        return tape.scalar_const(0.0);
    }
    let anchors: Vec<usize> = triples.iter().map(|t| t[0]).collect();
    let positives: Vec<usize> = triples.iter().map(|t| t[1]).collect();
    let negatives: Vec<usize> = triples.iter().map(|t| t[2]).collect();
    let ha = tape.gather_rows(h, &anchors)?;
    let hp = tape.gather_rows(h, &positives)?;
    let hn = tape.gather_rows(h, &negatives)?;
    let sp = tape.scale(row_cosine(tape, ha, hp)?, 1.0 / CONTRASTIVE_TEMP)?;
    let sn = tape.scale(row_cosine(tape, ha, hn)?, 1.0 / CONTRASTIVE_TEMP)?;
    let denom = tape.ln(tape.add(tape.exp(sp)?, tape.exp(sn)?)?)?;
    tape.mean(tape.sub(denom, sp)?)
}

/// L = rec - lambda * dis + (1 - lambda) * tri.
pub fn total_loss(tape: &Tape, rec: Var, dis: Var, tri: Var, lambda: f64) -> Result<Var> {
    let adv = tape.scale(dis, lambda)?;
    let pair = tape.scale(tri, 1.0 - lambda)?;
    tape.add(tape.sub(rec, adv)?, pair)
}
