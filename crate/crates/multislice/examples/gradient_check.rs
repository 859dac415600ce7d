//! Compare reverse-mode gradients against central finite differences, both
//! for a small primitive chain and for the masked reconstruction loss run
//! through the whole autoencoder.

use std::rc::Rc;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use multislice::autodiff::{glorot_uniform, grad_check, Tape, Var};
use multislice::graph::SpatialGraph;
use multislice::losses;
use multislice::model::{apply_mask, decode, encode, MaskPlan, ModelParams, ModelVars};
use multislice::synth::{generate_dataset, SynthConfig};

/// Registers every parameter as a constant except `patch`, which becomes the
/// differentiated variable.
fn register_with(
    tape: &Tape,
    params: &ModelParams,
    patch: &str,
    var: Var,
) -> multislice::Result<ModelVars> {
    let pick = |name: &str, arr: &Array2<f64>| -> multislice::Result<Var> {
        if name == patch { Ok(var) } else { tape.constant(arr.clone()) }
    };
    Ok(ModelVars {
        mask_token: pick("mask_token", &params.mask_token)?,
        enc_w_a: pick("enc_w_a", &params.enc_w_a)?,
        enc_b_a: pick("enc_b_a", &params.enc_b_a)?,
        enc_w_b: pick("enc_w_b", &params.enc_w_b)?,
        enc_b_b: pick("enc_b_b", &params.enc_b_b)?,
        enc_w0: pick("enc_w0", &params.enc_w0)?,
        enc_w1: pick("enc_w1", &params.enc_w1)?,
        dec_w0: pick("dec_w0", &params.dec_w0)?,
        dec_w1: pick("dec_w1", &params.dec_w1)?,
        disc_w1: pick("disc_w1", &params.disc_w1)?,
        disc_b1: pick("disc_b1", &params.disc_b1)?,
        disc_w2: pick("disc_w2", &params.disc_w2)?,
        disc_b2: pick("disc_b2", &params.disc_b2)?,
        disc_w3: pick("disc_w3", &params.disc_w3)?,
        disc_b3: pick("disc_b3", &params.disc_b3)?,
    })
}

fn main() -> multislice::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x_fixed = glorot_uniform(5, 4, &mut rng);
    let err = grad_check(
        |tape, w| {
            let x = tape.constant(x_fixed.clone())?;
            let y = tape.relu(tape.matmul(x, w)?)?;
            tape.mean(tape.row_softmax(y)?)
        },
        &glorot_uniform(4, 3, &mut rng),
        1e-5,
    )?;
    println!("matmul/relu/softmax chain  max rel err = {err:.3e}");

    let cfg = SynthConfig {
        n_slices: 2,
        grid_side: 3,
        n_domains: 2,
        n_genes: 12,
        seed: 4,
        ..SynthConfig::default()
    };
    let data = generate_dataset(&cfg, 10)?;
    let graph = SpatialGraph::build(&data.coords, &data.slice_of, 3)?;
    let a_norm = Rc::new(graph.a_norm.clone());
    let mut params = ModelParams::init(data.x.ncols(), 2, 9)?;
    // The token initializes to zero, which parks masked rows exactly on the
    // ReLU kink; finite differences only agree at generic points.
    params.mask_token = glorot_uniform(1, data.x.ncols(), &mut rng);
    let plan = MaskPlan::sample(data.x.nrows(), 0.5, 11)?;

    for name in ["mask_token", "enc_w1", "dec_w1"] {
        let theta = match name {
            "mask_token" => &params.mask_token,
            "enc_w1" => &params.enc_w1,
            _ => &params.dec_w1,
        };
        let err = grad_check(
            |tape, var| {
                let vars = register_with(tape, &params, name, var)?;
                let x_tilde = apply_mask(tape, &data.x, &plan, vars.mask_token)?;
                let h = encode(tape, x_tilde, &a_norm, &vars)?;
                let z = decode(tape, h, &a_norm, &vars)?;
                let target = tape.constant(data.x.clone())?;
                losses::sce_loss(tape, target, z, &plan.masked_set, 2.0)
            },
            theta,
            1e-5,
        )?;
        println!("masked autoencoder d/d {name:<10} max rel err = {err:.3e}");
    }
    Ok(())
}
