//! Reverse-mode automatic differentiation over dense matrices, plus the Adam
//! optimizer.
//!
//! The engine is deliberately small: a flat tape of primitive applications in
//! topological order, dense `f64` matrices everywhere (scalars are 1x1), and
//! exactly the primitives the encoder/decoder/discriminator and loss terms
//! need. Every op validates shapes and rejects non-finite outputs so a
//! diverging run fails loudly instead of training on NaNs. All kernels run
//! single-threaded in fixed index order, which makes repeated runs bitwise
//! identical.

use std::cell::{Ref, RefCell};
use std::rc::Rc;

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    SpMm(Rc<CsrMatrix>, usize),
    Add(usize, usize),
    /// Matrix plus a 1 x m row vector broadcast over rows.
    AddRow(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Scale(usize, f64),
    Relu(usize),
    LeakyRelu(usize, f64),
    Exp(usize),
    Ln(usize),
    ClampMin(usize, f64),
    PowConst(usize, f64),
    RowSoftmax(usize),
    /// Row-wise L2 norm with an epsilon inside the square root.
    RowL2Norm(usize),
    RowSum(usize),
    Sum(usize),
    Mean(usize),
    GatherRows(usize, Rc<Vec<usize>>),
}

struct Node {
    value: Array2<f64>,
    grad: Option<Array2<f64>>,
    requires_grad: bool,
    op: Op,
}

/// Recording tape. Single-owner during a forward/backward pass.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    fn push(&self, value: Array2<f64>, requires_grad: bool, op: Op, name: &str) -> Result<Var> {
        if !value.iter().all(|v| v.is_finite()) {
            return Err(Error::numeric(format!("non-finite output in {name}")));
        }
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            grad: None,
            requires_grad,
            op,
        });
        Ok(Var(nodes.len() - 1))
    }

    /// Leaf that does not accumulate a gradient.
    pub fn constant(&self, value: Array2<f64>) -> Result<Var> {
        self.push(value, false, Op::Leaf, "constant")
    }

    /// Trainable leaf; gradients accumulate into it across backward calls.
    pub fn param(&self, value: Array2<f64>) -> Result<Var> {
        self.push(value, true, Op::Leaf, "param")
    }

    /// 1x1 constant.
    pub fn scalar_const(&self, v: f64) -> Result<Var> {
        self.constant(Array2::from_elem((1, 1), v))
    }

    pub fn value(&self, v: Var) -> Array2<f64> {
        self.nodes.borrow()[v.0].value.clone()
    }

    pub fn value_ref(&self, v: Var) -> Ref<'_, Array2<f64>> {
        Ref::map(self.nodes.borrow(), |n| &n[v.0].value)
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        let n = self.nodes.borrow();
        let d = n[v.0].value.dim();
        (d.0, d.1)
    }

    /// Value of a 1x1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        let nodes = self.nodes.borrow();
        let val = &nodes[v.0].value;
        assert_eq!(val.dim(), (1, 1), "scalar() on non-scalar node");
        val[[0, 0]]
    }

    /// Accumulated gradient of a node; zeros if backward never reached it.
    pub fn grad(&self, v: Var) -> Array2<f64> {
        let nodes = self.nodes.borrow();
        let node = &nodes[v.0];
        node.grad
            .clone()
            .unwrap_or_else(|| Array2::zeros(node.value.dim()))
    }

    pub fn zero_grads(&self) {
        for node in self.nodes.borrow_mut().iter_mut() {
            node.grad = None;
        }
    }

    fn shapes_match(&self, a: Var, b: Var, name: &str) -> Result<()> {
        let nodes = self.nodes.borrow();
        let da = nodes[a.0].value.dim();
        let db = nodes[b.0].value.dim();
        if da != db {
            return Err(Error::data(format!(
                "shape mismatch in {name}: {da:?} vs {db:?}"
            )));
        }
        Ok(())
    }

    // ── primitives ──────────────────────────────────────────────────────

    pub fn matmul(&self, a: Var, b: Var) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            let (va, vb) = (&nodes[a.0].value, &nodes[b.0].value);
            if va.ncols() != vb.nrows() {
                return Err(Error::data(format!(
                    "shape mismatch in matmul: {:?} x {:?}",
                    va.dim(),
                    vb.dim()
                )));
            }
            va.dot(vb)
        };
        self.push(value, false, Op::MatMul(a.0, b.0), "matmul")
    }

    /// Sparse-dense product `s * x` with a constant sparse left factor.
    pub fn spmm(&self, s: &Rc<CsrMatrix>, x: Var) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            let vx = &nodes[x.0].value;
            if s.ncols() != vx.nrows() {
                return Err(Error::data(format!(
                    "shape mismatch in sparse_dense_matmul: {}x{} x {:?}",
                    s.nrows(),
                    s.ncols(),
                    vx.dim()
                )));
            }
            s.matmul_dense(vx)
        };
        self.push(value, false, Op::SpMm(Rc::clone(s), x.0), "sparse_dense_matmul")
    }

    pub fn add(&self, a: Var, b: Var) -> Result<Var> {
        self.shapes_match(a, b, "add")?;
        let value = {
            let nodes = self.nodes.borrow();
            &nodes[a.0].value + &nodes[b.0].value
        };
        self.push(value, false, Op::Add(a.0, b.0), "add")
    }

    /// `a + row`, broadcasting a 1 x m row over the rows of a.
    pub fn add_row(&self, a: Var, row: Var) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            let (va, vr) = (&nodes[a.0].value, &nodes[row.0].value);
            if vr.nrows() != 1 || vr.ncols() != va.ncols() {
                return Err(Error::data(format!(
                    "shape mismatch in add_row: {:?} + {:?}",
                    va.dim(),
                    vr.dim()
                )));
            }
            let mut out = va.clone();
            for mut r in out.rows_mut() {
                for (j, x) in r.iter_mut().enumerate() {
                    *x += vr[[0, j]];
                }
            }
            out
        };
        self.push(value, false, Op::AddRow(a.0, row.0), "add_row")
    }

    pub fn sub(&self, a: Var, b: Var) -> Result<Var> {
        self.shapes_match(a, b, "sub")?;
        let value = {
            let nodes = self.nodes.borrow();
            &nodes[a.0].value - &nodes[b.0].value
        };
        self.push(value, false, Op::Sub(a.0, b.0), "sub")
    }

    pub fn mul(&self, a: Var, b: Var) -> Result<Var> {
        self.shapes_match(a, b, "mul")?;
        let value = {
            let nodes = self.nodes.borrow();
            &nodes[a.0].value * &nodes[b.0].value
        };
        self.push(value, false, Op::Mul(a.0, b.0), "mul")
    }

    pub fn div(&self, a: Var, b: Var) -> Result<Var> {
        self.shapes_match(a, b, "div")?;
        let value = {
            let nodes = self.nodes.borrow();
            &nodes[a.0].value / &nodes[b.0].value
        };
        self.push(value, false, Op::Div(a.0, b.0), "div")
    }

    pub fn scale(&self, a: Var, c: f64) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            nodes[a.0].value.mapv(|v| v * c)
        };
        self.push(value, false, Op::Scale(a.0, c), "scale")
    }

    pub fn relu(&self, a: Var) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            nodes[a.0].value.mapv(|v| v.max(0.0))
        };
        self.push(value, false, Op::Relu(a.0), "relu")
    }

    pub fn leaky_relu(&self, a: Var, slope: f64) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            nodes[a.0].value.mapv(|v| if v > 0.0 { v } else { slope * v })
        };
        self.push(value, false, Op::LeakyRelu(a.0, slope), "leaky_relu")
    }

    pub fn exp(&self, a: Var) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            nodes[a.0].value.mapv(f64::exp)
        };
        self.push(value, false, Op::Exp(a.0), "exp")
    }

    pub fn ln(&self, a: Var) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            nodes[a.0].value.mapv(f64::ln)
        };
        self.push(value, false, Op::Ln(a.0), "ln")
    }

    pub fn clamp_min(&self, a: Var, min: f64) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            nodes[a.0].value.mapv(|v| v.max(min))
        };
        self.push(value, false, Op::ClampMin(a.0, min), "clamp_min")
    }

    /// Elementwise `a^p` for a constant exponent.
    pub fn pow_const(&self, a: Var, p: f64) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            nodes[a.0].value.mapv(|v| v.powf(p))
        };
        self.push(value, false, Op::PowConst(a.0, p), "pow_const")
    }

    /// Numerically stable softmax over each row; rows sum to 1.
    pub fn row_softmax(&self, a: Var) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            let va = &nodes[a.0].value;
            let mut out = va.clone();
            for mut row in out.rows_mut() {
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for x in row.iter_mut() {
                    *x = (*x - max).exp();
                    total += *x;
                }
                for x in row.iter_mut() {
                    *x /= total;
                }
            }
            out
        };
        self.push(value, false, Op::RowSoftmax(a.0), "row_softmax")
    }

    /// Row-wise L2 norm as an n x 1 column; `eps` is added under the square
    /// root to keep the op differentiable at zero rows.
    pub fn row_l2_norm(&self, a: Var, eps: f64) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            let va = &nodes[a.0].value;
            let mut out = Array2::zeros((va.nrows(), 1));
            for (i, row) in va.rows().into_iter().enumerate() {
                out[[i, 0]] = (row.iter().map(|v| v * v).sum::<f64>() + eps).sqrt();
            }
            out
        };
        self.push(value, false, Op::RowL2Norm(a.0), "row_l2_norm")
    }

    /// Row sums as an n x 1 column.
    pub fn row_sum(&self, a: Var) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            let va = &nodes[a.0].value;
            let mut out = Array2::zeros((va.nrows(), 1));
            for (i, row) in va.rows().into_iter().enumerate() {
                out[[i, 0]] = row.sum();
            }
            out
        };
        self.push(value, false, Op::RowSum(a.0), "row_sum")
    }

    /// Sum of all entries, as 1x1.
    pub fn sum(&self, a: Var) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            Array2::from_elem((1, 1), nodes[a.0].value.sum())
        };
        self.push(value, false, Op::Sum(a.0), "sum")
    }

    /// Mean of all entries, as 1x1.
    pub fn mean(&self, a: Var) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            let va = &nodes[a.0].value;
            Array2::from_elem((1, 1), va.sum() / va.len() as f64)
        };
        self.push(value, false, Op::Mean(a.0), "mean")
    }

    /// Select rows by index; repeated indices are allowed and their
    /// cotangents accumulate.
    pub fn gather_rows(&self, a: Var, indices: &[usize]) -> Result<Var> {
        let value = {
            let nodes = self.nodes.borrow();
            let va = &nodes[a.0].value;
            for &i in indices {
                if i >= va.nrows() {
                    return Err(Error::data(format!(
                        "gather_rows index {i} out of bounds for {} rows",
                        va.nrows()
                    )));
                }
            }
            let mut out = Array2::zeros((indices.len(), va.ncols()));
            for (k, &i) in indices.iter().enumerate() {
                for j in 0..va.ncols() {
                    out[[k, j]] = va[[i, j]];
                }
            }
            out
        };
        self.push(
            value,
            false,
            Op::GatherRows(a.0, Rc::new(indices.to_vec())),
            "gather_rows",
        )
    }

    // ── backward ────────────────────────────────────────────────────────

    /// Reverse pass from a scalar output. Cotangents are propagated in a
    /// fresh buffer and then added into each node's persistent grad, so two
    /// backward calls without `zero_grads` double the stored gradients.
    pub fn backward(&self, out: Var) -> Result<()> {
        let mut nodes = self.nodes.borrow_mut();
        if nodes[out.0].value.dim() != (1, 1) {
            return Err(Error::data(
                "backward requires a scalar (1x1) output".to_string(),
            ));
        }
        let n = out.0 + 1;
        let mut cot: Vec<Option<Array2<f64>>> = (0..n).map(|_| None).collect();
        cot[out.0] = Some(Array2::ones((1, 1)));

        for i in (0..n).rev() {
            let Some(c) = cot[i].take() else { continue };
            if nodes[i].requires_grad || matches!(nodes[i].op, Op::Leaf) {
                match &mut nodes[i].grad {
                    Some(g) => *g += &c,
                    slot => *slot = Some(c.clone()),
                }
            }
            match nodes[i].op.clone() {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (ga, gb) = {
                        let va = &nodes[a].value;
                        let vb = &nodes[b].value;
                        (c.dot(&vb.t()), va.t().dot(&c))
                    };
                    accumulate(&mut cot, a, ga);
                    accumulate(&mut cot, b, gb);
                }
                Op::SpMm(s, x) => {
                    let gx = s.transpose_matmul_dense(&c);
                    accumulate(&mut cot, x, gx);
                }
                Op::Add(a, b) => {
                    accumulate(&mut cot, a, c.clone());
                    accumulate(&mut cot, b, c);
                }
                Op::AddRow(a, r) => {
                    let mut gr = Array2::zeros((1, c.ncols()));
                    for row in c.rows() {
                        for (j, v) in row.iter().enumerate() {
                            gr[[0, j]] += v;
                        }
                    }
                    accumulate(&mut cot, a, c);
                    accumulate(&mut cot, r, gr);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut cot, a, c.clone());
                    accumulate(&mut cot, b, c.mapv(|v| -v));
                }
                Op::Mul(a, b) => {
                    let ga = &c * &nodes[b].value;
                    let gb = &c * &nodes[a].value;
                    accumulate(&mut cot, a, ga);
                    accumulate(&mut cot, b, gb);
                }
                Op::Div(a, b) => {
                    let vb = &nodes[b].value;
                    let ga = &c / vb;
                    let gb = -&c * &nodes[a].value / (vb * vb);
                    accumulate(&mut cot, a, ga);
                    accumulate(&mut cot, b, gb);
                }
                Op::Scale(a, k) => accumulate(&mut cot, a, c.mapv(|v| v * k)),
                Op::Relu(a) => {
                    let mask = nodes[a].value.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                    accumulate(&mut cot, a, &c * &mask);
                }
                Op::LeakyRelu(a, slope) => {
                    let mask = nodes[a].value.mapv(|v| if v > 0.0 { 1.0 } else { slope });
                    accumulate(&mut cot, a, &c * &mask);
                }
                Op::Exp(a) => {
                    let ga = &c * &nodes[i].value;
                    accumulate(&mut cot, a, ga);
                }
                Op::Ln(a) => {
                    let ga = &c / &nodes[a].value;
                    accumulate(&mut cot, a, ga);
                }
                Op::ClampMin(a, min) => {
                    let mask = nodes[a].value.mapv(|v| if v > min { 1.0 } else { 0.0 });
                    accumulate(&mut cot, a, &c * &mask);
                }
                Op::PowConst(a, p) => {
                    let ga = nodes[a].value.mapv(|v| p * v.powf(p - 1.0)) * &c;
                    accumulate(&mut cot, a, ga);
                }
                Op::RowSoftmax(a) => {
                    let y = &nodes[i].value;
                    let mut ga = Array2::zeros(y.dim());
                    for r in 0..y.nrows() {
                        let mut dot = 0.0;
                        for j in 0..y.ncols() {
                            dot += c[[r, j]] * y[[r, j]];
                        }
                        for j in 0..y.ncols() {
                            ga[[r, j]] = y[[r, j]] * (c[[r, j]] - dot);
                        }
                    }
                    accumulate(&mut cot, a, ga);
                }
                Op::RowL2Norm(a) => {
                    let va = &nodes[a].value;
                    let y = &nodes[i].value;
                    let mut ga = Array2::zeros(va.dim());
                    for r in 0..va.nrows() {
                        let scale = c[[r, 0]] / y[[r, 0]];
                        for j in 0..va.ncols() {
                            ga[[r, j]] = scale * va[[r, j]];
                        }
                    }
                    accumulate(&mut cot, a, ga);
                }
                Op::RowSum(a) => {
                    let va = &nodes[a].value;
                    let mut ga = Array2::zeros(va.dim());
                    for r in 0..va.nrows() {
                        for j in 0..va.ncols() {
                            ga[[r, j]] = c[[r, 0]];
                        }
                    }
                    accumulate(&mut cot, a, ga);
                }
                Op::Sum(a) => {
                    let ga = Array2::from_elem(nodes[a].value.dim(), c[[0, 0]]);
                    accumulate(&mut cot, a, ga);
                }
                Op::Mean(a) => {
                    let dim = nodes[a].value.dim();
                    let ga = Array2::from_elem(dim, c[[0, 0]] / (dim.0 * dim.1) as f64);
                    accumulate(&mut cot, a, ga);
                }
                Op::GatherRows(a, idx) => {
                    let mut ga = Array2::zeros(nodes[a].value.dim());
                    for (k, &i_src) in idx.iter().enumerate() {
                        for j in 0..c.ncols() {
                            ga[[i_src, j]] += c[[k, j]];
                        }
                    }
                    accumulate(&mut cot, a, ga);
                }
            }
        }
        Ok(())
    }
}

fn accumulate(cot: &mut [Option<Array2<f64>>], idx: usize, delta: Array2<f64>) {
    match &mut cot[idx] {
        Some(existing) => *existing += &delta,
        slot => *slot = Some(delta),
    }
}

/// Central-finite-difference check of the tape gradient for a scalar
/// function of one matrix parameter. Returns the maximum over coordinates of
/// `|g_fd - g_ad| / max(1, |g_fd|)`.
pub fn grad_check<F>(f: F, theta: &Array2<f64>, eps: f64) -> Result<f64>
where
    F: Fn(&Tape, Var) -> Result<Var>,
{
    let tape = Tape::new();
    let var = tape.param(theta.clone())?;
    let out = f(&tape, var)?;
    if tape.shape(out) != (1, 1) {
        return Err(Error::data("grad_check requires a scalar function"));
    }
    tape.backward(out)?;
    let g_ad = tape.grad(var);

    let eval = |t: &Array2<f64>| -> Result<f64> {
        let tape = Tape::new();
        let var = tape.param(t.clone())?;
        let out = f(&tape, var)?;
        Ok(tape.scalar(out))
    };

    let mut worst: f64 = 0.0;
    let mut probe = theta.clone();
    for i in 0..theta.nrows() {
        for j in 0..theta.ncols() {
            let orig = probe[[i, j]];
            probe[[i, j]] = orig + eps;
            let fp = eval(&probe)?;
            probe[[i, j]] = orig - eps;
            let fm = eval(&probe)?;
            probe[[i, j]] = orig;
            let g_fd = (fp - fm) / (2.0 * eps);
            let rel = (g_fd - g_ad[[i, j]]).abs() / g_fd.abs().max(1.0);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

/// Glorot-style uniform init: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
pub fn glorot_uniform<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-a..a))
}

/// Adam with bias correction; weight decay enters as an L2 term added to the
/// gradient (`g + wd * theta`) before the moment updates.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step_count: usize,
    first_moments: Vec<Array2<f64>>,
    second_moments: Vec<Array2<f64>>,
}

impl AdamState {
    pub fn new(shapes: &[(usize, usize)], lr: f64, weight_decay: f64) -> Self {
        AdamState {
            lr,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step_count: 0,
            first_moments: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
            second_moments: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
        }
    }

    /// One update over a fixed-order parameter list. `params` and `grads`
    /// must align with the shapes passed at construction.
    pub fn step(&mut self, params: &mut [&mut Array2<f64>], grads: &[Array2<f64>]) {
        assert_eq!(params.len(), self.first_moments.len(), "param count mismatch");
        assert_eq!(params.len(), grads.len(), "grad count mismatch");
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (k, param) in params.iter_mut().enumerate() {
            assert_eq!(param.dim(), grads[k].dim(), "grad shape mismatch");
            let m = &mut self.first_moments[k];
            let v = &mut self.second_moments[k];
            for ((p, g), (m, v)) in param
                .iter_mut()
                .zip(grads[k].iter())
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                let g = g + self.weight_decay * *p;
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}
