//! Dense NN primitives with explicit forward and backward passes.
//!
//! Every op that participates in training comes in a forward/backward pair;
//! the backward contract is checked against central finite differences in
//! the test suite.

mod adamw;
mod mlp;

pub use adamw::AdamW;
pub use mlp::{Mlp, MlpSpec, MlpTrace};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::scalar::Scalar;

/// A learnable tensor: value, gradient accumulator and AdamW moments.
#[derive(Debug, Clone)]
pub struct Parameter<S: Scalar = f64> {
    pub value: DenseMatrix<S>,
    pub grad: DenseMatrix<S>,
    pub m1: DenseMatrix<S>,
    pub m2: DenseMatrix<S>,
    pub step_count: u64,
}

impl<S: Scalar> Parameter<S> {
    pub fn new(value: DenseMatrix<S>) -> Self {
        let (r, c) = value.shape();
        Parameter {
            value,
            grad: DenseMatrix::zeros(r, c),
            m1: DenseMatrix::zeros(r, c),
            m2: DenseMatrix::zeros(r, c),
            step_count: 0,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Parameter::new(DenseMatrix::zeros(rows, cols))
    }

    /// Glorot-uniform init: U(−l, l) with l = √(6 / (fan_in + fan_out)).
    pub fn glorot(rows: usize, cols: usize, rng: &mut SeededRng) -> Self {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let mut value = DenseMatrix::zeros(rows, cols);
        for x in value.data_mut() {
            *x = S::from_f64(rng.uniform_in(-limit, limit));
        }
        Parameter::new(value)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(S::zero());
    }
}

/// out = x·w (+ bias broadcast over rows).
pub fn linear_forward<S: Scalar>(
    x: &DenseMatrix<S>,
    w: &Parameter<S>,
    bias: Option<&Parameter<S>>,
) -> Result<DenseMatrix<S>> {
    let mut out = x.matmul(&w.value)?;
    if let Some(b) = bias {
        if b.value.shape() != (1, out.cols()) {
            return Err(Error::shape(
                "linear",
                format!("bias 1x{}", out.cols()),
                format!("bias {}x{}", b.value.rows(), b.value.cols()),
            ));
        }
        out.add_row_broadcast(&b.value);
    }
    Ok(out)
}

/// Accumulates w.grad += xᵀ·g, bias.grad += Σ_rows g; returns grad_x = g·wᵀ.
pub fn linear_backward<S: Scalar>(
    x: &DenseMatrix<S>,
    w: &mut Parameter<S>,
    bias: Option<&mut Parameter<S>>,
    grad_out: &DenseMatrix<S>,
) -> Result<DenseMatrix<S>> {
    w.grad.add_assign(&x.matmul_tn(grad_out)?);
    if let Some(b) = bias {
        b.grad.add_assign(&grad_out.col_sums());
    }
    grad_out.matmul_nt(&w.value)
}

/// Elementwise max(0, x); the mask (1 where x > 0) drives the backward pass.
pub fn relu_forward<S: Scalar>(x: &DenseMatrix<S>) -> (DenseMatrix<S>, DenseMatrix<S>) {
    let out = x.map(|v| if v > S::zero() { v } else { S::zero() });
    let mask = x.map(|v| if v > S::zero() { S::one() } else { S::zero() });
    (out, mask)
}

pub fn relu_backward<S: Scalar>(mask: &DenseMatrix<S>, grad_out: &DenseMatrix<S>) -> DenseMatrix<S> {
    let mut g = grad_out.clone();
    g.hadamard_assign(mask);
    g
}

/// Inverted dropout: survivors scaled by 1/(1−rate) at train time.
///
/// Returns the output and the combined keep/scale mask (entries 0 or
/// 1/(1−rate)); `None` means the op was an identity (eval mode or rate 0)
/// and backward is a pass-through. The mask recorded here is reused exactly
/// in [`dropout_backward`].
pub fn dropout_forward<S: Scalar>(
    x: &DenseMatrix<S>,
    rate: f64,
    training: bool,
    rng: &mut SeededRng,
) -> Result<(DenseMatrix<S>, Option<DenseMatrix<S>>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidConfig(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    if !training || rate == 0.0 {
        return Ok((x.clone(), None));
    }
    let scale = S::from_f64(1.0 / (1.0 - rate));
    let mut mask = DenseMatrix::zeros(x.rows(), x.cols());
    for m in mask.data_mut() {
        *m = if rng.bernoulli(rate) { S::zero() } else { scale };
    }
    let mut out = x.clone();
    out.hadamard_assign(&mask);
    Ok((out, Some(mask)))
}

pub fn dropout_backward<S: Scalar>(
    mask: Option<&DenseMatrix<S>>,
    grad_out: &DenseMatrix<S>,
) -> DenseMatrix<S> {
    match mask {
        None => grad_out.clone(),
        Some(m) => {
            let mut g = grad_out.clone();
            g.hadamard_assign(m);
            g
        }
    }
}
