//! Closed-form attention score primitives used as unit-comparison baselines
//! for the MLP attention: additive, dot-product, general, concat, local and
//! scaled dot-product scoring. Pure functions; normalization (when needed)
//! reuses [`crate::layer::edge_softmax`].

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Parameters for the score functions that need them: an attention vector
/// `u`, a transform `w`, and the key width for scaled dot-product.
#[derive(Debug, Clone)]
pub struct ScoreParams<S: Scalar = f64> {
    pub u: Vec<S>,
    pub w: DenseMatrix<S>,
    pub d_k: usize,
}

fn check_widths<S: Scalar>(op: &'static str, q: &[S], k: &[S]) -> Result<()> {
    if q.len() != k.len() {
        return Err(Error::shape(
            op,
            format!("query width {}", q.len()),
            format!("key width {}", k.len()),
        ));
    }
    Ok(())
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// uᵀ·tanh(W[q;k]): additive attention with a single hidden layer.
pub fn additive_score<S: Scalar>(
    q: &[S],
    k: &[S],
    w: &DenseMatrix<S>,
    u: &[S],
) -> Result<S> {
    if w.cols() != q.len() + k.len() {
        return Err(Error::shape(
            "additive_score",
            format!("W with {} columns", q.len() + k.len()),
            format!("{} columns", w.cols()),
        ));
    }
    if w.rows() != u.len() {
        return Err(Error::shape(
            "additive_score",
            format!("u of length {}", w.rows()),
            format!("length {}", u.len()),
        ));
    }
    let mut score = S::zero();
    for (r, &ur) in u.iter().enumerate() {
        let row = w.row(r);
        let z = dot(&row[..q.len()], q) + dot(&row[q.len()..], k);
        score = score + ur * z.tanh();
    }
    Ok(score)
}

/// qᵀk.
pub fn dot_score<S: Scalar>(q: &[S], k: &[S]) -> Result<S> {
    check_widths("dot_score", q, k)?;
    Ok(dot(q, k))
}

/// qᵀWk.
pub fn general_score<S: Scalar>(q: &[S], k: &[S], w: &DenseMatrix<S>) -> Result<S> {
    if w.rows() != q.len() || w.cols() != k.len() {
        return Err(Error::shape(
            "general_score",
            format!("W {}x{}", q.len(), k.len()),
            format!("W {}x{}", w.rows(), w.cols()),
        ));
    }
    let mut score = S::zero();
    for (r, &qr) in q.iter().enumerate() {
        score = score + qr * dot(w.row(r), k);
    }
    Ok(score)
}

/// uᵀ(W[q;k]): the concat variant, reduced to a scalar by `u`.
pub fn concat_score<S: Scalar>(
    q: &[S],
    k: &[S],
    w: &DenseMatrix<S>,
    u: &[S],
) -> Result<S> {
    if w.cols() != q.len() + k.len() || w.rows() != u.len() {
        return Err(Error::shape(
            "concat_score",
            format!("W {}x{}", u.len(), q.len() + k.len()),
            format!("W {}x{}", w.rows(), w.cols()),
        ));
    }
    let mut score = S::zero();
    for (r, &ur) in u.iter().enumerate() {
        let row = w.row(r);
        score = score + ur * (dot(&row[..q.len()], q) + dot(&row[q.len()..], k));
    }
    Ok(score)
}

/// Wq for a [1 × d] transform; local attention uses the query alone.
pub fn local_score<S: Scalar>(q: &[S], w: &DenseMatrix<S>) -> Result<S> {
    if w.rows() != 1 || w.cols() != q.len() {
        return Err(Error::shape(
            "local_score",
            format!("W 1x{}", q.len()),
            format!("W {}x{}", w.rows(), w.cols()),
        ));
    }
    Ok(dot(w.row(0), q))
}

/// qᵀk / √d_k.
pub fn scaled_dot_score<S: Scalar>(q: &[S], k: &[S]) -> Result<S> {
    check_widths("scaled_dot_score", q, k)?;
    if q.is_empty() {
        return Err(Error::InvalidConfig("scaled dot product needs d_k >= 1".into()));
    }
    Ok(dot(q, k) / S::from_usize(q.len()).sqrt())
}
