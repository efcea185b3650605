//! Finite-difference verification of the hand-written backward passes.
//!
//! The analytic side is one forward + backward of the full model under a BCE
//! objective; the numeric side re-evaluates the loss at ±h around sampled
//! entries of every parameter tensor and both input-feature matrices. Runs
//! in eval mode so the objective is deterministic and smooth (up to ReLU
//! kinks, which the tolerances absorb at random points).

use crate::dense::DenseMatrix;
use crate::error::Result;
use crate::graph::{build_graph, CsrGraph};
use crate::layer::GipaModel;
use crate::metrics::bce_with_logits;
use crate::rng::SeededRng;
use crate::scalar::Scalar;

pub const NODE_INPUT_TENSOR: &str = "input.node_features";
pub const EDGE_INPUT_TENSOR: &str = "input.edge_features";

#[derive(Debug, Clone)]
pub struct GradCheckOptions {
    /// Central-difference step h.
    pub step: f64,
    pub rel_tol: f64,
    /// Entries are considered matching when the absolute difference is below
    /// this, regardless of relative error (handles near-zero gradients).
    pub abs_tol: f64,
    /// Cap on probed entries per tensor; 0 means every entry.
    pub max_entries_per_tensor: usize,
    pub sample_seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-5,
            rel_tol: 1e-4,
            abs_tol: 1e-7,
            max_entries_per_tensor: 12,
            sample_seed: 0,
        }
    }
}

/// Outcome for one tensor.
#[derive(Debug, Clone)]
pub struct TensorCheck {
    pub name: String,
    pub entries_checked: usize,
    pub worst_rel_err: f64,
    pub worst_abs_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn all_pass(&self) -> bool {
        self.tensors.iter().all(|t| t.pass)
    }

    pub fn worst(&self) -> Option<&TensorCheck> {
        self.tensors
            .iter()
            .max_by(|a, b| a.worst_rel_err.total_cmp(&b.worst_rel_err))
    }
}

fn model_loss<S: Scalar>(
    g: &CsrGraph<S>,
    model: &GipaModel<S>,
    labels: &DenseMatrix<S>,
    mask: &[usize],
) -> Result<f64> {
    let mut rng = SeededRng::new(0); // eval mode draws nothing
    let (logits, _) = model.forward(g, false, &mut rng)?;
    Ok(bce_with_logits(&logits, labels, mask)?.0)
}

/// One analytic forward/backward under the BCE objective over all nodes.
/// Returns (name, gradient) for every parameter tensor plus the two
/// input-feature gradients, in a fixed order.
pub fn analytic_gradients<S: Scalar>(
    g: &CsrGraph<S>,
    model: &mut GipaModel<S>,
    labels: &DenseMatrix<S>,
) -> Result<Vec<(String, DenseMatrix<S>)>> {
    let mask: Vec<usize> = (0..g.num_nodes()).collect();
    model.zero_grads();
    let mut rng = SeededRng::new(0);
    let (logits, trace) = model.forward(g, false, &mut rng)?;
    let (_, grad_logits) = bce_with_logits(&logits, labels, &mask)?;
    let (grad_nodes, grad_edges) = model.backward(g, &trace, &grad_logits)?;
    let mut out = Vec::new();
    model.visit_parameters(&mut |name, p| out.push((name, p.grad.clone())));
    out.push((NODE_INPUT_TENSOR.to_string(), grad_nodes));
    out.push((EDGE_INPUT_TENSOR.to_string(), grad_edges));
    Ok(out)
}

fn sample_entries(len: usize, cap: usize, seed: u64) -> Vec<usize> {
    if cap == 0 || len <= cap {
        return (0..len).collect();
    }
    let mut ids: Vec<usize> = (0..len).collect();
    let mut rng = SeededRng::new(seed);
    for i in 0..cap {
        let j = i + rng.below(len - i);
        ids.swap(i, j);
    }
    ids.truncate(cap);
    ids.sort_unstable();
    ids
}

fn shift_param_entry<S: Scalar>(model: &mut GipaModel<S>, tensor: usize, entry: usize, delta: S) {
    let mut idx = 0;
    model.visit_parameters_mut(&mut |_, p| {
        if idx == tensor {
            let data = p.value.data_mut();
            data[entry] = data[entry] + delta;
        }
        idx += 1;
    });
}

/// Compares `analytic` (from [`analytic_gradients`]) against central finite
/// differences of the same BCE objective. An entry passes when the absolute
/// difference is below `abs_tol` or the relative error is below `rel_tol`.
pub fn compare_with_finite_differences<S: Scalar>(
    g: &CsrGraph<S>,
    model: &mut GipaModel<S>,
    labels: &DenseMatrix<S>,
    analytic: &[(String, DenseMatrix<S>)],
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let mask: Vec<usize> = (0..g.num_nodes()).collect();
    let h = S::from_f64(opts.step);
    let mut graph = g.clone();
    let mut tensors = Vec::with_capacity(analytic.len());

    for (tensor_idx, (name, grad)) in analytic.iter().enumerate() {
        let len = grad.data().len();
        let entries = sample_entries(
            len,
            opts.max_entries_per_tensor,
            opts.sample_seed ^ tensor_idx as u64,
        );
        let mut worst_rel = 0.0f64;
        let mut worst_abs = 0.0f64;
        let mut pass = true;
        for &e in &entries {
            let shift = |graph: &mut CsrGraph<S>, model: &mut GipaModel<S>, d: S| {
                match name.as_str() {
                    NODE_INPUT_TENSOR => {
                        let m = graph.node_features_mut().data_mut();
                        m[e] = m[e] + d;
                    }
                    EDGE_INPUT_TENSOR => {
                        let m = graph.edge_features_mut().data_mut();
                        m[e] = m[e] + d;
                    }
                    _ => shift_param_entry(model, tensor_idx, e, d),
                }
            };
            shift(&mut graph, model, h);
            let up = model_loss(&graph, model, labels, &mask)?;
            shift(&mut graph, model, S::from_f64(-2.0 * opts.step));
            let down = model_loss(&graph, model, labels, &mask)?;
            shift(&mut graph, model, h);

            let fd = (up - down) / (2.0 * opts.step);
            let an = grad.data()[e].as_f64();
            let abs_err = (fd - an).abs();
            let rel_err = abs_err / fd.abs().max(an.abs()).max(f64::MIN_POSITIVE);
            worst_abs = worst_abs.max(abs_err);
            if abs_err > opts.abs_tol {
                worst_rel = worst_rel.max(rel_err);
                if rel_err >= opts.rel_tol {
                    pass = false;
                }
            }
        }
        tensors.push(TensorCheck {
            name: name.clone(),
            entries_checked: entries.len(),
            worst_rel_err: worst_rel,
            worst_abs_err: worst_abs,
            pass,
        });
    }
    Ok(GradCheckReport { tensors })
}

/// Convenience wrapper: analytic pass then finite-difference comparison.
pub fn check_model_gradients<S: Scalar>(
    g: &CsrGraph<S>,
    model: &mut GipaModel<S>,
    labels: &DenseMatrix<S>,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let analytic = analytic_gradients(g, model, labels)?;
    compare_with_finite_differences(g, model, labels, &analytic, opts)
}

/// Random connected-ish probe graph for gradient checking: a ring plus
/// `avg_degree - 1` uniform partners per node, standard-normal features.
pub fn random_probe_graph<S: Scalar>(
    n: usize,
    avg_degree: usize,
    d_node: usize,
    d_edge: usize,
    seed: u64,
) -> Result<CsrGraph<S>> {
    let mut rng = SeededRng::new(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        let feat: Vec<S> = (0..d_edge).map(|_| S::from_f64(rng.normal())).collect();
        edges.push((u, (u + 1) % n, feat));
        for _ in 1..avg_degree {
            let mut v = rng.below(n - 1);
            if v >= u {
                v += 1;
            }
            let feat: Vec<S> = (0..d_edge).map(|_| S::from_f64(rng.normal())).collect();
            edges.push((u, v, feat));
        }
    }
    let mut nf = DenseMatrix::zeros(n, d_node);
    for v in nf.data_mut() {
        *v = S::from_f64(rng.normal());
    }
    build_graph(&edges, nf)
}

/// Random binary label matrix for the probe objective.
pub fn random_labels<S: Scalar>(n: usize, num_labels: usize, seed: u64) -> DenseMatrix<S> {
    let mut rng = SeededRng::new(seed);
    let mut labels = DenseMatrix::zeros(n, num_labels);
    for v in labels.data_mut() {
        *v = if rng.bernoulli(0.5) { S::one() } else { S::zero() };
    }
    labels
}
