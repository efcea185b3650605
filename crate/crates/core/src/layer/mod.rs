//! The message-passing layer: linear input projections, MLP multi-head
//! attention normalized by an edge-wise softmax, edge-featured propagation,
//! attention-gated messages, and segment-sum aggregation with a residual
//! projection, with forward and exact hand-written backward passes.
//!
//! Per directed edge (i←j) with shared undirected feature row e:
//!
//! ```text
//! ã_ij = att_mlp([h̃_i ‖ h̃_j ‖ ẽ_e])            raw scores, one per head
//! a_ij = softmax over j ∈ N(i), per head        edge-wise softmax
//! p_ij = prop_mlp([h̃_j ‖ ẽ_e])                  edge-wise propagation
//! m_ij = a_ij * p_ij                            head gates feature blocks
//! m_i  = Σ_j m_ij                               fixed-order segment sum
//! o_i  = agg_mlp([m_i ‖ W_res·h̃_i])             residual concat + MLP
//! ```

mod stack;

pub use stack::{GipaModel, ModelConfig, StackTrace};

use crate::dense::{concat_cols, split_cols, DenseMatrix};
use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::nn::{dropout_backward, dropout_forward, Mlp, MlpSpec, MlpTrace, Parameter};
use crate::rng::SeededRng;
use crate::scalar::Scalar;

/// Shape and dropout configuration of one layer.
#[derive(Debug, Clone)]
pub struct LayerConfig {
    /// Width of the incoming node representation.
    pub input_dim: usize,
    /// Width of the raw edge features.
    pub edge_dim: usize,
    /// Node embedding width d_h.
    pub node_emb: usize,
    /// Edge embedding width d_e.
    pub edge_emb: usize,
    /// Output width of the aggregation MLP.
    pub output_dim: usize,
    pub heads: usize,
    /// Depth (number of linear layers) of the attention MLP.
    pub att_layers: usize,
    /// Depth of the propagation MLP.
    pub prop_layers: usize,
    /// Depth of the aggregation MLP.
    pub agg_layers: usize,
    /// Hidden width shared by the three MLPs.
    pub hidden_units: usize,
    pub dropout_node: f64,
    pub dropout_attention: f64,
    pub dropout_propagation: f64,
    pub dropout_aggregation: f64,
    /// When set, the propagation MLP sees zeros in place of the edge
    /// embedding block (ablation used to measure the edge-feature advantage).
    pub ablate_prop_edges: bool,
}

impl LayerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.heads == 0 {
            return Err(Error::InvalidConfig("heads must be >= 1".into()));
        }
        if !self.node_emb.is_multiple_of(self.heads) {
            return Err(Error::InvalidConfig(format!(
                "head count {} must divide node embedding width {}",
                self.heads, self.node_emb
            )));
        }
        for (name, d) in [
            ("input_dim", self.input_dim),
            ("node_emb", self.node_emb),
            ("edge_emb", self.edge_emb),
            ("output_dim", self.output_dim),
            ("hidden_units", self.hidden_units),
        ] {
            if d == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        for (name, depth) in [
            ("att_layers", self.att_layers),
            ("prop_layers", self.prop_layers),
            ("agg_layers", self.agg_layers),
        ] {
            if depth == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }
}

fn mlp_widths(input: usize, hidden: usize, depth: usize, output: usize) -> Vec<usize> {
    let mut w = vec![input];
    w.extend(std::iter::repeat_n(hidden, depth - 1));
    w.push(output);
    w
}

/// All learnable blocks of one layer.
#[derive(Debug, Clone)]
pub struct GipaLayerParams<S: Scalar = f64> {
    /// Shared projection for the destination and source node roles.
    pub node_proj: Parameter<S>,
    pub edge_proj: Parameter<S>,
    /// Attention MLP (no biases), output width = heads.
    pub att_mlp: Mlp<S>,
    pub prop_mlp: Mlp<S>,
    pub agg_mlp: Mlp<S>,
    /// Residual projection of h̃ concatenated into the aggregation input.
    pub res_proj: Parameter<S>,
    pub heads: usize,
    pub dropout_node: f64,
    pub ablate_prop_edges: bool,
}

impl<S: Scalar> GipaLayerParams<S> {
    pub fn new(cfg: &LayerConfig, rng: &mut SeededRng) -> Result<Self> {
        cfg.validate()?;
        let d_h = cfg.node_emb;
        let d_e = cfg.edge_emb;
        let att_spec = MlpSpec::new(
            mlp_widths(2 * d_h + d_e, cfg.hidden_units, cfg.att_layers, cfg.heads),
            false,
            cfg.dropout_attention,
        );
        let prop_spec = MlpSpec::new(
            mlp_widths(d_h + d_e, cfg.hidden_units, cfg.prop_layers, d_h),
            true,
            cfg.dropout_propagation,
        );
        let agg_spec = MlpSpec::new(
            mlp_widths(2 * d_h, cfg.hidden_units, cfg.agg_layers, cfg.output_dim),
            true,
            cfg.dropout_aggregation,
        );
        Ok(GipaLayerParams {
            node_proj: Parameter::glorot(cfg.input_dim, d_h, rng),
            edge_proj: Parameter::glorot(cfg.edge_dim, d_e, rng),
            att_mlp: Mlp::new(att_spec, rng)?,
            prop_mlp: Mlp::new(prop_spec, rng)?,
            agg_mlp: Mlp::new(agg_spec, rng)?,
            res_proj: Parameter::glorot(d_h, d_h, rng),
            heads: cfg.heads,
            dropout_node: cfg.dropout_node,
            ablate_prop_edges: cfg.ablate_prop_edges,
        })
    }

    pub fn node_emb(&self) -> usize {
        self.node_proj.value.cols()
    }

    pub fn edge_emb(&self) -> usize {
        self.edge_proj.value.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.agg_mlp.spec.output_width()
    }

    pub fn visit_parameters(&self, prefix: &str, f: &mut impl FnMut(String, &Parameter<S>)) {
        f(format!("{prefix}.node_proj"), &self.node_proj);
        f(format!("{prefix}.edge_proj"), &self.edge_proj);
        self.att_mlp.visit_parameters(&format!("{prefix}.att"), f);
        self.prop_mlp.visit_parameters(&format!("{prefix}.prop"), f);
        self.agg_mlp.visit_parameters(&format!("{prefix}.agg"), f);
        f(format!("{prefix}.res_proj"), &self.res_proj);
    }

    pub fn visit_parameters_mut(&mut self, prefix: &str, f: &mut impl FnMut(String, &mut Parameter<S>)) {
        f(format!("{prefix}.node_proj"), &mut self.node_proj);
        f(format!("{prefix}.edge_proj"), &mut self.edge_proj);
        self.att_mlp.visit_parameters_mut(&format!("{prefix}.att"), f);
        self.prop_mlp.visit_parameters_mut(&format!("{prefix}.prop"), f);
        self.agg_mlp.visit_parameters_mut(&format!("{prefix}.agg"), f);
        f(format!("{prefix}.res_proj"), &mut self.res_proj);
    }
}

/// Every intermediate a backward pass needs, recorded by [`layer_forward`].
#[derive(Debug, Clone)]
pub struct LayerActivations<S: Scalar = f64> {
    node_input: DenseMatrix<S>,
    /// h̃ after node-embedding dropout; the value all downstream ops consume.
    pub h_tilde: DenseMatrix<S>,
    node_drop_mask: Option<DenseMatrix<S>>,
    pub e_tilde: DenseMatrix<S>,
    att_trace: MlpTrace<S>,
    /// Raw attention scores ã, [num_edges × heads].
    pub scores_raw: DenseMatrix<S>,
    /// Normalized attention a, [num_edges × heads].
    pub attention: DenseMatrix<S>,
    prop_trace: MlpTrace<S>,
    /// Propagated features p, [num_edges × node_emb].
    pub propagated: DenseMatrix<S>,
    /// Messages m = a * p, [num_edges × node_emb].
    pub messages: DenseMatrix<S>,
    /// Per-destination segment sums m_i, [n × node_emb].
    pub node_messages: DenseMatrix<S>,
    /// Residual projection ĥ, [n × node_emb].
    pub h_hat: DenseMatrix<S>,
    agg_trace: MlpTrace<S>,
    /// Layer output o, [n × output_dim].
    pub output: DenseMatrix<S>,
}

fn for_each_edge<S: Scalar>(g: &CsrGraph<S>, mut f: impl FnMut(usize, usize, usize, usize)) {
    let cols = g.col_indices();
    let eids = g.edge_ids();
    for dst in 0..g.num_nodes() {
        for k in g.segment(dst) {
            f(k, dst, cols[k], eids[k]);
        }
    }
}

/// Linear projections of node and edge features into embedding space, with
/// node-embedding dropout in training mode. Returns (h̃, node mask, ẽ).
pub fn project_inputs<S: Scalar>(
    g: &CsrGraph<S>,
    params: &GipaLayerParams<S>,
    training: bool,
    rng: &mut SeededRng,
) -> Result<(DenseMatrix<S>, Option<DenseMatrix<S>>, DenseMatrix<S>)> {
    project_inputs_from(g.node_features(), g.edge_features(), params, training, rng)
}

fn project_inputs_from<S: Scalar>(
    node_input: &DenseMatrix<S>,
    edge_features: &DenseMatrix<S>,
    params: &GipaLayerParams<S>,
    training: bool,
    rng: &mut SeededRng,
) -> Result<(DenseMatrix<S>, Option<DenseMatrix<S>>, DenseMatrix<S>)> {
    let h_pre = node_input.matmul(&params.node_proj.value)?;
    let (h_tilde, mask) = dropout_forward(&h_pre, params.dropout_node, training, rng)?;
    let e_tilde = if edge_features.rows() == 0 {
        DenseMatrix::zeros(0, params.edge_emb())
    } else {
        edge_features.matmul(&params.edge_proj.value)?
    };
    Ok((h_tilde, mask, e_tilde))
}

/// Raw multi-head attention scores: per edge, the attention MLP applied to
/// [h̃_i ‖ h̃_j ‖ ẽ]. Returns [num_edges × heads] plus the MLP trace.
pub fn attention_scores<S: Scalar>(
    g: &CsrGraph<S>,
    h_tilde: &DenseMatrix<S>,
    e_tilde: &DenseMatrix<S>,
    params: &GipaLayerParams<S>,
    training: bool,
    rng: &mut SeededRng,
) -> Result<(DenseMatrix<S>, MlpTrace<S>)> {
    let d_h = h_tilde.cols();
    let d_e = e_tilde.cols();
    let mut x = DenseMatrix::zeros(g.num_edges(), 2 * d_h + d_e);
    for_each_edge(g, |k, dst, src, eid| {
        let row = x.row_mut(k);
        row[..d_h].copy_from_slice(h_tilde.row(dst));
        row[d_h..2 * d_h].copy_from_slice(h_tilde.row(src));
        row[2 * d_h..].copy_from_slice(e_tilde.row(eid));
    });
    params.att_mlp.forward(&x, training, rng)
}

/// Softmax over each destination node's incoming-edge scores, independently
/// per head, with the per-segment max subtracted for stability. Nodes without
/// in-edges contribute no rows.
pub fn edge_softmax<S: Scalar>(g: &CsrGraph<S>, scores: &DenseMatrix<S>) -> DenseMatrix<S> {
    let heads = scores.cols();
    let mut out = DenseMatrix::zeros(scores.rows(), heads);
    for i in 0..g.num_nodes() {
        let seg = g.segment(i);
        if seg.is_empty() {
            continue;
        }
        for h in 0..heads {
            let mut max = S::neg_infinity();
            for k in seg.clone() {
                max = max.max(scores.get(k, h));
            }
            let mut sum = S::zero();
            for k in seg.clone() {
                let e = (scores.get(k, h) - max).exp();
                out.set(k, h, e);
                sum = sum + e;
            }
            for k in seg.clone() {
                out.set(k, h, out.get(k, h) / sum);
            }
        }
    }
    out
}

/// Backward of [`edge_softmax`]: per segment and head,
/// grad_ã = a ⊙ (grad_a − Σ_k grad_a_k · a_k).
pub fn edge_softmax_backward<S: Scalar>(
    g: &CsrGraph<S>,
    attention: &DenseMatrix<S>,
    grad_attention: &DenseMatrix<S>,
) -> DenseMatrix<S> {
    let heads = attention.cols();
    let mut out = DenseMatrix::zeros(attention.rows(), heads);
    for i in 0..g.num_nodes() {
        let seg = g.segment(i);
        for h in 0..heads {
            let mut dot = S::zero();
            for k in seg.clone() {
                dot = dot + grad_attention.get(k, h) * attention.get(k, h);
            }
            for k in seg.clone() {
                let a = attention.get(k, h);
                out.set(k, h, a * (grad_attention.get(k, h) - dot));
            }
        }
    }
    out
}

/// Edge-wise propagation: per edge, the propagation MLP applied to
/// [h̃_j ‖ ẽ]. Returns [num_edges × node_emb] plus the MLP trace.
pub fn propagate<S: Scalar>(
    g: &CsrGraph<S>,
    h_tilde: &DenseMatrix<S>,
    e_tilde: &DenseMatrix<S>,
    params: &GipaLayerParams<S>,
    training: bool,
    rng: &mut SeededRng,
) -> Result<(DenseMatrix<S>, MlpTrace<S>)> {
    let d_h = h_tilde.cols();
    let d_e = e_tilde.cols();
    let mut x = DenseMatrix::zeros(g.num_edges(), d_h + d_e);
    for_each_edge(g, |k, _dst, src, eid| {
        let row = x.row_mut(k);
        row[..d_h].copy_from_slice(h_tilde.row(src));
        if !params.ablate_prop_edges {
            row[d_h..].copy_from_slice(e_tilde.row(eid));
        }
    });
    params.prop_mlp.forward(&x, training, rng)
}

/// Head-gated message: p's columns are viewed as `heads` contiguous blocks
/// and block b of each row is scaled by that row's head-b attention weight.
/// With heads = node_emb this is exact element-wise multiplication; with one
/// head it is scalar gating.
pub fn fuse_message<S: Scalar>(
    attention: &DenseMatrix<S>,
    propagated: &DenseMatrix<S>,
    heads: usize,
) -> Result<DenseMatrix<S>> {
    let d_h = propagated.cols();
    if heads == 0 || !d_h.is_multiple_of(heads) {
        return Err(Error::InvalidConfig(format!(
            "head count {heads} must divide feature width {d_h}"
        )));
    }
    let bw = d_h / heads;
    let mut out = propagated.clone();
    for k in 0..out.rows() {
        let a_row = attention.row(k);
        let row = out.row_mut(k);
        for (h, &a) in a_row.iter().enumerate() {
            for v in &mut row[h * bw..(h + 1) * bw] {
                *v = *v * a;
            }
        }
    }
    Ok(out)
}

/// Backward of [`fuse_message`]: returns (grad_attention, grad_propagated).
pub fn fuse_message_backward<S: Scalar>(
    attention: &DenseMatrix<S>,
    propagated: &DenseMatrix<S>,
    heads: usize,
    grad_messages: &DenseMatrix<S>,
) -> (DenseMatrix<S>, DenseMatrix<S>) {
    let d_h = propagated.cols();
    let bw = d_h / heads;
    let mut grad_a = DenseMatrix::zeros(attention.rows(), heads);
    let mut grad_p = DenseMatrix::zeros(propagated.rows(), d_h);
    for k in 0..propagated.rows() {
        let a_row = attention.row(k);
        let p_row = propagated.row(k);
        let g_row = grad_messages.row(k);
        let ga_row = grad_a.row_mut(k);
        for h in 0..heads {
            let mut acc = S::zero();
            for c in h * bw..(h + 1) * bw {
                acc = acc + g_row[c] * p_row[c];
            }
            ga_row[h] = acc;
        }
        let gp_row = grad_p.row_mut(k);
        for h in 0..heads {
            for c in h * bw..(h + 1) * bw {
                gp_row[c] = g_row[c] * a_row[h];
            }
        }
    }
    (grad_a, grad_p)
}

/// Fixed-order segment sum of messages per destination node (zero vector for
/// isolated nodes), residual projection, and the aggregation MLP over
/// [m_i ‖ ĥ_i]. Returns (o, m_i, ĥ, trace).
pub fn aggregate<S: Scalar>(
    g: &CsrGraph<S>,
    messages: &DenseMatrix<S>,
    h_tilde: &DenseMatrix<S>,
    params: &GipaLayerParams<S>,
    training: bool,
    rng: &mut SeededRng,
) -> Result<(DenseMatrix<S>, DenseMatrix<S>, DenseMatrix<S>, MlpTrace<S>)> {
    let d_h = h_tilde.cols();
    let mut node_messages = DenseMatrix::zeros(g.num_nodes(), d_h);
    for i in 0..g.num_nodes() {
        for k in g.segment(i) {
            let dst = node_messages.row_mut(i);
            for (o, &v) in dst.iter_mut().zip(messages.row(k)) {
                *o = *o + v;
            }
        }
    }
    let h_hat = h_tilde.matmul(&params.res_proj.value)?;
    let x = concat_cols(&[&node_messages, &h_hat])?;
    let (out, trace) = params.agg_mlp.forward(&x, training, rng)?;
    Ok((out, node_messages, h_hat, trace))
}

/// Full layer forward over the graph's own node features.
pub fn layer_forward<S: Scalar>(
    g: &CsrGraph<S>,
    params: &GipaLayerParams<S>,
    training: bool,
    rng: &mut SeededRng,
) -> Result<(DenseMatrix<S>, LayerActivations<S>)> {
    layer_forward_with(g, g.node_features(), params, training, rng)
}

/// Layer forward with an explicit node-input matrix (used when stacking:
/// node representations flow through, edge features are re-projected from
/// the raw edge features every layer).
pub fn layer_forward_with<S: Scalar>(
    g: &CsrGraph<S>,
    node_input: &DenseMatrix<S>,
    params: &GipaLayerParams<S>,
    training: bool,
    rng: &mut SeededRng,
) -> Result<(DenseMatrix<S>, LayerActivations<S>)> {
    let (h_tilde, node_drop_mask, e_tilde) =
        project_inputs_from(node_input, g.edge_features(), params, training, rng)?;
    let (scores_raw, att_trace) = attention_scores(g, &h_tilde, &e_tilde, params, training, rng)?;
    let attention = edge_softmax(g, &scores_raw);
    let (propagated, prop_trace) = propagate(g, &h_tilde, &e_tilde, params, training, rng)?;
    let messages = fuse_message(&attention, &propagated, params.heads)?;
    let (output, node_messages, h_hat, agg_trace) =
        aggregate(g, &messages, &h_tilde, params, training, rng)?;
    let acts = LayerActivations {
        node_input: node_input.clone(),
        h_tilde,
        node_drop_mask,
        e_tilde,
        att_trace,
        scores_raw,
        attention,
        prop_trace,
        propagated,
        messages,
        node_messages,
        h_hat,
        agg_trace,
        output: output.clone(),
    };
    Ok((output, acts))
}

/// Exact reverse of the layer: accumulates gradients on every parameter and
/// returns gradients w.r.t. the node-input matrix and the raw edge features.
pub fn layer_backward<S: Scalar>(
    g: &CsrGraph<S>,
    params: &mut GipaLayerParams<S>,
    acts: &LayerActivations<S>,
    grad_output: &DenseMatrix<S>,
) -> Result<(DenseMatrix<S>, DenseMatrix<S>)> {
    if grad_output.shape() != acts.output.shape() {
        return Err(Error::shape(
            "layer_backward",
            format!("{:?}", acts.output.shape()),
            format!("{:?}", grad_output.shape()),
        ));
    }
    let d_h = acts.h_tilde.cols();

    // aggregation MLP → split into segment-sum and residual branches
    let grad_x_agg = params.agg_mlp.backward(&acts.agg_trace, grad_output)?;
    let parts = split_cols(&grad_x_agg, &[d_h, d_h]);
    let (grad_msum, grad_hhat) = (&parts[0], &parts[1]);

    // residual projection ĥ = h̃ · W_res
    params.res_proj.grad.add_assign(&acts.h_tilde.matmul_tn(grad_hhat)?);
    let mut grad_h_tilde = grad_hhat.matmul_nt(&params.res_proj.value)?;

    // segment sum broadcast: every in-edge of i inherits grad_msum[i]
    let mut grad_messages = DenseMatrix::zeros(g.num_edges(), d_h);
    for_each_edge(g, |k, dst, _src, _eid| {
        grad_messages.row_mut(k).copy_from_slice(grad_msum.row(dst));
    });

    // message gate m = a * p
    let (grad_attention, grad_propagated) =
        fuse_message_backward(&acts.attention, &acts.propagated, params.heads, &grad_messages);

    // softmax and attention MLP
    let grad_scores = edge_softmax_backward(g, &acts.attention, &grad_attention);
    let grad_x_att = params.att_mlp.backward(&acts.att_trace, &grad_scores)?;

    // propagation MLP
    let grad_x_prop = params.prop_mlp.backward(&acts.prop_trace, &grad_propagated)?;

    // scatter edge-wise gradients back to h̃ and ẽ
    let d_e = acts.e_tilde.cols();
    let mut grad_e_tilde = DenseMatrix::zeros(acts.e_tilde.rows(), d_e);
    for_each_edge(g, |k, dst, src, eid| {
        let ga = grad_x_att.row(k);
        {
            let h_dst = grad_h_tilde.row_mut(dst);
            for (o, &v) in h_dst.iter_mut().zip(&ga[..d_h]) {
                *o = *o + v;
            }
        }
        {
            let h_src = grad_h_tilde.row_mut(src);
            for (o, &v) in h_src.iter_mut().zip(&ga[d_h..2 * d_h]) {
                *o = *o + v;
            }
        }
        {
            let e_row = grad_e_tilde.row_mut(eid);
            for (o, &v) in e_row.iter_mut().zip(&ga[2 * d_h..]) {
                *o = *o + v;
            }
        }
        let gp = grad_x_prop.row(k);
        {
            let h_src = grad_h_tilde.row_mut(src);
            for (o, &v) in h_src.iter_mut().zip(&gp[..d_h]) {
                *o = *o + v;
            }
        }
        if !params.ablate_prop_edges {
            let e_row = grad_e_tilde.row_mut(eid);
            for (o, &v) in e_row.iter_mut().zip(&gp[d_h..]) {
                *o = *o + v;
            }
        }
    });

    // node-embedding dropout, then the input projections
    let grad_h_pre = dropout_backward(acts.node_drop_mask.as_ref(), &grad_h_tilde);
    params.node_proj.grad.add_assign(&acts.node_input.matmul_tn(&grad_h_pre)?);
    let grad_node_input = grad_h_pre.matmul_nt(&params.node_proj.value)?;

    let grad_edge_features = if acts.e_tilde.rows() == 0 {
        DenseMatrix::zeros(0, params.edge_proj.value.rows())
    } else {
        params.edge_proj.grad.add_assign(&g.edge_features().matmul_tn(&grad_e_tilde)?);
        grad_e_tilde.matmul_nt(&params.edge_proj.value)?
    };

    Ok((grad_node_input, grad_edge_features))
}
