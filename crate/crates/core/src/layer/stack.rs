use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::layer::{layer_backward, layer_forward_with, GipaLayerParams, LayerActivations, LayerConfig};
use crate::nn::{dropout_backward, dropout_forward, Mlp, MlpSpec, Parameter};
use crate::rng::SeededRng;
use crate::scalar::Scalar;

/// Shape of a full stacked model: L layers followed by a fully-connected
/// classifier that maps the last node embedding to label logits.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub node_feat_dim: usize,
    pub edge_feat_dim: usize,
    pub num_labels: usize,
    pub num_layers: usize,
    pub node_emb: usize,
    pub edge_emb: usize,
    pub heads: usize,
    pub att_layers: usize,
    pub prop_layers: usize,
    pub agg_layers: usize,
    pub hidden_units: usize,
    pub dropout_node: f64,
    pub dropout_attention: f64,
    pub dropout_propagation: f64,
    pub dropout_aggregation: f64,
    /// Dropout applied to the classifier input ("last FC layer").
    pub dropout_final_fc: f64,
    pub ablate_prop_edges: bool,
}

impl ModelConfig {
    fn layer_config(&self, layer_idx: usize) -> LayerConfig {
        LayerConfig {
            input_dim: if layer_idx == 0 { self.node_feat_dim } else { self.node_emb },
            edge_dim: self.edge_feat_dim,
            node_emb: self.node_emb,
            edge_emb: self.edge_emb,
            output_dim: self.node_emb,
            heads: self.heads,
            att_layers: self.att_layers,
            prop_layers: self.prop_layers,
            agg_layers: self.agg_layers,
            hidden_units: self.hidden_units,
            dropout_node: self.dropout_node,
            dropout_attention: self.dropout_attention,
            dropout_propagation: self.dropout_propagation,
            dropout_aggregation: self.dropout_aggregation,
            ablate_prop_edges: self.ablate_prop_edges,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 {
            return Err(Error::InvalidConfig("at least one layer required".into()));
        }
        if self.num_labels == 0 {
            return Err(Error::InvalidConfig("num_labels must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_final_fc) {
            return Err(Error::InvalidConfig(format!(
                "dropout rate must be in [0, 1), got {}",
                self.dropout_final_fc
            )));
        }
        self.layer_config(0).validate()
    }
}

/// A stack of layers plus the final classifier.
#[derive(Debug, Clone)]
pub struct GipaModel<S: Scalar = f64> {
    pub layers: Vec<GipaLayerParams<S>>,
    pub classifier: Mlp<S>,
    pub dropout_final_fc: f64,
}

/// Activation record of one full model forward.
#[derive(Debug, Clone)]
pub struct StackTrace<S: Scalar = f64> {
    layer_acts: Vec<LayerActivations<S>>,
    final_drop_mask: Option<DenseMatrix<S>>,
    classifier_trace: crate::nn::MlpTrace<S>,
}

impl<S: Scalar> GipaModel<S> {
    pub fn new(cfg: &ModelConfig, rng: &mut SeededRng) -> Result<Self> {
        cfg.validate()?;
        let mut layers = Vec::with_capacity(cfg.num_layers);
        for l in 0..cfg.num_layers {
            layers.push(GipaLayerParams::new(&cfg.layer_config(l), rng)?);
        }
        let classifier = Mlp::new(
            MlpSpec::new(vec![cfg.node_emb, cfg.num_labels], true, 0.0),
            rng,
        )?;
        Ok(GipaModel {
            layers,
            classifier,
            dropout_final_fc: cfg.dropout_final_fc,
        })
    }

    pub fn num_labels(&self) -> usize {
        self.classifier.spec.output_width()
    }

    /// Node features flow through the layer stack; each layer re-projects the
    /// raw edge features. The classifier input gets the final-FC dropout in
    /// training mode. Eval mode consumes no randomness.
    pub fn forward(
        &self,
        g: &CsrGraph<S>,
        training: bool,
        rng: &mut SeededRng,
    ) -> Result<(DenseMatrix<S>, StackTrace<S>)> {
        let mut layer_acts: Vec<LayerActivations<S>> = Vec::with_capacity(self.layers.len());
        let mut cur = g.node_features().clone();
        for params in &self.layers {
            let (out, acts) = layer_forward_with(g, &cur, params, training, rng)?;
            layer_acts.push(acts);
            cur = out;
        }
        let (dropped, final_drop_mask) =
            dropout_forward(&cur, self.dropout_final_fc, training, rng)?;
        let (logits, classifier_trace) = self.classifier.forward(&dropped, training, rng)?;
        Ok((
            logits,
            StackTrace {
                layer_acts,
                final_drop_mask,
                classifier_trace,
            },
        ))
    }

    /// Backward through classifier and all layers; accumulates every
    /// parameter gradient and returns gradients w.r.t. the raw node and edge
    /// feature matrices.
    pub fn backward(
        &mut self,
        g: &CsrGraph<S>,
        trace: &StackTrace<S>,
        grad_logits: &DenseMatrix<S>,
    ) -> Result<(DenseMatrix<S>, DenseMatrix<S>)> {
        let mut grad = self.classifier.backward(&trace.classifier_trace, grad_logits)?;
        grad = dropout_backward(trace.final_drop_mask.as_ref(), &grad);
        let mut grad_edges = DenseMatrix::zeros(
            g.num_undirected_edges(),
            g.edge_features().cols(),
        );
        for (params, acts) in self.layers.iter_mut().zip(&trace.layer_acts).rev() {
            let (gx, ge) = layer_backward(g, params, acts, &grad)?;
            grad_edges.add_assign(&ge);
            grad = gx;
        }
        Ok((grad, grad_edges))
    }

    pub fn visit_parameters(&self, f: &mut impl FnMut(String, &Parameter<S>)) {
        for (l, layer) in self.layers.iter().enumerate() {
            layer.visit_parameters(&format!("layers.{l}"), f);
        }
        self.classifier.visit_parameters("classifier", f);
    }

    pub fn visit_parameters_mut(&mut self, f: &mut impl FnMut(String, &mut Parameter<S>)) {
        for (l, layer) in self.layers.iter_mut().enumerate() {
            layer.visit_parameters_mut(&format!("layers.{l}"), f);
        }
        self.classifier.visit_parameters_mut("classifier", f);
    }

    /// Named value tensors in visit order (the checkpoint payload).
    pub fn state(&self) -> Vec<(String, DenseMatrix<S>)> {
        let mut out = Vec::new();
        self.visit_parameters(&mut |name, p| out.push((name, p.value.clone())));
        out
    }

    /// Replace parameter values from named tensors; optimizer moments reset.
    /// The tensor set must match the model exactly, names and shapes both.
    pub fn load_state(&mut self, tensors: Vec<(String, DenseMatrix<S>)>) -> Result<()> {
        let mut map: std::collections::HashMap<String, DenseMatrix<S>> =
            tensors.into_iter().collect();
        let mut err: Option<Error> = None;
        self.visit_parameters_mut(&mut |name, p| {
            if err.is_some() {
                return;
            }
            match map.remove(&name) {
                None => err = Some(Error::Checkpoint(format!("missing tensor `{name}`"))),
                Some(v) if v.shape() != p.value.shape() => {
                    err = Some(Error::Checkpoint(format!(
                        "tensor `{name}` has shape {:?}, model expects {:?}",
                        v.shape(),
                        p.value.shape()
                    )))
                }
                Some(v) => {
                    let (r, c) = v.shape();
                    p.value = v;
                    p.grad = DenseMatrix::zeros(r, c);
                    p.m1 = DenseMatrix::zeros(r, c);
                    p.m2 = DenseMatrix::zeros(r, c);
                    p.step_count = 0;
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        if let Some(name) = map.keys().next() {
            return Err(Error::Checkpoint(format!(
                "checkpoint contains unknown tensor `{name}`"
            )));
        }
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        self.visit_parameters_mut(&mut |_, p| p.zero_grad());
    }
}
