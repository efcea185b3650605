//! Full-graph training loop: per epoch, edge drop → forward in training mode
//! → masked BCE on train nodes → backward → one AdamW step, with periodic
//! eval-mode ROC-AUC on the valid/test splits and best-valid checkpointing.
//! Fully deterministic for a fixed seed.

use std::fmt::Write as _;

use crate::data::Splits;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::layer::{GipaModel, ModelConfig};
use crate::metrics::{bce_with_logits, eval_report, EvalReport};
use crate::nn::AdamW;
use crate::rng::SeededRng;
use crate::scalar::Scalar;

/// Every model and training hyperparameter, with the reference defaults
/// (80/16 embeddings, 2-layer attention and propagation MLPs, 8 heads,
/// 80 hidden units, 6 stacked layers, the five dropout rates, edge drop 0.1,
/// AdamW at learning rate 0.01).
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub node_emb: usize,
    pub edge_emb: usize,
    pub att_layers: usize,
    pub heads: usize,
    pub prop_layers: usize,
    pub agg_layers: usize,
    pub hidden_units: usize,
    pub num_gipa_layers: usize,
    pub edge_drop: f64,
    pub dropout_node: f64,
    pub dropout_attention: f64,
    pub dropout_propagation: f64,
    pub dropout_aggregation: f64,
    pub dropout_final_fc: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub eval_every: usize,
    pub seed: u64,
    /// Zero the propagation MLP's edge-embedding input block (ablation).
    pub ablate_prop_edges: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            node_emb: 80,
            edge_emb: 16,
            att_layers: 2,
            heads: 8,
            prop_layers: 2,
            agg_layers: 2,
            hidden_units: 80,
            num_gipa_layers: 6,
            edge_drop: 0.1,
            dropout_node: 0.1,
            dropout_attention: 0.1,
            dropout_propagation: 0.25,
            dropout_aggregation: 0.25,
            dropout_final_fc: 0.5,
            learning_rate: 0.01,
            weight_decay: 0.0,
            epochs: 200,
            eval_every: 10,
            seed: 0,
            ablate_prop_edges: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [
            ("edge_drop", self.edge_drop),
            ("dropout_node", self.dropout_node),
            ("dropout_attention", self.dropout_attention),
            ("dropout_propagation", self.dropout_propagation),
            ("dropout_aggregation", self.dropout_aggregation),
            ("dropout_final_fc", self.dropout_final_fc),
        ] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be in [0, 1), got {rate}"
                )));
            }
        }
        if self.epochs == 0 || self.eval_every == 0 {
            return Err(Error::InvalidConfig(
                "epochs and eval_every must be >= 1".into(),
            ));
        }
        if self.heads == 0 || !self.node_emb.is_multiple_of(self.heads) {
            return Err(Error::InvalidConfig(format!(
                "head count {} must divide node embedding width {}",
                self.heads, self.node_emb
            )));
        }
        Ok(())
    }

    /// Model shape for a dataset with the given feature and label widths.
    pub fn model_config(
        &self,
        node_feat_dim: usize,
        edge_feat_dim: usize,
        num_labels: usize,
    ) -> ModelConfig {
        ModelConfig {
            node_feat_dim,
            edge_feat_dim,
            num_labels,
            num_layers: self.num_gipa_layers,
            node_emb: self.node_emb,
            edge_emb: self.edge_emb,
            heads: self.heads,
            att_layers: self.att_layers,
            prop_layers: self.prop_layers,
            agg_layers: self.agg_layers,
            hidden_units: self.hidden_units,
            dropout_node: self.dropout_node,
            dropout_attention: self.dropout_attention,
            dropout_propagation: self.dropout_propagation,
            dropout_aggregation: self.dropout_aggregation,
            dropout_final_fc: self.dropout_final_fc,
            ablate_prop_edges: self.ablate_prop_edges,
        }
    }
}

/// One line of the metrics history; AUC columns are filled on eval epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_auc: Option<f64>,
    pub test_auc: Option<f64>,
}

/// Training result: metrics history, the best-valid checkpoint and the model
/// in its final state.
#[derive(Debug, Clone)]
pub struct TrainOutcome<S: Scalar = f64> {
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_valid_auc: f64,
    pub best_test_auc: f64,
    pub best_state: Vec<(String, DenseMatrix<S>)>,
    pub model: GipaModel<S>,
}

fn drop_mask(num_edges: usize, rate: f64, rng: &mut SeededRng) -> Vec<bool> {
    if rate == 0.0 {
        return vec![true; num_edges];
    }
    (0..num_edges).map(|_| !rng.bernoulli(rate)).collect()
}

/// Per-epoch edge mask: each undirected edge is dropped independently with
/// probability `rate`; both directed entries of a dropped edge vanish
/// together (apply with [`CsrGraph::masked`]). Eval keeps all edges.
pub fn edge_drop<S: Scalar>(g: &CsrGraph<S>, rate: f64, rng: &mut SeededRng) -> Vec<bool> {
    drop_mask(g.num_undirected_edges(), rate, rng)
}

/// Eval-mode forward (no dropout, all edges) and metric report over `ids`.
pub fn evaluate<S: Scalar>(
    model: &GipaModel<S>,
    g: &CsrGraph<S>,
    labels: &DenseMatrix<S>,
    ids: &[usize],
) -> Result<EvalReport> {
    let mut rng = SeededRng::new(0); // eval consumes no randomness
    let (logits, _) = model.forward(g, false, &mut rng)?;
    eval_report(&logits, labels, ids)
}

pub fn train<S: Scalar>(
    g: &CsrGraph<S>,
    labels: &DenseMatrix<S>,
    splits: &Splits,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<S>> {
    cfg.validate()?;
    if labels.rows() != g.num_nodes() {
        return Err(Error::shape(
            "train",
            format!("{} label rows", g.num_nodes()),
            format!("{}", labels.rows()),
        ));
    }
    for (name, ids) in [
        ("train", &splits.train),
        ("valid", &splits.valid),
        ("test", &splits.test),
    ] {
        if ids.is_empty() {
            return Err(Error::InvalidConfig(format!("{name} split is empty")));
        }
        if ids.iter().any(|&i| i >= g.num_nodes()) {
            return Err(Error::InvalidConfig(format!("{name} split id out of range")));
        }
    }

    let mcfg = cfg.model_config(
        g.node_features().cols(),
        g.edge_features().cols(),
        labels.cols(),
    );
    let mut rng = SeededRng::new(cfg.seed);
    let mut model = GipaModel::new(&mcfg, &mut rng)?;
    let optimizer = AdamW::new(cfg.learning_rate, cfg.weight_decay);

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, f64, Vec<(String, DenseMatrix<S>)>)> = None;

    for epoch in 1..=cfg.epochs {
        let keep = edge_drop(g, cfg.edge_drop, &mut rng);
        let masked_graph;
        let epoch_graph = if keep.iter().all(|&k| k) {
            g
        } else {
            masked_graph = g.masked(&keep);
            &masked_graph
        };

        let (logits, trace) = model.forward(epoch_graph, true, &mut rng)?;
        let (loss, grad) = bce_with_logits(&logits, labels, &splits.train)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, loss });
        }
        model.backward(epoch_graph, &trace, &grad)?;

        let mut step_err = None;
        model.visit_parameters_mut(&mut |name, p| {
            if step_err.is_none() {
                if let Err(e) = optimizer.step(&name, p) {
                    step_err = Some(e);
                }
            }
        });
        if let Some(e) = step_err {
            return Err(e);
        }

        let mut record = EpochRecord {
            epoch,
            train_loss: loss,
            valid_auc: None,
            test_auc: None,
        };
        if epoch % cfg.eval_every == 0 || epoch == cfg.epochs {
            let valid = evaluate(&model, g, labels, &splits.valid)?;
            let test = evaluate(&model, g, labels, &splits.test)?;
            record.valid_auc = Some(valid.mean_auc);
            record.test_auc = Some(test.mean_auc);
            let improved = best
                .as_ref()
                .is_none_or(|(best_auc, ..)| valid.mean_auc > *best_auc);
            if improved {
                best = Some((valid.mean_auc, epoch, test.mean_auc, model.state()));
            }
        }
        history.push(record);
    }

    let (best_valid_auc, best_epoch, best_test_auc, best_state) =
        best.expect("final epoch always evaluates");
    Ok(TrainOutcome {
        history,
        best_epoch,
        best_valid_auc,
        best_test_auc,
        best_state,
        model,
    })
}

/// Metrics history as CSV: `epoch,train_loss,valid_auc,test_auc`, AUC fields
/// empty on epochs without evaluation.
pub fn history_to_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_loss,valid_auc,test_auc\n");
    for r in history {
        let _ = write!(out, "{},{:.6},", r.epoch, r.train_loss);
        if let Some(v) = r.valid_auc {
            let _ = write!(out, "{v:.6}");
        }
        out.push(',');
        if let Some(t) = r.test_auc {
            let _ = write!(out, "{t:.6}");
        }
        out.push('\n');
    }
    out
}
