//! Equivalence of the sparse layer against a naive dense reference
//! implementation with explicit n×n loops.

mod common;

use common::{dense_layer_forward, dense_model_forward, max_abs_deviation, random_simple_graph};
use gipa::layer::layer_forward;
use gipa::{GipaLayerParams, GipaModel, LayerConfig, ModelConfig, SeededRng};

fn layer_config(d_node: usize, d_edge: usize, d_h: usize, d_e: usize, heads: usize) -> LayerConfig {
    LayerConfig {
        input_dim: d_node,
        edge_dim: d_edge,
        node_emb: d_h,
        edge_emb: d_e,
        output_dim: d_h,
        heads,
        att_layers: 2,
        prop_layers: 2,
        agg_layers: 2,
        hidden_units: 7,
        dropout_node: 0.0,
        dropout_attention: 0.0,
        dropout_propagation: 0.0,
        dropout_aggregation: 0.0,
        ablate_prop_edges: false,
    }
}

/// Sparse layer_forward equals the dense reference on 20 random graphs of up
/// to 50 nodes, max absolute deviation <= 1e-10.
#[test]
fn sparse_layer_matches_dense_reference_on_20_random_graphs() {
    let mut rng = SeededRng::new(2024);
    for round in 0..20 {
        let n = 2 + rng.below(49);
        let target_edges = n + rng.below(2 * n);
        let heads = [1usize, 2, 4][rng.below(3)];
        let d_h = heads * (1 + rng.below(3));
        let d_node = 1 + rng.below(5);
        let d_edge = 1 + rng.below(4);
        let d_e = 1 + rng.below(3);

        let g = random_simple_graph(n, target_edges, d_node, d_edge, &mut rng);
        let cfg = layer_config(d_node, d_edge, d_h, d_e, heads);
        let params = GipaLayerParams::new(&cfg, &mut rng).unwrap();

        let (sparse, _) = layer_forward(&g, &params, false, &mut rng).unwrap();
        let dense = dense_layer_forward(&g, g.node_features(), &params);
        let dev = max_abs_deviation(&sparse, &dense);
        assert!(
            dev <= 1e-10,
            "round {round}: n={n} heads={heads} deviation {dev:e}"
        );
    }
}

/// A two-layer stack plus classifier matches the composition of two dense
/// reference layers and a dense classifier evaluation.
#[test]
fn two_layer_stack_matches_dense_composition() {
    let mut rng = SeededRng::new(7);
    let g = random_simple_graph(23, 40, 4, 3, &mut rng);
    let cfg = ModelConfig {
        node_feat_dim: 4,
        edge_feat_dim: 3,
        num_labels: 5,
        num_layers: 2,
        node_emb: 6,
        edge_emb: 3,
        heads: 3,
        att_layers: 2,
        prop_layers: 2,
        agg_layers: 2,
        hidden_units: 8,
        dropout_node: 0.0,
        dropout_attention: 0.0,
        dropout_propagation: 0.0,
        dropout_aggregation: 0.0,
        dropout_final_fc: 0.0,
        ablate_prop_edges: false,
    };
    let model = GipaModel::new(&cfg, &mut rng).unwrap();
    let (logits, _) = model.forward(&g, false, &mut rng).unwrap();
    let dense = dense_model_forward(&g, &model);
    let dev = max_abs_deviation(&logits, &dense);
    assert!(dev <= 1e-10, "deviation {dev:e}");
}

/// Reference-shape configuration (80/16 embeddings, 8 heads, 6 layers) with
/// 112 label columns produces [n × 112] logits.
#[test]
fn reference_shape_yields_112_wide_logits() {
    let mut rng = SeededRng::new(11);
    let g = random_simple_graph(15, 30, 8, 8, &mut rng);
    let cfg = gipa::TrainConfig::default().model_config(8, 8, 112);
    assert_eq!(cfg.num_layers, 6);
    let model = GipaModel::new(&cfg, &mut rng).unwrap();
    let (logits, _) = model.forward(&g, false, &mut rng).unwrap();
    assert_eq!(logits.shape(), (15, 112));
}
