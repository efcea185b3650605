//! Shared test support: a deliberately naive dense reference implementation
//! of the layer equations (explicit n×n loops over `Vec<f64>` rows, no
//! shared kernels with the sparse path) and random simple-graph builders.

#![allow(dead_code)]

use gipa::{build_graph, CsrGraph, DenseMatrix, GipaLayerParams, Mlp, SeededRng};

/// Plain mat-vec on a parameter matrix: row · W.
fn project_row(row: &[f64], w: &DenseMatrix) -> Vec<f64> {
    let mut out = vec![0.0; w.cols()];
    for (i, &x) in row.iter().enumerate() {
        for (o, &wv) in out.iter_mut().zip(w.row(i)) {
            *o += x * wv;
        }
    }
    out
}

/// Eval-mode MLP on one row: linear (+bias), ReLU between layers, identity
/// output. Re-implemented with bare loops so the oracle does not share the
/// library's forward path.
fn mlp_eval(mlp: &Mlp, x: &[f64]) -> Vec<f64> {
    let mut cur = x.to_vec();
    let layers = mlp.weights.len();
    for l in 0..layers {
        let w = &mlp.weights[l].value;
        let mut z = vec![0.0; w.cols()];
        for (i, &xi) in cur.iter().enumerate() {
            for (zo, &wv) in z.iter_mut().zip(w.row(i)) {
                *zo += xi * wv;
            }
        }
        if let Some(b) = &mlp.biases[l] {
            for (zo, &bv) in z.iter_mut().zip(b.value.row(0)) {
                *zo += bv;
            }
        }
        if l + 1 < layers {
            for zo in &mut z {
                if *zo < 0.0 {
                    *zo = 0.0;
                }
            }
        }
        cur = z;
    }
    cur
}

fn concat(parts: &[&[f64]]) -> Vec<f64> {
    let mut out = Vec::new();
    for p in parts {
        out.extend_from_slice(p);
    }
    out
}

/// Dense reference of one layer in eval mode, with an explicit node-input
/// matrix. Requires a simple graph (at most one edge per node pair).
pub fn dense_layer_forward(
    g: &CsrGraph,
    node_input: &DenseMatrix,
    params: &GipaLayerParams,
) -> Vec<Vec<f64>> {
    let n = g.num_nodes();
    let d_h = params.node_emb();
    let heads = params.heads;
    let block = d_h / heads;

    // dense n×n adjacency table of edge ids
    let mut adj: Vec<Vec<Option<usize>>> = vec![vec![None; n]; n];
    for (i, row) in adj.iter_mut().enumerate() {
        for (j, e) in g.in_neighbors(i).unwrap() {
            assert!(row[j].is_none(), "oracle requires a simple graph");
            row[j] = Some(e);
        }
    }

    let h_tilde: Vec<Vec<f64>> = (0..n)
        .map(|i| project_row(node_input.row(i), &params.node_proj.value))
        .collect();
    let e_tilde: Vec<Vec<f64>> = (0..g.num_undirected_edges())
        .map(|e| project_row(g.edge_features().row(e), &params.edge_proj.value))
        .collect();

    let mut output = Vec::with_capacity(n);
    for i in 0..n {
        // raw scores per neighbor, naive softmax (no max shift)
        let mut scores: Vec<(usize, usize, Vec<f64>)> = Vec::new();
        for j in 0..n {
            if let Some(e) = adj[i][j] {
                let x = concat(&[&h_tilde[i], &h_tilde[j], &e_tilde[e]]);
                scores.push((j, e, mlp_eval(&params.att_mlp, &x)));
            }
        }
        let mut msum = vec![0.0; d_h];
        if !scores.is_empty() {
            for h in 0..heads {
                let total: f64 = scores.iter().map(|(_, _, s)| s[h].exp()).sum();
                for (j, e, s) in &scores {
                    let a = s[h].exp() / total;
                    let mut prop_in = concat(&[&h_tilde[*j], &e_tilde[*e]]);
                    if params.ablate_prop_edges {
                        for v in &mut prop_in[d_h..] {
                            *v = 0.0;
                        }
                    }
                    let p = mlp_eval(&params.prop_mlp, &prop_in);
                    for c in h * block..(h + 1) * block {
                        msum[c] += a * p[c];
                    }
                }
            }
        }
        let h_hat = project_row(&h_tilde[i], &params.res_proj.value);
        output.push(mlp_eval(&params.agg_mlp, &concat(&[&msum, &h_hat])));
    }
    output
}

/// Dense reference for a whole model: chained dense layers, then the
/// classifier MLP (eval mode, so no dropout anywhere).
pub fn dense_model_forward(g: &CsrGraph, model: &gipa::GipaModel) -> Vec<Vec<f64>> {
    let mut cur: Vec<Vec<f64>> = (0..g.num_nodes())
        .map(|i| g.node_features().row(i).to_vec())
        .collect();
    for layer in &model.layers {
        let x = DenseMatrix::from_rows(&cur).unwrap();
        cur = dense_layer_forward(g, &x, layer);
    }
    cur.iter().map(|row| mlp_eval(&model.classifier, row)).collect()
}

/// Random simple graph: distinct unordered pairs only, so the dense oracle's
/// adjacency table is well defined. Isolated nodes are possible and wanted.
pub fn random_simple_graph(
    n: usize,
    target_edges: usize,
    d_node: usize,
    d_edge: usize,
    rng: &mut SeededRng,
) -> CsrGraph {
    let mut pairs = std::collections::BTreeSet::new();
    let mut attempts = 0;
    while pairs.len() < target_edges && attempts < target_edges * 10 {
        let u = rng.below(n);
        let v = rng.below(n);
        if u != v {
            pairs.insert((u.min(v), u.max(v)));
        }
        attempts += 1;
    }
    let edges: Vec<(usize, usize, Vec<f64>)> = pairs
        .into_iter()
        .map(|(u, v)| {
            let feat: Vec<f64> = (0..d_edge).map(|_| rng.normal()).collect();
            (u, v, feat)
        })
        .collect();
    let mut nf = DenseMatrix::zeros(n, d_node);
    for x in nf.data_mut() {
        *x = rng.normal();
    }
    build_graph(&edges, nf).unwrap()
}

pub fn max_abs_deviation(sparse: &DenseMatrix, dense: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    assert_eq!(sparse.rows(), dense.len());
    for (i, row) in dense.iter().enumerate() {
        assert_eq!(sparse.cols(), row.len());
        for (c, &v) in row.iter().enumerate() {
            worst = worst.max((sparse.get(i, c) - v).abs());
        }
    }
    worst
}
