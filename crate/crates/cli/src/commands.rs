use std::path::Path;
use std::process::ExitCode;

use gipa::data::{generate_synthetic, load_dataset, DatasetBundle, SyntheticSpec};
use gipa::gradcheck::{check_model_gradients, random_labels, random_probe_graph, GradCheckOptions};
use gipa::trainer::{evaluate, history_to_csv, train};
use gipa::{checkpoint, GipaModel, SeededRng};

use crate::config::CliConfig;

pub const EXIT_VERIFICATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

/// Maps library errors onto the CLI exit-code contract: numeric failures
/// (non-finite loss/grad) are 3, everything else is a usage/config error.
pub fn exit_code_for(err: &gipa::Error) -> u8 {
    match err {
        gipa::Error::NonFiniteLoss { .. } | gipa::Error::NonFiniteGrad { .. } => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

pub fn cmd_train(cfg: &CliConfig, seed_override: Option<u64>) -> gipa::Result<ExitCode> {
    let mut train_cfg = cfg.train.clone();
    if let Some(seed) = seed_override {
        train_cfg.seed = seed;
    }
    let bundle: DatasetBundle = load_dataset(&cfg.data_dir)?;
    println!(
        "dataset: {} nodes, {} undirected edges, {} labels (d_node={}, d_edge={})",
        bundle.meta.num_nodes,
        bundle.graph.num_undirected_edges(),
        bundle.meta.num_labels,
        bundle.meta.node_feat_dim,
        bundle.meta.edge_feat_dim
    );
    let outcome = train(&bundle.graph, &bundle.labels, &bundle.splits, &train_cfg)?;

    std::fs::create_dir_all(&cfg.out_dir)?;
    let ckpt_path = cfg.out_dir.join("model.ckpt");
    let metrics_path = cfg.out_dir.join("metrics.csv");
    checkpoint::save_file(&ckpt_path, &outcome.best_state)?;
    std::fs::write(&metrics_path, history_to_csv(&outcome.history))?;

    println!(
        "best epoch {}: valid_auc {:.6} test_auc {:.6}",
        outcome.best_epoch, outcome.best_valid_auc, outcome.best_test_auc
    );
    println!("checkpoint: {}", ckpt_path.display());
    println!("metrics: {}", metrics_path.display());
    Ok(ExitCode::SUCCESS)
}

pub fn cmd_eval(cfg: &CliConfig, checkpoint_path: &Path) -> gipa::Result<ExitCode> {
    let bundle: DatasetBundle = load_dataset(&cfg.data_dir)?;
    let mcfg = cfg.train.model_config(
        bundle.meta.node_feat_dim,
        bundle.meta.edge_feat_dim,
        bundle.meta.num_labels,
    );
    let mut rng = SeededRng::new(cfg.train.seed);
    let mut model = GipaModel::new(&mcfg, &mut rng)?;
    model.load_state(checkpoint::load_file(checkpoint_path)?)?;

    for (name, ids) in [("valid", &bundle.splits.valid), ("test", &bundle.splits.test)] {
        if ids.is_empty() {
            println!("{name}: empty split");
            continue;
        }
        let report = evaluate(&model, &bundle.graph, &bundle.labels, ids)?;
        println!(
            "{name}: mean_auc {:.6} loss {:.6} ({} of {} labels single-class, excluded)",
            report.mean_auc,
            report.loss,
            report.degenerate_labels(),
            report.per_label_auc.len()
        );
    }
    Ok(ExitCode::SUCCESS)
}

/// Probe feature widths for the gradient check; the model shape still comes
/// from the config file.
const PROBE_NODE_DIM: usize = 6;
const PROBE_EDGE_DIM: usize = 4;
const PROBE_LABELS: usize = 3;

pub fn cmd_gradcheck(
    cfg: &CliConfig,
    nodes: usize,
    degree: usize,
    tolerance: f64,
    samples: usize,
) -> gipa::Result<ExitCode> {
    if nodes == 0 || nodes > 50 {
        return Err(gipa::Error::InvalidConfig(format!(
            "gradcheck needs 1 <= nodes <= 50, got {nodes}"
        )));
    }
    if degree == 0 || tolerance <= 0.0 {
        return Err(gipa::Error::InvalidConfig(
            "degree must be >= 1 and tolerance positive".into(),
        ));
    }
    let seed = cfg.train.seed;
    let g = random_probe_graph::<f64>(nodes, degree, PROBE_NODE_DIM, PROBE_EDGE_DIM, seed)?;
    let mcfg = cfg
        .train
        .model_config(PROBE_NODE_DIM, PROBE_EDGE_DIM, PROBE_LABELS);
    let mut rng = SeededRng::new(seed.wrapping_add(1));
    let mut model = GipaModel::new(&mcfg, &mut rng)?;
    let labels = random_labels(nodes, PROBE_LABELS, seed.wrapping_add(2));

    let opts = GradCheckOptions {
        step: 1e-5,
        rel_tol: tolerance,
        abs_tol: 1e-7,
        max_entries_per_tensor: samples,
        sample_seed: seed,
    };
    let report = check_model_gradients(&g, &mut model, &labels, &opts)?;

    println!(
        "{:<28} {:>8} {:>14} {:>14}  result",
        "tensor", "entries", "worst_rel", "worst_abs"
    );
    for t in &report.tensors {
        println!(
            "{:<28} {:>8} {:>14.3e} {:>14.3e}  {}",
            t.name,
            t.entries_checked,
            t.worst_rel_err,
            t.worst_abs_err,
            if t.pass { "pass" } else { "FAIL" }
        );
    }
    if report.all_pass() {
        println!("gradcheck: all {} tensors pass at {tolerance:.0e}", report.tensors.len());
        Ok(ExitCode::SUCCESS)
    } else {
        let worst = report.worst().expect("nonempty report");
        println!(
            "gradcheck: FAILED, worst tensor {} with relative error {:.3e}",
            worst.name, worst.worst_rel_err
        );
        Ok(ExitCode::from(EXIT_VERIFICATION))
    }
}

pub fn cmd_gen(
    out: &Path,
    n: usize,
    degree: usize,
    seed: u64,
    d_node: usize,
    d_edge: usize,
    classes: usize,
) -> gipa::Result<ExitCode> {
    let spec = SyntheticSpec {
        num_nodes: n,
        avg_degree: degree,
        node_feat_dim: d_node,
        edge_feat_dim: d_edge,
        num_labels: classes,
        split_fractions: (0.6, 0.2, 0.2),
        seed,
    };
    let bundle = generate_synthetic(&spec, out)?;
    println!(
        "wrote {} nodes, {} undirected edges, {} labels to {}",
        bundle.meta.num_nodes,
        bundle.graph.num_undirected_edges(),
        bundle.meta.num_labels,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}
