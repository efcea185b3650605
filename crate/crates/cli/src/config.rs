//! Flat `key = value` config files: one key per line, `#` comments, no
//! sections. Every hyperparameter has a default; unknown keys are rejected.

use std::path::{Path, PathBuf};

use gipa::TrainConfig;

/// Parsed config: training hyperparameters plus the two paths.
#[derive(Debug, Clone)]
pub struct CliConfig {
    pub train: TrainConfig,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            train: TrainConfig::default(),
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
        }
    }
}

pub fn parse_config_file(path: &Path) -> Result<CliConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_config(text: &str) -> Result<CliConfig, String> {
    let mut cfg = CliConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        set_key(&mut cfg, key, value).map_err(|e| format!("line {}: {e}", lineno + 1))?;
    }
    cfg.train
        .validate()
        .map_err(|e| format!("invalid configuration: {e}"))?;
    Ok(cfg)
}

fn set_key(cfg: &mut CliConfig, key: &str, value: &str) -> Result<(), String> {
    fn usize_of(key: &str, v: &str) -> Result<usize, String> {
        v.parse().map_err(|_| format!("`{v}` is not a valid integer for {key}"))
    }
    fn u64_of(key: &str, v: &str) -> Result<u64, String> {
        v.parse().map_err(|_| format!("`{v}` is not a valid integer for {key}"))
    }
    fn f64_of(key: &str, v: &str) -> Result<f64, String> {
        v.parse().map_err(|_| format!("`{v}` is not a valid number for {key}"))
    }
    fn bool_of(key: &str, v: &str) -> Result<bool, String> {
        match v {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(format!("`{v}` is not a valid bool for {key} (true/false)")),
        }
    }
    let t = &mut cfg.train;
    match key {
        "node_emb" => t.node_emb = usize_of(key, value)?,
        "edge_emb" => t.edge_emb = usize_of(key, value)?,
        "att_layers" => t.att_layers = usize_of(key, value)?,
        "heads" => t.heads = usize_of(key, value)?,
        "prop_layers" => t.prop_layers = usize_of(key, value)?,
        "agg_layers" => t.agg_layers = usize_of(key, value)?,
        "hidden_units" => t.hidden_units = usize_of(key, value)?,
        "num_gipa_layers" => t.num_gipa_layers = usize_of(key, value)?,
        "edge_drop" => t.edge_drop = f64_of(key, value)?,
        "dropout_node" => t.dropout_node = f64_of(key, value)?,
        "dropout_attention" => t.dropout_attention = f64_of(key, value)?,
        "dropout_propagation" => t.dropout_propagation = f64_of(key, value)?,
        "dropout_aggregation" => t.dropout_aggregation = f64_of(key, value)?,
        "dropout_final_fc" => t.dropout_final_fc = f64_of(key, value)?,
        "learning_rate" => t.learning_rate = f64_of(key, value)?,
        "weight_decay" => t.weight_decay = f64_of(key, value)?,
        "epochs" => t.epochs = usize_of(key, value)?,
        "eval_every" => t.eval_every = usize_of(key, value)?,
        "seed" => t.seed = u64_of(key, value)?,
        "ablate_prop_edges" => t.ablate_prop_edges = bool_of(key, value)?,
        "data_dir" => cfg.data_dir = PathBuf::from(value),
        "out_dir" => cfg.out_dir = PathBuf::from(value),
        other => return Err(format!("unknown key `{other}`")),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_hyperparameters() {
        let cfg = parse_config("").unwrap();
        let t = &cfg.train;
        assert_eq!(t.node_emb, 80);
        assert_eq!(t.edge_emb, 16);
        assert_eq!(t.att_layers, 2);
        assert_eq!(t.heads, 8);
        assert_eq!(t.prop_layers, 2);
        assert_eq!(t.hidden_units, 80);
        assert_eq!(t.num_gipa_layers, 6);
        assert_eq!(t.edge_drop, 0.1);
        assert_eq!(t.dropout_node, 0.1);
        assert_eq!(t.dropout_attention, 0.1);
        assert_eq!(t.dropout_propagation, 0.25);
        assert_eq!(t.dropout_aggregation, 0.25);
        assert_eq!(t.dropout_final_fc, 0.5);
        assert_eq!(t.learning_rate, 0.01);
        assert_eq!(t.weight_decay, 0.0);
    }

    #[test]
    fn parses_overrides_and_comments() {
        let cfg = parse_config(
            "# a comment\nlearning_rate = 0.005\nepochs = 7 # trailing\n\ndata_dir = /tmp/x\n",
        )
        .unwrap();
        assert_eq!(cfg.train.learning_rate, 0.005);
        assert_eq!(cfg.train.epochs, 7);
        assert_eq!(cfg.data_dir, PathBuf::from("/tmp/x"));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(parse_config("learning_rte = 0.1\n").is_err());
    }

    #[test]
    fn bad_value_rejected() {
        assert!(parse_config("epochs = many\n").is_err());
        assert!(parse_config("edge_drop = 1.5\n").is_err());
        assert!(parse_config("heads = 3\n").is_err()); // 80 % 3 != 0
    }
}
