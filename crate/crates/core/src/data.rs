//! Dataset ingestion and generation.
//!
//! On-disk layout is four CSV files with headers, UTF-8, decimal-point
//! floats:
//!
//! * `nodes.csv`: `node_id,f1..f_dn`, ids must cover 0..n-1 exactly
//! * `edges.csv`: `src,dst,e1..e_de`, one row per undirected edge
//! * `labels.csv`: `node_id,y1..yC` with y ∈ {0,1}, one row per node
//! * `splits.csv`: `node_id,split` with split ∈ {train,valid,test}
//!
//! The synthetic generator plants labels on *aggregated edge features*
//! (label c of node i is 1 iff Σ_{j∈N(i)} w_cᵀ e_ij > 0 for a hidden random
//! w_c), so models that propagate edge features have an advantage by
//! construction.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::{build_graph, CsrGraph};
use crate::rng::SeededRng;
use crate::scalar::Scalar;

/// Disjoint node-id sets, each kept sorted ascending (canonical form).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetMeta {
    pub num_nodes: usize,
    pub node_feat_dim: usize,
    pub edge_feat_dim: usize,
    pub num_labels: usize,
}

/// A loaded dataset: graph, binary label matrix [n × C], splits, metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle<S: Scalar = f64> {
    pub graph: CsrGraph<S>,
    pub labels: DenseMatrix<S>,
    pub splits: Splits,
    pub meta: DatasetMeta,
}

fn dataset_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Dataset {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

struct Csv {
    path: PathBuf,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_csv(path: &Path) -> Result<Csv> {
    let text = fs::read_to_string(path)
        .map_err(|e| dataset_err(path, format!("cannot read file: {e}")))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| dataset_err(path, "missing header row"))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if fields.len() != header.len() {
            return Err(dataset_err(
                path,
                format!(
                    "line {}: {} fields, header has {}",
                    lineno + 2,
                    fields.len(),
                    header.len()
                ),
            ));
        }
        rows.push(fields);
    }
    Ok(Csv {
        path: path.to_path_buf(),
        header,
        rows,
    })
}

impl Csv {
    fn parse_usize(&self, row: usize, col: usize) -> Result<usize> {
        self.rows[row][col].parse().map_err(|_| {
            dataset_err(
                &self.path,
                format!("line {}: `{}` is not an integer", row + 2, self.rows[row][col]),
            )
        })
    }

    fn parse_f64(&self, row: usize, col: usize) -> Result<f64> {
        let v: f64 = self.rows[row][col].parse().map_err(|_| {
            dataset_err(
                &self.path,
                format!("line {}: `{}` is not a number", row + 2, self.rows[row][col]),
            )
        })?;
        if !v.is_finite() {
            return Err(dataset_err(
                &self.path,
                format!("line {}: non-finite value", row + 2),
            ));
        }
        Ok(v)
    }
}

/// Reads a matrix keyed by a node-id column that must cover 0..n-1 exactly.
fn read_keyed_matrix<S: Scalar>(csv: &Csv, what: &str) -> Result<DenseMatrix<S>> {
    let n = csv.rows.len();
    let width = csv.header.len() - 1;
    if n == 0 {
        return Err(dataset_err(&csv.path, format!("empty {what} file")));
    }
    if width == 0 {
        return Err(dataset_err(&csv.path, format!("{what} file has no value columns")));
    }
    let mut out = DenseMatrix::zeros(n, width);
    let mut seen = vec![false; n];
    for r in 0..n {
        let id = csv.parse_usize(r, 0)?;
        if id >= n {
            return Err(dataset_err(
                &csv.path,
                format!("node id {id} out of range: ids must cover 0..{} with no gaps", n - 1),
            ));
        }
        if seen[id] {
            return Err(dataset_err(&csv.path, format!("duplicate node id {id}")));
        }
        seen[id] = true;
        for c in 0..width {
            out.set(id, c, S::from_f64(csv.parse_f64(r, c + 1)?));
        }
    }
    Ok(out)
}

/// Loads and validates the four-file CSV layout from `dir`.
pub fn load_dataset<S: Scalar>(dir: &Path) -> Result<DatasetBundle<S>> {
    let nodes = read_csv(&dir.join("nodes.csv"))?;
    let node_features: DenseMatrix<S> = read_keyed_matrix(&nodes, "nodes")?;
    let n = node_features.rows();

    let edges_csv = read_csv(&dir.join("edges.csv"))?;
    if edges_csv.header.len() < 3 {
        return Err(dataset_err(
            &edges_csv.path,
            "edges.csv needs src, dst and at least one feature column",
        ));
    }
    let d_edge = edges_csv.header.len() - 2;
    let mut edges = Vec::with_capacity(edges_csv.rows.len());
    for r in 0..edges_csv.rows.len() {
        let src = edges_csv.parse_usize(r, 0)?;
        let dst = edges_csv.parse_usize(r, 1)?;
        let mut feat = Vec::with_capacity(d_edge);
        for c in 0..d_edge {
            feat.push(S::from_f64(edges_csv.parse_f64(r, c + 2)?));
        }
        edges.push((src, dst, feat));
    }

    let labels_csv = read_csv(&dir.join("labels.csv"))?;
    let labels: DenseMatrix<S> = read_keyed_matrix(&labels_csv, "labels")?;
    if labels.rows() != n {
        return Err(dataset_err(
            &labels_csv.path,
            format!("{} label rows for {} nodes", labels.rows(), n),
        ));
    }
    for v in labels.data() {
        let f = v.as_f64();
        if f != 0.0 && f != 1.0 {
            return Err(dataset_err(
                &labels_csv.path,
                format!("label value {f} is not binary"),
            ));
        }
    }

    let splits_csv = read_csv(&dir.join("splits.csv"))?;
    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    let mut assigned = vec![false; n];
    for r in 0..splits_csv.rows.len() {
        let id = splits_csv.parse_usize(r, 0)?;
        if id >= n {
            return Err(dataset_err(
                &splits_csv.path,
                format!("split node id {id} out of range"),
            ));
        }
        if assigned[id] {
            return Err(dataset_err(
                &splits_csv.path,
                format!("node {id} assigned to more than one split"),
            ));
        }
        assigned[id] = true;
        match splits_csv.rows[r][1].as_str() {
            "train" => train.push(id),
            "valid" => valid.push(id),
            "test" => test.push(id),
            other => {
                return Err(dataset_err(
                    &splits_csv.path,
                    format!("unknown split token `{other}`"),
                ))
            }
        }
    }
    train.sort_unstable();
    valid.sort_unstable();
    test.sort_unstable();

    let graph = build_graph(&edges, node_features)?;
    let meta = DatasetMeta {
        num_nodes: n,
        node_feat_dim: graph.node_features().cols(),
        edge_feat_dim: d_edge,
        num_labels: labels.cols(),
    };
    Ok(DatasetBundle {
        graph,
        labels,
        splits: Splits { train, valid, test },
        meta,
    })
}

/// Seeded shuffle, then contiguous slicing into train/valid/test. Fractions
/// must sum to 1; resulting id sets are returned in canonical sorted form.
pub fn split_nodes(n: usize, fractions: (f64, f64, f64), seed: u64) -> Result<Splits> {
    let sum = fractions.0 + fractions.1 + fractions.2;
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "split fractions must sum to 1, got {sum}"
        )));
    }
    if fractions.0 < 0.0 || fractions.1 < 0.0 || fractions.2 < 0.0 {
        return Err(Error::InvalidConfig("negative split fraction".into()));
    }
    let mut ids: Vec<usize> = (0..n).collect();
    let mut rng = SeededRng::new(seed);
    rng.shuffle(&mut ids);
    let n_train = (n as f64 * fractions.0).round() as usize;
    let n_valid = (n as f64 * fractions.1).round() as usize;
    if n_train + n_valid > n {
        return Err(Error::InvalidConfig(
            "rounded split sizes exceed the node count".into(),
        ));
    }
    let mut train = ids[..n_train].to_vec();
    let mut valid = ids[n_train..n_train + n_valid].to_vec();
    let mut test = ids[n_train + n_valid..].to_vec();
    train.sort_unstable();
    valid.sort_unstable();
    test.sort_unstable();
    Ok(Splits { train, valid, test })
}

/// Knobs for [`generate_synthetic`].
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub num_nodes: usize,
    /// Undirected partners drawn per node.
    pub avg_degree: usize,
    pub node_feat_dim: usize,
    pub edge_feat_dim: usize,
    pub num_labels: usize,
    pub split_fractions: (f64, f64, f64),
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            num_nodes: 300,
            avg_degree: 8,
            node_feat_dim: 8,
            edge_feat_dim: 8,
            num_labels: 6,
            split_fractions: (0.6, 0.2, 0.2),
            seed: 0,
        }
    }
}

/// Generates a planted-signal dataset, writes the CSV layout to `dir`
/// (creating it), and returns the in-memory bundle. Byte-deterministic for a
/// fixed spec.
pub fn generate_synthetic(spec: &SyntheticSpec, dir: &Path) -> Result<DatasetBundle> {
    if spec.num_nodes < 4 {
        return Err(Error::InvalidConfig(format!(
            "need at least 4 nodes, got {}",
            spec.num_nodes
        )));
    }
    if spec.num_labels == 0 || spec.node_feat_dim == 0 || spec.edge_feat_dim == 0 || spec.avg_degree == 0
    {
        return Err(Error::InvalidConfig(
            "label count, feature dims and degree must be positive".into(),
        ));
    }
    let n = spec.num_nodes;
    let mut rng = SeededRng::new(spec.seed);

    let mut node_features = DenseMatrix::zeros(n, spec.node_feat_dim);
    for v in node_features.data_mut() {
        *v = rng.normal();
    }

    let mut edges = Vec::with_capacity(n * spec.avg_degree);
    for u in 0..n {
        for _ in 0..spec.avg_degree {
            let mut v = rng.below(n - 1);
            if v >= u {
                v += 1;
            }
            let feat: Vec<f64> = (0..spec.edge_feat_dim).map(|_| rng.normal()).collect();
            edges.push((u, v, feat));
        }
    }
    let graph = build_graph(&edges, node_features)?;

    // hidden per-class weights over edge features
    let mut planted = Vec::with_capacity(spec.num_labels);
    for _ in 0..spec.num_labels {
        let w: Vec<f64> = (0..spec.edge_feat_dim).map(|_| rng.normal()).collect();
        planted.push(w);
    }
    let mut labels = DenseMatrix::zeros(n, spec.num_labels);
    for i in 0..n {
        for (c, w) in planted.iter().enumerate() {
            let mut s = 0.0;
            for (_, eid) in graph.in_neighbors(i)? {
                let feat = graph.edge_features().row(eid);
                for (wk, &fk) in w.iter().zip(feat) {
                    s += wk * fk;
                }
            }
            labels.set(i, c, if s > 0.0 { 1.0 } else { 0.0 });
        }
    }

    let splits = split_nodes(n, spec.split_fractions, rng.next_u64())?;

    fs::create_dir_all(dir)?;
    write_dataset(dir, &graph, &edges, &labels, &splits)?;

    let meta = DatasetMeta {
        num_nodes: n,
        node_feat_dim: spec.node_feat_dim,
        edge_feat_dim: spec.edge_feat_dim,
        num_labels: spec.num_labels,
    };
    Ok(DatasetBundle {
        graph,
        labels,
        splits,
        meta,
    })
}

fn write_dataset(
    dir: &Path,
    graph: &CsrGraph,
    edges: &[(usize, usize, Vec<f64>)],
    labels: &DenseMatrix,
    splits: &Splits,
) -> Result<()> {
    let nf = graph.node_features();
    let mut out = String::from("node_id");
    for c in 0..nf.cols() {
        let _ = write!(out, ",f{}", c + 1);
    }
    out.push('\n');
    for i in 0..nf.rows() {
        let _ = write!(out, "{i}");
        for &v in nf.row(i) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    fs::write(dir.join("nodes.csv"), out)?;

    let d_edge = edges.first().map_or(0, |e| e.2.len());
    let mut out = String::from("src,dst");
    for c in 0..d_edge {
        let _ = write!(out, ",e{}", c + 1);
    }
    out.push('\n');
    for (u, v, feat) in edges {
        let _ = write!(out, "{u},{v}");
        for x in feat {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    fs::write(dir.join("edges.csv"), out)?;

    let mut out = String::from("node_id");
    for c in 0..labels.cols() {
        let _ = write!(out, ",y{}", c + 1);
    }
    out.push('\n');
    for i in 0..labels.rows() {
        let _ = write!(out, "{i}");
        for &v in labels.row(i) {
            let _ = write!(out, ",{}", v as i64);
        }
        out.push('\n');
    }
    fs::write(dir.join("labels.csv"), out)?;

    let mut rows: Vec<(usize, &str)> = splits
        .train
        .iter()
        .map(|&i| (i, "train"))
        .chain(splits.valid.iter().map(|&i| (i, "valid")))
        .chain(splits.test.iter().map(|&i| (i, "test")))
        .collect();
    rows.sort_unstable();
    let mut out = String::from("node_id,split\n");
    for (i, tok) in rows {
        let _ = writeln!(out, "{i},{tok}");
    }
    fs::write(dir.join("splits.csv"), out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("gipa-data-test-{name}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        dir
    }

    #[test]
    fn split_sizes_and_partition() {
        let s = split_nodes(10, (0.6, 0.2, 0.2), 1).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (6, 2, 2));
        let mut all: Vec<usize> = s
            .train
            .iter()
            .chain(&s.valid)
            .chain(&s.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        // same seed, same split
        assert_eq!(s, split_nodes(10, (0.6, 0.2, 0.2), 1).unwrap());
        // disjointness and coverage hold across sizes
        for n in [5usize, 17, 100, 301] {
            let s = split_nodes(n, (0.5, 0.25, 0.25), 9).unwrap();
            let mut all: Vec<usize> = s
                .train
                .iter()
                .chain(&s.valid)
                .chain(&s.test)
                .copied()
                .collect();
            all.sort_unstable();
            all.dedup();
            assert_eq!(all.len(), n);
        }
    }

    #[test]
    fn split_fraction_sum_enforced() {
        assert!(split_nodes(10, (0.5, 0.2, 0.2), 0).is_err());
    }

    #[test]
    fn generator_round_trips_through_loader() {
        let dir = tmp("roundtrip");
        let spec = SyntheticSpec {
            num_nodes: 40,
            avg_degree: 3,
            node_feat_dim: 4,
            edge_feat_dim: 3,
            num_labels: 5,
            split_fractions: (0.6, 0.2, 0.2),
            seed: 11,
        };
        let bundle = generate_synthetic(&spec, &dir).unwrap();
        let loaded: DatasetBundle = load_dataset(&dir).unwrap();
        assert_eq!(loaded, bundle);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn generator_is_byte_deterministic() {
        let d1 = tmp("det1");
        let d2 = tmp("det2");
        let spec = SyntheticSpec {
            num_nodes: 25,
            avg_degree: 2,
            node_feat_dim: 3,
            edge_feat_dim: 2,
            num_labels: 2,
            split_fractions: (0.6, 0.2, 0.2),
            seed: 5,
        };
        generate_synthetic(&spec, &d1).unwrap();
        generate_synthetic(&spec, &d2).unwrap();
        for f in ["nodes.csv", "edges.csv", "labels.csv", "splits.csv"] {
            assert_eq!(
                fs::read(d1.join(f)).unwrap(),
                fs::read(d2.join(f)).unwrap(),
                "{f} differs"
            );
        }
        fs::remove_dir_all(&d1).unwrap();
        fs::remove_dir_all(&d2).unwrap();
    }

    #[test]
    fn label_prevalence_is_balanced_at_n_300() {
        let dir = tmp("prevalence");
        let spec = SyntheticSpec {
            num_nodes: 300,
            ..Default::default()
        };
        let bundle = generate_synthetic(&spec, &dir).unwrap();
        for c in 0..bundle.meta.num_labels {
            let ones: f64 = (0..300).map(|i| bundle.labels.get(i, c)).sum();
            let prevalence = ones / 300.0;
            assert!(
                (0.2..0.8).contains(&prevalence),
                "class {c} prevalence {prevalence}"
            );
        }
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn degenerate_sizes_rejected() {
        let dir = tmp("degenerate");
        let spec = SyntheticSpec {
            num_nodes: 2,
            ..Default::default()
        };
        assert!(generate_synthetic(&spec, &dir).is_err());
    }

    #[test]
    fn toy_directory_loads() {
        let dir = tmp("toy");
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join("nodes.csv"), "node_id,f1\n0,1.5\n1,-0.5\n").unwrap();
        fs::write(dir.join("edges.csv"), "src,dst,e1\n0,1,0.25\n").unwrap();
        fs::write(dir.join("labels.csv"), "node_id,y1\n0,1\n1,0\n").unwrap();
        fs::write(dir.join("splits.csv"), "node_id,split\n0,train\n1,test\n").unwrap();
        let b: DatasetBundle = load_dataset(&dir).unwrap();
        assert_eq!(b.graph.num_edges(), 2);
        assert_eq!(b.splits.train, vec![0]);
        assert_eq!(b.splits.test, vec![1]);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn loader_rejects_bad_inputs() {
        let dir = tmp("bad");
        fs::create_dir_all(&dir).unwrap();
        let write_all = |labels: &str, splits: &str, nodes: &str| {
            fs::write(dir.join("nodes.csv"), nodes).unwrap();
            fs::write(dir.join("edges.csv"), "src,dst,e1\n0,1,0.25\n").unwrap();
            fs::write(dir.join("labels.csv"), labels).unwrap();
            fs::write(dir.join("splits.csv"), splits).unwrap();
        };
        let good_nodes = "node_id,f1\n0,1.0\n1,2.0\n";
        let good_labels = "node_id,y1\n0,1\n1,0\n";
        let good_splits = "node_id,split\n0,train\n1,test\n";

        // empty labels file
        write_all("node_id,y1\n", good_splits, good_nodes);
        assert!(load_dataset::<f64>(&dir).is_err());
        // unknown split token
        write_all(good_labels, "node_id,split\n0,dev\n", good_nodes);
        assert!(load_dataset::<f64>(&dir).is_err());
        // node id gap
        write_all(good_labels, good_splits, "node_id,f1\n0,1.0\n2,2.0\n");
        assert!(load_dataset::<f64>(&dir).is_err());
        // ragged row
        write_all(good_labels, good_splits, "node_id,f1\n0,1.0\n1\n");
        assert!(load_dataset::<f64>(&dir).is_err());
        // non-binary label
        write_all("node_id,y1\n0,2\n1,0\n", good_splits, good_nodes);
        assert!(load_dataset::<f64>(&dir).is_err());
        // missing file
        fs::remove_file(dir.join("edges.csv")).unwrap();
        assert!(load_dataset::<f64>(&dir).is_err());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn symmetrized_directions_share_feature_rows() {
        let dir = tmp("sym");
        let spec = SyntheticSpec {
            num_nodes: 12,
            avg_degree: 2,
            node_feat_dim: 2,
            edge_feat_dim: 2,
            num_labels: 2,
            split_fractions: (0.6, 0.2, 0.2),
            seed: 3,
        };
        let b = generate_synthetic(&spec, &dir).unwrap();
        for i in 0..12 {
            for (j, e) in b.graph.in_neighbors(i).unwrap() {
                let reverse: Vec<_> = b.graph.in_neighbors(j).unwrap().collect();
                assert!(reverse.contains(&(i, e)));
            }
        }
        fs::remove_dir_all(&dir).unwrap();
    }
}
