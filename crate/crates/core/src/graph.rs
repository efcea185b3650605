use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Immutable directed sparse graph in compressed-row form, with per-node and
/// per-edge feature rows.
///
/// Row `i` holds the *incoming* edges of node `i`: for each CSR position `k`
/// in `row_offsets[i]..row_offsets[i+1]`, `col_indices[k]` is the source
/// node and `edge_ids[k]` the row of `edge_features` shared by both
/// directions of the undirected input edge.
///
/// Construction canonicalizes the input: undirected edges are sorted by
/// (endpoint pair, feature row), so any permutation of the same edge list
/// builds a bit-identical graph. Within each node's segment, entries are
/// sorted by (neighbor id, edge id).
#[derive(Debug, Clone, PartialEq)]
pub struct CsrGraph<S: Scalar = f64> {
    num_nodes: usize,
    num_edges: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    edge_ids: Vec<usize>,
    node_features: DenseMatrix<S>,
    edge_features: DenseMatrix<S>,
}

impl<S: Scalar> CsrGraph<S> {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Directed edge count (after symmetrization).
    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    /// Undirected edge count = rows of `edge_features`.
    pub fn num_undirected_edges(&self) -> usize {
        self.edge_features.rows()
    }

    pub fn node_features(&self) -> &DenseMatrix<S> {
        &self.node_features
    }

    pub fn edge_features(&self) -> &DenseMatrix<S> {
        &self.edge_features
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn edge_ids(&self) -> &[usize] {
        &self.edge_ids
    }

    /// In-neighbors of node `i` as (source node, edge id) pairs, in canonical
    /// segment order. Empty for isolated nodes.
    pub fn in_neighbors(&self, i: usize) -> Result<impl Iterator<Item = (usize, usize)> + '_> {
        if i >= self.num_nodes {
            return Err(Error::GraphConstruction(format!(
                "node {i} out of range (num_nodes = {})",
                self.num_nodes
            )));
        }
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        Ok(self.col_indices[lo..hi]
            .iter()
            .copied()
            .zip(self.edge_ids[lo..hi].iter().copied()))
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.row_offsets[i + 1] - self.row_offsets[i]
    }

    /// CSR segment bounds of node `i`'s incoming edges.
    pub fn segment(&self, i: usize) -> std::ops::Range<usize> {
        self.row_offsets[i]..self.row_offsets[i + 1]
    }

    /// Restriction of the graph to undirected edges with `keep[edge_id]`.
    ///
    /// Both directions of a dropped edge vanish together; feature matrices
    /// keep their row indexing so `edge_ids` stay valid.
    pub fn masked(&self, keep: &[bool]) -> CsrGraph<S> {
        assert_eq!(keep.len(), self.num_undirected_edges(), "mask length");
        let mut row_offsets = Vec::with_capacity(self.num_nodes + 1);
        let mut col_indices = Vec::new();
        let mut edge_ids = Vec::new();
        row_offsets.push(0);
        for i in 0..self.num_nodes {
            for k in self.segment(i) {
                if keep[self.edge_ids[k]] {
                    col_indices.push(self.col_indices[k]);
                    edge_ids.push(self.edge_ids[k]);
                }
            }
            row_offsets.push(col_indices.len());
        }
        CsrGraph {
            num_nodes: self.num_nodes,
            num_edges: col_indices.len(),
            row_offsets,
            col_indices,
            edge_ids,
            node_features: self.node_features.clone(),
            edge_features: self.edge_features.clone(),
        }
    }

    pub(crate) fn node_features_mut(&mut self) -> &mut DenseMatrix<S> {
        &mut self.node_features
    }

    pub(crate) fn edge_features_mut(&mut self) -> &mut DenseMatrix<S> {
        &mut self.edge_features
    }
}

/// Builds a [`CsrGraph`] from an undirected edge list.
///
/// Each input edge (u, v, features) produces directed entries u→v and v→u
/// sharing one feature row; self-loops are stored once. Duplicate edges are
/// kept as distinct entries.
pub fn build_graph<S: Scalar>(
    edges: &[(usize, usize, Vec<S>)],
    node_features: DenseMatrix<S>,
) -> Result<CsrGraph<S>> {
    let n = node_features.rows();
    let d_edge = edges.first().map_or(0, |e| e.2.len());
    for (idx, (u, v, feat)) in edges.iter().enumerate() {
        if *u >= n || *v >= n {
            return Err(Error::GraphConstruction(format!(
                "edge {idx} ({u}, {v}) out of range for {n} nodes"
            )));
        }
        if feat.len() != d_edge {
            return Err(Error::GraphConstruction(format!(
                "ragged edge feature rows: edge {idx} has {} values, expected {d_edge}",
                feat.len()
            )));
        }
    }

    // Canonical undirected order: (low endpoint, high endpoint, feature row).
    let mut order: Vec<usize> = (0..edges.len()).collect();
    let key = |idx: usize| -> (usize, usize) {
        let (u, v, _) = &edges[idx];
        (*u.min(v), *u.max(v))
    };
    order.sort_by(|&a, &b| {
        key(a).cmp(&key(b)).then_with(|| {
            let fa = &edges[a].2;
            let fb = &edges[b].2;
            for (x, y) in fa.iter().zip(fb.iter()) {
                match x.as_f64().total_cmp(&y.as_f64()) {
                    std::cmp::Ordering::Equal => continue,
                    other => return other,
                }
            }
            std::cmp::Ordering::Equal
        })
    });

    let mut edge_features = DenseMatrix::zeros(edges.len(), d_edge);
    let mut segments: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (eid, &input_idx) in order.iter().enumerate() {
        let (u, v, feat) = &edges[input_idx];
        edge_features.row_mut(eid).copy_from_slice(feat);
        segments[*v].push((*u, eid));
        if u != v {
            segments[*u].push((*v, eid));
        }
    }

    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::new();
    let mut edge_ids = Vec::new();
    row_offsets.push(0);
    for seg in &mut segments {
        seg.sort_unstable();
        for &(src, eid) in seg.iter() {
            col_indices.push(src);
            edge_ids.push(eid);
        }
        row_offsets.push(col_indices.len());
    }

    Ok(CsrGraph {
        num_nodes: n,
        num_edges: col_indices.len(),
        row_offsets,
        col_indices,
        edge_ids,
        node_features,
        edge_features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nodes(n: usize) -> DenseMatrix {
        DenseMatrix::zeros(n, 1)
    }

    fn neighbors(g: &CsrGraph, i: usize) -> Vec<(usize, usize)> {
        g.in_neighbors(i).unwrap().collect()
    }

    #[test]
    fn single_edge_symmetrizes() {
        let g = build_graph(&[(0, 1, vec![1.0])], nodes(2)).unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.num_undirected_edges(), 1);
        assert_eq!(neighbors(&g, 0), vec![(1, 0)]);
        assert_eq!(neighbors(&g, 1), vec![(0, 0)]);
    }

    #[test]
    fn empty_graph() {
        let g = build_graph::<f64>(&[], nodes(3)).unwrap();
        assert_eq!(g.row_offsets(), &[0, 0, 0, 0]);
        assert_eq!(g.num_edges(), 0);
        assert_eq!(neighbors(&g, 1), vec![]);
    }

    #[test]
    fn path_graph_degrees() {
        // 0-1-2-3-4 path: degrees [1,2,2,2,1] counted by hand
        let edges: Vec<_> = (0..4).map(|i| (i, i + 1, vec![0.5])).collect();
        let g = build_graph(&edges, nodes(5)).unwrap();
        let degrees: Vec<usize> = (0..5).map(|i| g.in_degree(i)).collect();
        assert_eq!(degrees, vec![1, 2, 2, 2, 1]);
    }

    #[test]
    fn path_adjacency_with_edge_ids() {
        let g = build_graph(&[(0, 1, vec![1.0]), (1, 2, vec![2.0])], nodes(3)).unwrap();
        let e01 = neighbors(&g, 0)[0].1;
        let e12 = neighbors(&g, 2)[0].1;
        assert_eq!(neighbors(&g, 1), vec![(0, e01), (2, e12)]);
    }

    #[test]
    fn out_of_range_edge_rejected() {
        assert!(build_graph(&[(0, 5, vec![1.0])], nodes(2)).is_err());
    }

    #[test]
    fn ragged_feature_rows_rejected() {
        assert!(build_graph(&[(0, 1, vec![1.0]), (1, 0, vec![1.0, 2.0])], nodes(2)).is_err());
    }

    #[test]
    fn in_neighbors_out_of_range_errors() {
        let g = build_graph::<f64>(&[], nodes(2)).unwrap();
        assert!(g.in_neighbors(2).is_err());
    }

    #[test]
    fn self_loop_stored_once() {
        let g = build_graph(&[(1, 1, vec![3.0])], nodes(2)).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(neighbors(&g, 1), vec![(1, 0)]);
    }

    #[test]
    fn duplicate_edges_kept() {
        let g = build_graph(&[(0, 1, vec![1.0]), (0, 1, vec![1.0])], nodes(2)).unwrap();
        assert_eq!(g.num_edges(), 4);
        assert_eq!(g.num_undirected_edges(), 2);
        assert_eq!(neighbors(&g, 0), vec![(1, 0), (1, 1)]);
    }

    #[test]
    fn reversed_entry_exists_with_same_edge_id() {
        let edges = vec![
            (0, 1, vec![1.0]),
            (2, 0, vec![-1.0]),
            (3, 1, vec![0.25]),
            (2, 2, vec![9.0]),
        ];
        let g = build_graph(&edges, nodes(4)).unwrap();
        for i in 0..4 {
            for (j, e) in neighbors(&g, i) {
                assert!(
                    neighbors(&g, j).contains(&(i, e)),
                    "missing reverse of ({i}<-{j}, {e})"
                );
            }
        }
        let total: usize = (0..4).map(|i| g.in_degree(i)).sum();
        assert_eq!(total, g.num_edges());
    }

    #[test]
    fn masked_drops_both_directions() {
        let g = build_graph(&[(0, 1, vec![1.0]), (1, 2, vec![2.0])], nodes(3)).unwrap();
        // find which edge id holds the (0,1) pair: feature 1.0
        let keep: Vec<bool> = (0..2).map(|e| g.edge_features().get(e, 0) != 1.0).collect();
        let m = g.masked(&keep);
        assert_eq!(m.num_edges(), 2);
        assert_eq!(m.in_degree(0), 0);
        assert_eq!(m.num_undirected_edges(), 2); // feature rows untouched
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn edge_list_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize, Vec<f64>)>)> {
            (3usize..10).prop_flat_map(|n| {
                let edge = (0..n, 0..n, proptest::collection::vec(-5.0f64..5.0, 2));
                (Just(n), proptest::collection::vec(edge, 0..20))
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn construction_is_permutation_invariant(
                (n, edges) in edge_list_strategy(),
                seed in 0u64..1000,
            ) {
                let g1 = build_graph(&edges, nodes(n)).unwrap();
                let mut shuffled = edges.clone();
                let mut rng = crate::rng::SeededRng::new(seed);
                rng.shuffle(&mut shuffled);
                let g2 = build_graph(&shuffled, nodes(n)).unwrap();
                prop_assert_eq!(g1, g2);
            }

            #[test]
            fn every_directed_entry_has_its_reverse(
                (n, edges) in edge_list_strategy(),
            ) {
                let g = build_graph(&edges, nodes(n)).unwrap();
                let mut total = 0;
                for i in 0..n {
                    for (j, e) in g.in_neighbors(i).unwrap() {
                        let back: Vec<_> = g.in_neighbors(j).unwrap().collect();
                        prop_assert!(back.contains(&(i, e)));
                    }
                    total += g.in_degree(i);
                }
                prop_assert_eq!(total, g.num_edges());
            }
        }
    }
}
