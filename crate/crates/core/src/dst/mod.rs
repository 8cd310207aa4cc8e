//! Continuous relaxation of symbolic trees.
//!
//! A [`DiffSymbolicTree`] keeps the topology of a discrete tree fixed and
//! attaches two sets of learnable parameters: a node matrix of per-node
//! primitive logits (softmaxed row by row) and one logit per tree edge
//! (squashed through a sigmoid into a connection strength).

mod forward;
mod report;

pub use forward::{forward, forward_batch, mix_node, Forward};
pub(crate) use forward::{forward_sample, Algebra, Plan};

use crate::expr::{PrimitiveSet, SymbolicTree};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Initial logits used when relaxing a tree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    /// Logit placed on each node's original primitive (others start at 0).
    pub hot_logit: f64,
    /// Logit of every edge.
    pub edge_logit: f64,
    /// Feed adjacency-scaled child outputs to binary operations. When false,
    /// binary operations see the raw child outputs.
    pub scale_binary_inputs: bool,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            hot_logit: 4.0,
            edge_logit: 2.0,
            scale_binary_inputs: true,
        }
    }
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Row-wise softmax of `logits`, written into `out`.
pub(crate) fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - m).exp();
        s += *o;
    }
    for o in out.iter_mut() {
        *o /= s;
    }
}

/// K×L matrix of primitive logits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeMatrix {
    rows: usize,
    cols: usize,
    logits: Vec<f64>,
}

impl NodeMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            logits: vec![0.0; rows * cols],
        }
    }

    pub fn from_logits(rows: usize, cols: usize, logits: Vec<f64>) -> Self {
        assert_eq!(logits.len(), rows * cols, "logit count must be rows * cols");
        Self { rows, cols, logits }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn logits_mut(&mut self) -> &mut [f64] {
        &mut self.logits
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.logits[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.logits[i * self.cols..(i + 1) * self.cols]
    }

    /// Softmax of row `i`.
    pub fn weights_row(&self, i: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.cols];
        softmax_into(self.row(i), &mut w);
        w
    }

    /// Row-softmaxed weights, row-major.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.logits.len()];
        for i in 0..self.rows {
            softmax_into(self.row(i), &mut w[i * self.cols..(i + 1) * self.cols]);
        }
        w
    }
}

/// Edge logits indexed by child node; the root has no incoming edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyMatrix {
    parents: Vec<Option<usize>>,
    logits: Vec<f64>,
}

impl AdjacencyMatrix {
    pub fn for_tree(tree: &SymbolicTree, edge_logit: f64) -> Self {
        let parents: Vec<Option<usize>> = tree.nodes().iter().map(|n| n.parent).collect();
        let logits = parents
            .iter()
            .map(|p| if p.is_some() { edge_logit } else { 0.0 })
            .collect();
        Self { parents, logits }
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn is_edge(&self, child: usize, parent: usize) -> bool {
        self.parents.get(child).copied().flatten() == Some(parent)
    }

    /// σ(v) on tree edges, exactly 0 elsewhere.
    pub fn strength(&self, child: usize, parent: usize) -> f64 {
        if self.is_edge(child, parent) {
            sigmoid(self.logits[child])
        } else {
            0.0
        }
    }

    /// Strength of the edge from `child` to its parent (0 for the root).
    pub fn parent_strength(&self, child: usize) -> f64 {
        match self.parents[child] {
            Some(_) => sigmoid(self.logits[child]),
            None => 0.0,
        }
    }

    /// Raw logit of the edge entering `child`.
    pub fn edge_logit(&self, child: usize) -> f64 {
        self.logits[child]
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn logits_mut(&mut self) -> &mut [f64] {
        &mut self.logits
    }

    /// `(child, parent)` pairs.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parents
            .iter()
            .enumerate()
            .filter_map(|(c, p)| p.map(|p| (c, p)))
    }

    /// Dense K×K strength matrix (row = child, column = parent).
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let k = self.len();
        let mut m = vec![vec![0.0; k]; k];
        for (c, p) in self.edges() {
            m[c][p] = sigmoid(self.logits[c]);
        }
        m
    }
}

/// A fixed-topology tree with learnable node and edge parameters.
#[derive(Clone, Debug)]
pub struct DiffSymbolicTree {
    pub tree: SymbolicTree,
    pub node_matrix: NodeMatrix,
    pub adjacency: AdjacencyMatrix,
    pub primitive_set: Arc<PrimitiveSet>,
    pub scale_binary_inputs: bool,
}

impl DiffSymbolicTree {
    /// Relaxes `tree`: each row puts `hot_logit` on the node's current
    /// primitive and 0 elsewhere; every edge gets `edge_logit`.
    pub fn relax(tree: &SymbolicTree, ps: Arc<PrimitiveSet>, init: &InitConfig) -> Self {
        let k = tree.len();
        let l = ps.len();
        let mut node_matrix = NodeMatrix::zeros(k, l);
        for (i, n) in tree.nodes().iter().enumerate() {
            let col = ps
                .column_of(n.primitive)
                .unwrap_or_else(|| panic!("{} is not in the primitive set", n.primitive));
            node_matrix.row_mut(i)[col] = init.hot_logit;
        }
        Self {
            adjacency: AdjacencyMatrix::for_tree(tree, init.edge_logit),
            tree: tree.clone(),
            node_matrix,
            primitive_set: ps,
            scale_binary_inputs: init.scale_binary_inputs,
        }
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    /// Number of learnable scalars (node logits followed by edge logits).
    pub fn n_params(&self) -> usize {
        self.node_matrix.logits().len() + self.adjacency.logits().len()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.node_matrix.logits().to_vec();
        p.extend_from_slice(self.adjacency.logits());
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let n = self.node_matrix.logits().len();
        self.node_matrix.logits_mut().copy_from_slice(&p[..n]);
        self.adjacency.logits_mut().copy_from_slice(&p[n..]);
    }

    pub fn params_finite(&self) -> bool {
        self.node_matrix.logits().iter().all(|v| v.is_finite())
            && self.adjacency.logits().iter().all(|v| v.is_finite())
    }
}

/// Convenience wrapper for [`DiffSymbolicTree::relax`].
pub fn relax(tree: &SymbolicTree, ps: Arc<PrimitiveSet>, init: &InitConfig) -> DiffSymbolicTree {
    DiffSymbolicTree::relax(tree, ps, init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_tree, Primitive};

    #[test]
    fn relax_hot_weight() {
        let ps = Arc::new(PrimitiveSet::new(2));
        let t = parse_tree("(+ x0 x1)").unwrap();
        let dst = relax(&t, ps, &InitConfig::default());
        let w = dst.node_matrix.weights_row(0);
        let e4 = 4f64.exp();
        assert!((w[0] - e4 / (e4 + 10.0)).abs() < 1e-12);
        assert!((w[0] - 0.845).abs() < 1e-3);
        for (c, p) in dst.adjacency.edges() {
            assert!((dst.adjacency.strength(c, p) - 0.880_797_077_977_882_3).abs() < 1e-12);
        }
    }

    #[test]
    fn large_hot_logit_approaches_one_hot() {
        let ps = Arc::new(PrimitiveSet::new(1));
        let t = parse_tree("(sin x0)").unwrap();
        let init = InitConfig {
            hot_logit: 60.0,
            ..Default::default()
        };
        let dst = relax(&t, ps.clone(), &init);
        let col = ps.column_of(Primitive::Sin).unwrap();
        assert!((dst.node_matrix.weights_row(0)[col] - 1.0).abs() < 1e-20);
    }

    #[test]
    fn weights_rows_are_distributions() {
        let nm = NodeMatrix::from_logits(2, 3, vec![0.0, 1.0, -2.0, 700.0, -700.0, 3.0]);
        let w = nm.weights();
        for r in w.chunks(3) {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(r.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn adjacency_pattern_matches_tree() {
        let t = parse_tree("(+ (sin x0) x1)").unwrap();
        let a = AdjacencyMatrix::for_tree(&t, 2.0);
        let dense = a.dense();
        let edges: Vec<_> = a.edges().collect();
        assert_eq!(edges, vec![(1, 0), (2, 1), (3, 0)]);
        for c in 0..4 {
            for p in 0..4 {
                let s = dense[c][p];
                if edges.contains(&(c, p)) {
                    assert!(s > 0.0 && s < 1.0);
                } else {
                    assert_eq!(s, 0.0);
                }
            }
        }
    }
}
