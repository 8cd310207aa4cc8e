use super::DiffSymbolicTree;
use std::fmt::Write;

impl DiffSymbolicTree {
    /// Text dump: the top-3 primitive weights of every node followed by all
    /// edge strengths.
    pub fn report(&self) -> String {
        let ps = &self.primitive_set;
        let mut out = String::new();
        let _ = writeln!(out, "tree: {}", self.tree);
        let _ = writeln!(out, "nodes:");
        for i in 0..self.len() {
            let w = self.node_matrix.weights_row(i);
            let mut ranked: Vec<(usize, f64)> = w.into_iter().enumerate().collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let top: Vec<String> = ranked
                .iter()
                .take(3)
                .map(|&(j, v)| format!("{}={:.4}", ps.get(j), v))
                .collect();
            let _ = writeln!(
                out,
                "  [{i}] {} -> {}",
                self.tree.primitive(i),
                top.join(" ")
            );
        }
        let _ = writeln!(out, "edges:");
        for (c, p) in self.adjacency.edges() {
            let _ = writeln!(out, "  {c} -> {p}: {:.4}", self.adjacency.strength(c, p));
        }
        out
    }
}
