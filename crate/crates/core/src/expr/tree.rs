use super::Primitive;
use crate::{DgpError, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Size and depth limits for every tree the search produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Caps {
    pub max_nodes: usize,
    pub max_depth: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            max_nodes: 64,
            max_depth: 8,
        }
    }
}

impl Caps {
    pub fn admits(&self, t: &SymbolicTree) -> bool {
        t.len() <= self.max_nodes && t.depth() <= self.max_depth
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Node {
    pub primitive: Primitive,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// A discrete expression tree in preorder layout (root at index 0).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolicTree {
    nodes: Vec<Node>,
}

impl SymbolicTree {
    /// Builds a tree from a preorder primitive sequence.
    pub fn from_prefix(prefix: &[Primitive]) -> Result<Self> {
        if prefix.is_empty() {
            return Err(DgpError::InvalidTree("empty prefix sequence".into()));
        }
        let mut nodes: Vec<Node> = Vec::with_capacity(prefix.len());
        // stack of (node index, children still missing)
        let mut open: Vec<(usize, usize)> = Vec::new();
        for (i, &p) in prefix.iter().enumerate() {
            let parent = match open.last_mut() {
                Some((idx, missing)) => {
                    *missing -= 1;
                    Some(*idx)
                }
                None if i == 0 => None,
                None => {
                    return Err(DgpError::InvalidTree(format!(
                        "trailing primitives after complete tree at position {i}"
                    )))
                }
            };
            if let Some((_, 0)) = open.last() {
                open.pop();
            }
            if let Some(pi) = parent {
                nodes[pi].children.push(i);
            }
            nodes.push(Node {
                primitive: p,
                parent,
                children: Vec::with_capacity(p.arity()),
            });
            if p.arity() > 0 {
                open.push((i, p.arity()));
            }
        }
        if !open.is_empty() {
            return Err(DgpError::InvalidTree(
                "prefix sequence ends with missing operands".into(),
            ));
        }
        Ok(Self { nodes })
    }

    pub fn leaf(p: Primitive) -> Self {
        assert!(p.is_terminal(), "{p} is not a terminal");
        Self {
            nodes: vec![Node {
                primitive: p,
                parent: None,
                children: Vec::new(),
            }],
        }
    }

    /// `op(operands...)`; panics when the operand count does not match the
    /// arity of `op`.
    pub fn apply(op: Primitive, operands: &[&SymbolicTree]) -> Self {
        assert_eq!(op.arity(), operands.len(), "arity mismatch for {op}");
        let mut prefix = vec![op];
        for t in operands {
            prefix.extend(t.prefix());
        }
        Self::from_prefix(&prefix).expect("well-formed by construction")
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn root(&self) -> usize {
        0
    }

    /// Node count K.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn primitive(&self, i: usize) -> Primitive {
        self.nodes[i].primitive
    }

    pub fn prefix(&self) -> impl Iterator<Item = Primitive> + '_ {
        self.nodes.iter().map(|n| n.primitive)
    }

    /// Exclusive end of the preorder range occupied by the subtree at `i`.
    pub fn subtree_end(&self, i: usize) -> usize {
        let mut missing = 1usize;
        let mut j = i;
        while missing > 0 {
            missing = missing - 1 + self.nodes[j].primitive.arity();
            j += 1;
        }
        j
    }

    pub fn subtree_prefix(&self, i: usize) -> Vec<Primitive> {
        self.nodes[i..self.subtree_end(i)]
            .iter()
            .map(|n| n.primitive)
            .collect()
    }

    pub fn subtree(&self, i: usize) -> SymbolicTree {
        Self::from_prefix(&self.subtree_prefix(i)).expect("subtree of valid tree")
    }

    /// Returns a copy with the subtree at `i` replaced by `replacement`.
    pub fn replace_subtree(&self, i: usize, replacement: &SymbolicTree) -> SymbolicTree {
        let end = self.subtree_end(i);
        let mut prefix: Vec<Primitive> = Vec::with_capacity(self.len() - (end - i) + replacement.len());
        prefix.extend(self.nodes[..i].iter().map(|n| n.primitive));
        prefix.extend(replacement.prefix());
        prefix.extend(self.nodes[end..].iter().map(|n| n.primitive));
        Self::from_prefix(&prefix).expect("splice of valid trees")
    }

    /// Depth of node `i` (root has depth 0).
    pub fn node_depth(&self, mut i: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[i].parent {
            i = p;
            d += 1;
        }
        d
    }

    /// Depth of each node, computed in one pass.
    pub fn node_depths(&self) -> Vec<usize> {
        let mut depths = vec![0usize; self.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                depths[i] = depths[p] + 1;
            }
        }
        depths
    }

    /// Maximum node depth (a single leaf has depth 0).
    pub fn depth(&self) -> usize {
        self.node_depths().into_iter().max().unwrap_or(0)
    }

    /// Height of the subtree rooted at `i`.
    pub fn subtree_height(&self, i: usize) -> usize {
        let base = self.node_depth(i);
        let depths = self.node_depths();
        (i..self.subtree_end(i)).map(|j| depths[j] - base).max().unwrap_or(0)
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        self.nodes[i].children.is_empty()
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n.primitive {
                Primitive::Var(v) => Some(v),
                _ => None,
            })
            .max()
    }

    /// Checks every structural invariant, and the caps when given.
    pub fn validate(&self, caps: Option<&Caps>) -> Result<()> {
        let bad = |msg: String| Err(DgpError::InvalidTree(msg));
        if self.nodes.is_empty() {
            return bad("tree has no nodes".into());
        }
        let roots = self.nodes.iter().filter(|n| n.parent.is_none()).count();
        if roots != 1 || self.nodes[0].parent.is_some() {
            return bad(format!("expected exactly one root at index 0, found {roots}"));
        }
        let mut seen = vec![0u32; self.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if n.children.len() != n.primitive.arity() {
                return bad(format!(
                    "node {i} ({}) has {} children, arity {}",
                    n.primitive,
                    n.children.len(),
                    n.primitive.arity()
                ));
            }
            for &c in &n.children {
                if c >= self.len() || c <= i {
                    return bad(format!("node {i} has out-of-order child {c}"));
                }
                if self.nodes[c].parent != Some(i) {
                    return bad(format!("child {c} does not link back to parent {i}"));
                }
                seen[c] += 1;
            }
        }
        if seen.iter().skip(1).any(|&s| s != 1) {
            return bad("tree is not connected".into());
        }
        // preorder layout: subtree of the root must cover the whole array
        if self.subtree_end(0) != self.len() {
            return bad("node array is not in preorder".into());
        }
        if let Some(c) = caps {
            if self.len() > c.max_nodes {
                return Err(DgpError::CapExceeded(format!(
                    "{} nodes > max_nodes {}",
                    self.len(),
                    c.max_nodes
                )));
            }
            if self.depth() > c.max_depth {
                return Err(DgpError::CapExceeded(format!(
                    "depth {} > max_depth {}",
                    self.depth(),
                    c.max_depth
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for SymbolicTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_node(t: &SymbolicTree, i: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let n = t.node(i);
            if n.children.is_empty() {
                return write!(f, "{}", n.primitive);
            }
            write!(f, "({}", n.primitive)?;
            for &c in &n.children {
                f.write_str(" ")?;
                write_node(t, c, f)?;
            }
            f.write_str(")")
        }
        write_node(self, 0, f)
    }
}

impl Serialize for SymbolicTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SymbolicTree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_tree(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Primitive::*;

    #[test]
    fn prefix_builds_links() {
        let t = SymbolicTree::from_prefix(&[Add, Sin, Var(0), Var(1)]).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.node(0).children, vec![1, 3]);
        assert_eq!(t.node(2).parent, Some(1));
        assert_eq!(t.depth(), 2);
        t.validate(None).unwrap();
    }

    #[test]
    fn malformed_prefix_is_rejected() {
        assert!(SymbolicTree::from_prefix(&[Add, Var(0)]).is_err());
        assert!(SymbolicTree::from_prefix(&[Var(0), Var(1)]).is_err());
        assert!(SymbolicTree::from_prefix(&[]).is_err());
    }

    #[test]
    fn subtree_splicing() {
        let t = SymbolicTree::from_prefix(&[Add, Sin, Var(0), Var(1)]).unwrap();
        assert_eq!(t.subtree_end(1), 3);
        let r = t.replace_subtree(1, &SymbolicTree::leaf(Var(2)));
        assert_eq!(r.to_string(), "(+ x2 x1)");
        assert_eq!(t.subtree(1).to_string(), "(sin x0)");
        assert_eq!(t.subtree_height(1), 1);
    }

    #[test]
    fn caps_are_checked() {
        let t = SymbolicTree::from_prefix(&[Sin, Sin, Sin, Var(0)]).unwrap();
        let caps = Caps {
            max_nodes: 64,
            max_depth: 2,
        };
        assert!(matches!(t.validate(Some(&caps)), Err(DgpError::CapExceeded(_))));
        assert!(!caps.admits(&t));
    }
}
