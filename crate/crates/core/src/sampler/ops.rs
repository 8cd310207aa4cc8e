use crate::dst::AdjacencyMatrix;
use crate::expr::{Caps, Primitive, PrimitiveSet, SymbolicTree};
use crate::{DgpError, Result};
use rand::seq::IndexedRandom;
use rand::Rng;

/// Child of `i` with the greatest edge strength; ties go to the earlier child.
pub(crate) fn stronger_child(t: &SymbolicTree, adjacency: &AdjacencyMatrix, i: usize) -> usize {
    let children = &t.node(i).children;
    let mut best = children[0];
    for &c in &children[1..] {
        if adjacency.strength(c, i) > adjacency.strength(best, i) {
            best = c;
        }
    }
    best
}

/// Removes function node `i`, lifting its child (or its stronger child, for a
/// binary node) into its place. The other subtree is dropped.
pub fn shrink(t: &SymbolicTree, i: usize, adjacency: &AdjacencyMatrix) -> Result<SymbolicTree> {
    if t.is_leaf(i) {
        return Err(DgpError::ShrinkTerminal(i));
    }
    let keep = stronger_child(t, adjacency, i);
    Ok(t.replace_subtree(i, &t.subtree(keep)))
}

/// Swaps the primitive at `i` for one of the same arity.
pub fn replace(t: &SymbolicTree, i: usize, p: Primitive) -> Result<SymbolicTree> {
    let old = t.primitive(i);
    if old.arity() != p.arity() {
        return Err(DgpError::ArityMismatch(format!(
            "cannot replace {old} (arity {}) with {p} (arity {})",
            old.arity(),
            p.arity()
        )));
    }
    let mut prefix: Vec<Primitive> = t.prefix().collect();
    prefix[i] = p;
    SymbolicTree::from_prefix(&prefix)
}

/// Raises the arity of node `i` to that of `p`. An existing child stays the
/// first operand; every missing operand becomes a uniformly drawn terminal.
pub fn expand<R: Rng + ?Sized>(
    t: &SymbolicTree,
    i: usize,
    p: Primitive,
    ps: &PrimitiveSet,
    caps: &Caps,
    rng: &mut R,
) -> Result<SymbolicTree> {
    let old = t.primitive(i);
    if p.arity() <= old.arity() {
        return Err(DgpError::ArityMismatch(format!(
            "expand needs a larger arity: {old} -> {p}"
        )));
    }
    let terminals: Vec<Primitive> = ps.terminals().collect();
    let mut sub = vec![p];
    sub.extend(t.subtree_prefix(i).into_iter().skip(1));
    for _ in old.arity()..p.arity() {
        sub.push(*terminals.choose(rng).expect("primitive set has terminals"));
    }
    let out = t.replace_subtree(i, &SymbolicTree::from_prefix(&sub)?);
    if !caps.admits(&out) {
        return Err(DgpError::CapExceeded(format!(
            "expanding node {i} to {p} gives {} nodes, depth {}",
            out.len(),
            out.depth()
        )));
    }
    Ok(out)
}
