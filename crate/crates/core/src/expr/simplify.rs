use super::{Primitive, SymbolicTree};

/// Removes every `Pass` node, connecting its child to its parent.
///
/// This is the only rewrite that is exact under the protected semantics;
/// dropping a unary node from a preorder sequence always leaves a valid
/// sequence, so a single pass reaches the fixpoint.
pub fn simplify(t: &SymbolicTree) -> SymbolicTree {
    if !t.prefix().any(|p| p == Primitive::Pass) {
        return t.clone();
    }
    let prefix: Vec<Primitive> = t.prefix().filter(|&p| p != Primitive::Pass).collect();
    SymbolicTree::from_prefix(&prefix).expect("pass elimination preserves validity")
}
