//! Discrete expression trees and the primitive set they are built from.
//!
//! Trees are stored as index-addressed node arrays in preorder: the root is
//! node 0 and every child has a larger index than its parent. All tree
//! operations in this crate return trees in that canonical layout.

mod equiv;
pub(crate) mod eval;
mod random;
mod simplify;
mod text;
mod tree;

pub use equiv::{numeric_equiv, numeric_equiv_report, Equivalence, EQUIV_POINTS};
pub use eval::{apply_primitive, apply_primitive_checked, evaluate_tree, evaluate_tree_checked};
pub use random::{random_tree, ramped_half_and_half, GenMethod};
pub use simplify::simplify;
pub use text::parse_tree;
pub use tree::{Caps, Node, SymbolicTree};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Denominator / log floor used by the protected operators.
pub const PROTECT_EPS: f64 = 1e-6;
/// Upper clamp applied to the argument of `exp`.
pub const EXP_CLAMP: f64 = 50.0;

/// A function or terminal that can occupy a tree node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Primitive {
    Add,
    Sub,
    Mul,
    Div,
    Sin,
    Cos,
    Exp,
    Log,
    Pass,
    Var(usize),
}

impl Primitive {
    /// The nine function primitives in their canonical column order.
    pub const FUNCTIONS: [Primitive; 9] = [
        Primitive::Add,
        Primitive::Sub,
        Primitive::Mul,
        Primitive::Div,
        Primitive::Sin,
        Primitive::Cos,
        Primitive::Exp,
        Primitive::Log,
        Primitive::Pass,
    ];

    pub fn arity(self) -> usize {
        match self {
            Primitive::Add | Primitive::Sub | Primitive::Mul | Primitive::Div => 2,
            Primitive::Sin
            | Primitive::Cos
            | Primitive::Exp
            | Primitive::Log
            | Primitive::Pass => 1,
            Primitive::Var(_) => 0,
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Primitive::Var(_))
    }

    pub fn is_function(self) -> bool {
        !self.is_terminal()
    }

    /// Token used by the prefix text format.
    pub fn symbol(self) -> String {
        match self {
            Primitive::Add => "+".into(),
            Primitive::Sub => "-".into(),
            Primitive::Mul => "*".into(),
            Primitive::Div => "/".into(),
            Primitive::Sin => "sin".into(),
            Primitive::Cos => "cos".into(),
            Primitive::Exp => "exp".into(),
            Primitive::Log => "log".into(),
            Primitive::Pass => "pass".into(),
            Primitive::Var(i) => format!("x{i}"),
        }
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol())
    }
}

/// Ordered primitive set; column `j` of a node matrix always denotes
/// `primitives()[j]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimitiveSet {
    columns: Vec<Primitive>,
    n_vars: usize,
    /// column index of each function primitive, indexed by `func_slot`
    func_cols: [usize; 9],
    var_cols: Vec<usize>,
}

fn func_slot(p: Primitive) -> Option<usize> {
    Primitive::FUNCTIONS.iter().position(|&q| q == p)
}

impl PrimitiveSet {
    /// The canonical set: the nine functions followed by `x0..x{d-1}`.
    pub fn new(n_vars: usize) -> Self {
        let mut columns = Primitive::FUNCTIONS.to_vec();
        columns.extend((0..n_vars).map(Primitive::Var));
        Self::with_order(columns).expect("canonical order is valid")
    }

    /// A set with an explicit column order. Must contain every function
    /// exactly once and `Var(0..d)` exactly once each.
    pub fn with_order(columns: Vec<Primitive>) -> crate::Result<Self> {
        let n_vars = columns.iter().filter(|p| p.is_terminal()).count();
        let mut func_cols = [usize::MAX; 9];
        let mut var_cols = vec![usize::MAX; n_vars];
        for (j, &p) in columns.iter().enumerate() {
            let slot = match p {
                Primitive::Var(v) if v < n_vars => &mut var_cols[v],
                Primitive::Var(v) => {
                    return Err(crate::DgpError::InvalidPrimitiveSet(format!(
                        "variable x{v} out of range for {n_vars} variables"
                    )))
                }
                f => &mut func_cols[func_slot(f).expect("function primitive")],
            };
            if *slot != usize::MAX {
                return Err(crate::DgpError::InvalidPrimitiveSet(format!(
                    "duplicate primitive {p}"
                )));
            }
            *slot = j;
        }
        if func_cols.contains(&usize::MAX) {
            return Err(crate::DgpError::InvalidPrimitiveSet(
                "every function primitive must appear once".into(),
            ));
        }
        Ok(Self {
            columns,
            n_vars,
            func_cols,
            var_cols,
        })
    }

    /// Total column count L.
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.columns
    }

    pub fn get(&self, column: usize) -> Primitive {
        self.columns[column]
    }

    pub fn column_of(&self, p: Primitive) -> Option<usize> {
        match p {
            Primitive::Var(v) => self.var_cols.get(v).copied(),
            f => func_slot(f).map(|s| self.func_cols[s]),
        }
    }

    /// Function primitives available to random generation (everything but
    /// `Pass`).
    pub fn generative_functions(&self) -> impl Iterator<Item = Primitive> + '_ {
        Primitive::FUNCTIONS
            .iter()
            .copied()
            .filter(|&p| p != Primitive::Pass)
    }

    pub fn terminals(&self) -> impl Iterator<Item = Primitive> + '_ {
        (0..self.n_vars).map(Primitive::Var)
    }
}
