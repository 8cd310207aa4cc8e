//! Mixing-node forward pass.
//!
//! The pass is written once against the [`Algebra`] trait so the same code
//! drives plain `f64` evaluation and the recording tape used for training.

use super::DiffSymbolicTree;
use crate::expr::eval::{apply_binary, apply_unary, protected_denominator};
use crate::expr::{Primitive, PrimitiveSet, EXP_CLAMP, PROTECT_EPS};

/// Scalar operations needed by the relaxed forward pass.
pub(crate) trait Algebra {
    type V: Copy;

    fn lit(&mut self, x: f64) -> Self::V;
    fn val(&self, v: Self::V) -> f64;

    fn add(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn sub(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn mul(&mut self, a: Self::V, b: Self::V) -> Self::V;
    /// Protected division.
    fn div(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn sin(&mut self, a: Self::V) -> Self::V;
    fn cos(&mut self, a: Self::V) -> Self::V;
    /// Clamped exponential.
    fn exp(&mut self, a: Self::V) -> Self::V;
    /// Protected logarithm.
    fn log(&mut self, a: Self::V) -> Self::V;

    fn exp_raw(&mut self, a: Self::V) -> Self::V;
    fn sigmoid(&mut self, a: Self::V) -> Self::V;
    fn sqrt(&mut self, a: Self::V) -> Self::V;
    fn offset(&mut self, a: Self::V, c: f64) -> Self::V;
    fn scale(&mut self, a: Self::V, c: f64) -> Self::V;
    fn sum(&mut self, xs: &[Self::V]) -> Self::V;
    /// Σ ws[j] * os[j]
    fn dot(&mut self, ws: &[Self::V], os: &[Self::V]) -> Self::V;
    /// Σ ws[j] * cs[j] with constant `cs`.
    fn dot_const(&mut self, ws: &[Self::V], cs: &[f64]) -> Self::V;

    fn unary(&mut self, p: Primitive, a: Self::V) -> Self::V {
        match p {
            Primitive::Sin => self.sin(a),
            Primitive::Cos => self.cos(a),
            Primitive::Exp => self.exp(a),
            Primitive::Log => self.log(a),
            Primitive::Pass => a,
            _ => unreachable!("{p} is not unary"),
        }
    }

    fn binary(&mut self, p: Primitive, a: Self::V, b: Self::V) -> Self::V {
        match p {
            Primitive::Add => self.add(a, b),
            Primitive::Sub => self.sub(a, b),
            Primitive::Mul => self.mul(a, b),
            Primitive::Div => self.div(a, b),
            _ => unreachable!("{p} is not binary"),
        }
    }
}

/// Plain `f64` arithmetic.
pub(crate) struct Plain;

impl Algebra for Plain {
    type V = f64;

    fn lit(&mut self, x: f64) -> f64 {
        x
    }
    fn val(&self, v: f64) -> f64 {
        v
    }
    fn add(&mut self, a: f64, b: f64) -> f64 {
        a + b
    }
    fn sub(&mut self, a: f64, b: f64) -> f64 {
        a - b
    }
    fn mul(&mut self, a: f64, b: f64) -> f64 {
        a * b
    }
    fn div(&mut self, a: f64, b: f64) -> f64 {
        a / protected_denominator(b)
    }
    fn sin(&mut self, a: f64) -> f64 {
        a.sin()
    }
    fn cos(&mut self, a: f64) -> f64 {
        a.cos()
    }
    fn exp(&mut self, a: f64) -> f64 {
        a.min(EXP_CLAMP).exp()
    }
    fn log(&mut self, a: f64) -> f64 {
        (a.abs() + PROTECT_EPS).ln()
    }
    fn exp_raw(&mut self, a: f64) -> f64 {
        a.exp()
    }
    fn sigmoid(&mut self, a: f64) -> f64 {
        super::sigmoid(a)
    }
    fn sqrt(&mut self, a: f64) -> f64 {
        a.sqrt()
    }
    fn offset(&mut self, a: f64, c: f64) -> f64 {
        a + c
    }
    fn scale(&mut self, a: f64, c: f64) -> f64 {
        a * c
    }
    fn sum(&mut self, xs: &[f64]) -> f64 {
        xs.iter().sum()
    }
    fn dot(&mut self, ws: &[f64], os: &[f64]) -> f64 {
        ws.iter().zip(os).map(|(w, o)| w * o).sum()
    }
    fn dot_const(&mut self, ws: &[f64], cs: &[f64]) -> f64 {
        ws.iter().zip(cs).map(|(w, c)| w * c).sum()
    }
}

/// Per-node routing decisions that depend on the parameters but not on the
/// sample: which terminals feed a leaf's function columns and which child
/// feeds unary operations at a 2-arity node.
#[derive(Clone, Debug)]
pub(crate) enum Route {
    Leaf { first: usize, second: usize },
    Unary { child: usize },
    Binary { children: [usize; 2], stronger: usize },
}

#[derive(Clone, Debug)]
pub(crate) struct Plan<V> {
    pub routes: Vec<Route>,
    /// Row-major K×L softmax weights.
    pub weights: Vec<V>,
    /// Strength of the edge entering each node (root entry unused).
    pub strengths: Vec<V>,
}

/// Terminal variables ranked by weight (ties to the lower variable index).
fn top_two_terminals(ps: &PrimitiveSet, w_row: &[f64]) -> (usize, usize) {
    let mut ranked: Vec<(usize, f64)> = (0..ps.n_vars())
        .map(|v| (v, w_row[ps.column_of(Primitive::Var(v)).expect("var column")]))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let first = ranked[0].0;
    let second = ranked.get(1).map_or(first, |r| r.0);
    (first, second)
}

impl<V: Copy> Plan<V> {
    /// Builds softmax weights and edge strengths from parameter handles
    /// (`node_logits` row-major K×L, `edge_logits` one per node).
    pub fn build<A: Algebra<V = V>>(
        alg: &mut A,
        dst: &DiffSymbolicTree,
        node_logits: &[V],
        edge_logits: &[V],
    ) -> Self {
        let k = dst.len();
        let l = dst.primitive_set.len();
        let mut weights = Vec::with_capacity(k * l);
        let mut exps = Vec::with_capacity(l);
        for i in 0..k {
            let row = &node_logits[i * l..(i + 1) * l];
            let m = row
                .iter()
                .map(|&v| alg.val(v))
                .fold(f64::NEG_INFINITY, f64::max);
            exps.clear();
            for &v in row {
                let shifted = alg.offset(v, -m);
                exps.push(alg.exp_raw(shifted));
            }
            let s = alg.sum(&exps);
            for &e in &exps {
                weights.push(alg.div(e, s));
            }
        }
        let strengths: Vec<V> = (0..k)
            .map(|i| {
                if dst.tree.node(i).parent.is_some() {
                    alg.sigmoid(edge_logits[i])
                } else {
                    alg.lit(0.0)
                }
            })
            .collect();
        let routes = (0..k)
            .map(|i| {
                let node = dst.tree.node(i);
                match node.children.as_slice() {
                    [] => {
                        let row: Vec<f64> =
                            weights[i * l..(i + 1) * l].iter().map(|&w| alg.val(w)).collect();
                        let (first, second) = top_two_terminals(&dst.primitive_set, &row);
                        Route::Leaf { first, second }
                    }
                    [c] => Route::Unary { child: *c },
                    [c1, c2] => {
                        let (a1, a2) = (alg.val(strengths[*c1]), alg.val(strengths[*c2]));
                        Route::Binary {
                            children: [*c1, *c2],
                            stronger: if a2 > a1 { 1 } else { 0 },
                        }
                    }
                    _ => unreachable!("arity > 2"),
                }
            })
            .collect();
        Plan {
            routes,
            weights,
            strengths,
        }
    }
}

/// Output of a mixing function node.
#[allow(clippy::too_many_arguments)]
fn mix_function<A: Algebra>(
    alg: &mut A,
    ps: &PrimitiveSet,
    w: &[A::V],
    raw: &[A::V],
    strengths: &[A::V],
    stronger: usize,
    x: &[f64],
    scale_binary: bool,
) -> A::V {
    let scaled: Vec<A::V> = raw
        .iter()
        .zip(strengths)
        .map(|(&r, &a)| alg.mul(a, r))
        .collect();
    let bin_src = if scale_binary { &scaled } else { raw };
    let (b1, b2) = if bin_src.len() == 2 {
        (bin_src[0], bin_src[1])
    } else {
        // phantom second operand duplicates the only input
        (bin_src[0], bin_src[0])
    };
    let u = scaled[stronger];
    let outs: Vec<A::V> = ps
        .primitives()
        .iter()
        .map(|&p| match p {
            Primitive::Var(v) => alg.lit(x[v]),
            p if p.arity() == 1 => alg.unary(p, u),
            p => alg.binary(p, b1, b2),
        })
        .collect();
    alg.dot(w, &outs)
}

/// Leaf output: terminal columns read `x` directly, function columns apply
/// to the top-ranked terminal (and the runner-up as second operand).
fn mix_leaf<A: Algebra>(
    alg: &mut A,
    ps: &PrimitiveSet,
    w: &[A::V],
    x: &[f64],
    first: usize,
    second: usize,
) -> A::V {
    let (x1, x2) = (x[first], x[second]);
    let consts: Vec<f64> = ps
        .primitives()
        .iter()
        .map(|&p| match p {
            Primitive::Var(v) => x[v],
            p if p.arity() == 1 => apply_unary(p, x1),
            p => apply_binary(p, x1, x2),
        })
        .collect();
    alg.dot_const(w, &consts)
}

/// Runs the bottom-up pass for one sample; node outputs are written into
/// `trace` when given.
pub(crate) fn forward_sample<A: Algebra>(
    alg: &mut A,
    dst: &DiffSymbolicTree,
    plan: &Plan<A::V>,
    x: &[f64],
    trace: Option<&mut Vec<f64>>,
) -> A::V {
    let k = dst.len();
    let l = dst.primitive_set.len();
    let ps = &*dst.primitive_set;
    let mut r: Vec<Option<A::V>> = vec![None; k];
    for i in (0..k).rev() {
        let w = &plan.weights[i * l..(i + 1) * l];
        let out = match plan.routes[i] {
            Route::Leaf { first, second } => mix_leaf(alg, ps, w, x, first, second),
            Route::Unary { child } => {
                let raw = [r[child].expect("child computed first")];
                let st = [plan.strengths[child]];
                mix_function(alg, ps, w, &raw, &st, 0, x, dst.scale_binary_inputs)
            }
            Route::Binary { children, stronger } => {
                let raw = [
                    r[children[0]].expect("child computed first"),
                    r[children[1]].expect("child computed first"),
                ];
                let st = [plan.strengths[children[0]], plan.strengths[children[1]]];
                mix_function(alg, ps, w, &raw, &st, stronger, x, dst.scale_binary_inputs)
            }
        };
        r[i] = Some(out);
    }
    if let Some(t) = trace {
        t.clear();
        t.extend(r.iter().map(|v| alg.val(v.expect("all nodes computed"))));
    }
    r[0].expect("root computed")
}

/// Mixing-node output for a function node.
///
/// `raw_inputs` are the child outputs in child order, `strengths` the
/// matching edge strengths. Binary operations receive the strength-scaled
/// inputs (or the raw ones when `scale_binary_inputs` is false; a single
/// input is duplicated as the second operand), unary operations receive the
/// scaled output of the stronger child (ties to the first), and terminal
/// columns contribute `w_j * x[j]`.
pub fn mix_node(
    ps: &PrimitiveSet,
    w_row: &[f64],
    raw_inputs: &[f64],
    strengths: &[f64],
    x: &[f64],
    scale_binary_inputs: bool,
) -> f64 {
    assert!(
        matches!(raw_inputs.len(), 1 | 2) && raw_inputs.len() == strengths.len(),
        "function nodes take one or two inputs with matching strengths"
    );
    let stronger = if strengths.len() == 2 && strengths[1] > strengths[0] {
        1
    } else {
        0
    };
    mix_function(
        &mut Plain,
        ps,
        w_row,
        raw_inputs,
        strengths,
        stronger,
        x,
        scale_binary_inputs,
    )
}

/// Root output plus every node's output.
#[derive(Clone, Debug, PartialEq)]
pub struct Forward {
    pub output: f64,
    pub trace: Vec<f64>,
}

pub(crate) fn plain_plan(dst: &DiffSymbolicTree) -> Plan<f64> {
    Plan::build(
        &mut Plain,
        dst,
        dst.node_matrix.logits(),
        dst.adjacency.logits(),
    )
}

/// Forward pass of the relaxed tree for one sample.
pub fn forward(dst: &DiffSymbolicTree, x: &[f64]) -> Forward {
    let plan = plain_plan(dst);
    let mut trace = Vec::with_capacity(dst.len());
    let output = forward_sample(&mut Plain, dst, &plan, x, Some(&mut trace));
    Forward { output, trace }
}

/// Forward pass over many samples.
pub fn forward_batch<'a, I>(dst: &DiffSymbolicTree, xs: I) -> Vec<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let plan = plain_plan(dst);
    xs.into_iter()
        .map(|x| forward_sample(&mut Plain, dst, &plan, x, None))
        .collect()
}
