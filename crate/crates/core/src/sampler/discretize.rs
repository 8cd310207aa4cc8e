use super::ops::stronger_child;
use super::SampleConfig;
use crate::dst::DiffSymbolicTree;
use crate::expr::{Caps, Primitive, SymbolicTree};
use rand::Rng;

/// Draws a column from `softmax(logits / temperature)` restricted to the
/// columns accepted by `allowed`. Returns `None` if nothing is allowed.
fn draw<R: Rng + ?Sized>(
    logits: &[f64],
    allowed: impl Fn(usize) -> bool,
    temperature: f64,
    rng: &mut R,
) -> Option<usize> {
    let max = (0..logits.len())
        .filter(|&j| allowed(j))
        .map(|j| logits[j])
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let weights: Vec<f64> = (0..logits.len())
        .map(|j| {
            if allowed(j) {
                ((logits[j] - max) / temperature).exp()
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = None;
    for (j, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return Some(j);
            }
            u -= w;
            last = Some(j);
        }
    }
    last
}

/// Column of the heaviest terminal in `logits`; ties go to the lower column.
fn argmax_terminal(dst: &DiffSymbolicTree, logits: &[f64]) -> Primitive {
    let ps = &dst.primitive_set;
    let mut best: Option<usize> = None;
    for j in 0..logits.len() {
        if ps.get(j).is_terminal() {
            let better = match best {
                None => true,
                Some(b) => logits[j] > logits[b] || (logits[j] == logits[b] && ps.get(j) < ps.get(b)),
            };
            if better {
                best = Some(j);
            }
        }
    }
    ps.get(best.expect("primitive set has terminals"))
}

struct Built {
    prefix: Vec<Primitive>,
    height: usize,
}

/// Discretizes a DST bottom-up.
///
/// Each node draws a primitive from its tempered softmax row, then:
/// * same arity: the primitive is swapped in place;
/// * `pass` at a function node, or a unary function at a binary node: the
///   node collapses onto its (stronger) child, with the unary function kept
///   on top in the latter case;
/// * a terminal at a function node: the whole subtree becomes that terminal;
/// * `pass` at a leaf: the leaf becomes the heaviest terminal of its row;
/// * a larger arity: the node expands, keeping any existing child first and
///   filling new operands with terminals drawn from the node's own terminal
///   weights.
///
/// An expansion that would break `caps` is re-drawn among primitives whose
/// arity does not exceed the node's current arity.
pub fn sample_tree<R: Rng + ?Sized>(
    dst: &DiffSymbolicTree,
    rng: &mut R,
    cfg: &SampleConfig,
    caps: &Caps,
) -> SymbolicTree {
    let t = &dst.tree;
    let ps = &dst.primitive_set;
    let temp = cfg.temperature;
    let depths = t.node_depths();
    let k = t.len();
    let mut built: Vec<Option<Built>> = (0..k).map(|_| None).collect();
    // size of the tree if every unvisited node stays as it is
    let mut total = k;

    for i in (0..k).rev() {
        let logits = dst.node_matrix.row(i);
        let children: Vec<Built> = t.node(i).children.iter().map(|&c| built[c].take().expect("children visited first")).collect();
        let old_arity = children.len();
        let prev_size = 1 + children.iter().map(|c| c.prefix.len()).sum::<usize>();
        let stronger = if old_arity == 2 {
            let s = stronger_child(t, &dst.adjacency, i);
            usize::from(s != t.node(i).children[0])
        } else {
            0
        };

        let mut allow_expand = true;
        let result = loop {
            let j = draw(
                logits,
                |j| allow_expand || ps.get(j).arity() <= old_arity,
                temp,
                rng,
            )
            .expect("terminal columns are always allowed");
            let p = ps.get(j);
            let candidate = realize(dst, logits, p, &children, stronger, temp, rng);
            let grows = p.arity() > old_arity;
            if !grows {
                break candidate;
            }
            let size = total - prev_size + candidate.prefix.len();
            if size <= caps.max_nodes && depths[i] + candidate.height <= caps.max_depth {
                break candidate;
            }
            allow_expand = false;
        };
        total = total - prev_size + result.prefix.len();
        built[i] = Some(result);
    }
    let root = built[0].take().expect("root built");
    SymbolicTree::from_prefix(&root.prefix).expect("sampler emits complete prefix")
}

fn realize<R: Rng + ?Sized>(
    dst: &DiffSymbolicTree,
    logits: &[f64],
    p: Primitive,
    children: &[Built],
    stronger: usize,
    temp: f64,
    rng: &mut R,
) -> Built {
    let ps = &dst.primitive_set;
    let terminal = |rng: &mut R| {
        let j = draw(logits, |j| ps.get(j).is_terminal(), temp, rng).expect("terminals exist");
        ps.get(j)
    };
    let old_arity = children.len();
    let wrap = |p: Primitive, operands: &[&Built]| {
        let mut prefix = vec![p];
        for o in operands {
            prefix.extend_from_slice(&o.prefix);
        }
        let height = 1 + operands.iter().map(|o| o.height).max().unwrap_or(0);
        Built { prefix, height }
    };
    let leaf = |p: Primitive| Built {
        prefix: vec![p],
        height: 0,
    };

    if p.is_terminal() {
        return leaf(p);
    }
    if old_arity == 0 {
        if p == Primitive::Pass {
            return leaf(argmax_terminal(dst, logits));
        }
        let operands: Vec<Built> = (0..p.arity()).map(|_| leaf(terminal(rng))).collect();
        return wrap(p, &operands.iter().collect::<Vec<_>>());
    }
    let kept = &children[stronger];
    match (p.arity(), old_arity) {
        (1, _) if p == Primitive::Pass => Built {
            prefix: kept.prefix.clone(),
            height: kept.height,
        },
        (1, _) => wrap(p, &[kept]),
        (2, 2) => wrap(p, &[&children[0], &children[1]]),
        (2, 1) => {
            let extra = leaf(terminal(rng));
            wrap(p, &[&children[0], &extra])
        }
        _ => unreachable!("function arities are 1 or 2"),
    }
}
