use super::{Primitive, SymbolicTree, EXP_CLAMP, PROTECT_EPS};

#[inline]
pub(crate) fn protected_denominator(b: f64) -> f64 {
    if b.abs() >= PROTECT_EPS {
        b
    } else if b < 0.0 {
        -PROTECT_EPS
    } else {
        PROTECT_EPS
    }
}

/// Applies a function primitive under the protected semantics and reports
/// whether a protection rule changed the result.
///
/// Protections: `a / b` uses `±1e-6` when `|b| < 1e-6` (sign(0) = +1),
/// `log(x) = ln(|x| + 1e-6)` (counted as firing for `x < 1e-6`) and
/// `exp(x) = e^min(x, 50)`.
pub fn apply_primitive_checked(p: Primitive, inputs: &[f64]) -> (f64, bool) {
    debug_assert_eq!(inputs.len(), p.arity(), "wrong operand count for {p}");
    match p {
        Primitive::Add => (inputs[0] + inputs[1], false),
        Primitive::Sub => (inputs[0] - inputs[1], false),
        Primitive::Mul => (inputs[0] * inputs[1], false),
        Primitive::Div => {
            let b = inputs[1];
            (inputs[0] / protected_denominator(b), b.abs() < PROTECT_EPS)
        }
        Primitive::Sin => (inputs[0].sin(), false),
        Primitive::Cos => (inputs[0].cos(), false),
        Primitive::Exp => (inputs[0].min(EXP_CLAMP).exp(), inputs[0] > EXP_CLAMP),
        Primitive::Log => {
            let x = inputs[0];
            ((x.abs() + PROTECT_EPS).ln(), x < PROTECT_EPS)
        }
        Primitive::Pass => (inputs[0], false),
        Primitive::Var(_) => panic!("apply_primitive called on a terminal"),
    }
}

/// Applies a function primitive under the protected semantics.
#[inline]
pub fn apply_primitive(p: Primitive, inputs: &[f64]) -> f64 {
    apply_primitive_checked(p, inputs).0
}

#[inline]
pub(crate) fn apply_unary(p: Primitive, x: f64) -> f64 {
    match p {
        Primitive::Sin => x.sin(),
        Primitive::Cos => x.cos(),
        Primitive::Exp => x.min(EXP_CLAMP).exp(),
        Primitive::Log => (x.abs() + PROTECT_EPS).ln(),
        Primitive::Pass => x,
        _ => unreachable!("{p} is not unary"),
    }
}

#[inline]
pub(crate) fn apply_binary(p: Primitive, a: f64, b: f64) -> f64 {
    match p {
        Primitive::Add => a + b,
        Primitive::Sub => a - b,
        Primitive::Mul => a * b,
        Primitive::Div => a / protected_denominator(b),
        _ => unreachable!("{p} is not binary"),
    }
}

/// Evaluates the tree at one sample; the flag is set when any protection
/// fired or a value became non-finite.
pub fn evaluate_tree_checked(t: &SymbolicTree, x: &[f64]) -> (f64, bool) {
    let mut values = vec![0.0f64; t.len()];
    let mut fired = false;
    for i in (0..t.len()).rev() {
        let node = t.node(i);
        values[i] = match node.primitive {
            Primitive::Var(v) => x[v],
            p if p.arity() == 1 => {
                let (v, f) = apply_primitive_checked(p, &[values[node.children[0]]]);
                fired |= f;
                v
            }
            p => {
                let (v, f) = apply_primitive_checked(
                    p,
                    &[values[node.children[0]], values[node.children[1]]],
                );
                fired |= f;
                v
            }
        };
        fired |= !values[i].is_finite();
    }
    (values[0], fired)
}

/// Bottom-up evaluation of the tree at one sample.
pub fn evaluate_tree(t: &SymbolicTree, x: &[f64]) -> f64 {
    let mut values = vec![0.0f64; t.len()];
    for i in (0..t.len()).rev() {
        let node = t.node(i);
        values[i] = match node.primitive {
            Primitive::Var(v) => x[v],
            p if p.arity() == 1 => apply_unary(p, values[node.children[0]]),
            p => apply_binary(p, values[node.children[0]], values[node.children[1]]),
        };
    }
    values[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_tree;

    #[test]
    fn protected_division_by_zero() {
        assert_eq!(apply_primitive(Primitive::Div, &[1.0, 0.0]), 1e6);
        assert_eq!(apply_primitive(Primitive::Div, &[1.0, -1e-9]), -1e6);
        assert_eq!(apply_primitive(Primitive::Div, &[3.0, 2.0]), 1.5);
    }

    #[test]
    fn protected_log_and_exp() {
        assert!(apply_primitive(Primitive::Log, &[1.0]).abs() < 1e-6);
        assert!(apply_primitive(Primitive::Log, &[0.0]).is_finite());
        assert_eq!(apply_primitive(Primitive::Exp, &[1000.0]), 50f64.exp());
        assert!(apply_primitive_checked(Primitive::Exp, &[51.0]).1);
        assert!(apply_primitive_checked(Primitive::Log, &[-2.0]).1);
        assert!(!apply_primitive_checked(Primitive::Log, &[2.0]).1);
    }

    #[test]
    fn pass_is_identity() {
        assert_eq!(apply_primitive(Primitive::Pass, &[3.7]), 3.7);
    }

    #[test]
    fn evaluates_examples() {
        let t = parse_tree("(+ x0 x1)").unwrap();
        assert_eq!(evaluate_tree(&t, &[2.0, 3.0]), 5.0);
        let s1 = parse_tree("(- (* (sin (* x0 x0)) (cos x0)) (/ x0 x0))").unwrap();
        // x0/x0 at 0 is protected (0 / 1e-6 = 0), so evaluate the stated form
        let s1_direct = (0f64 * 0.0).sin() * 0f64.cos() - 1.0;
        assert_eq!(s1_direct, -1.0);
        assert!(evaluate_tree_checked(&s1, &[0.0]).1);
        let s5 = parse_tree("(/ (* (* x0 x0) (* x0 x0)) (+ x0 x1))").unwrap();
        assert_eq!(evaluate_tree(&s5, &[1.0, 1.0]), 0.5);
    }

    #[test]
    fn checked_and_plain_agree() {
        let t = parse_tree("(log (/ (exp x0) (- x1 x1)))").unwrap();
        let (v, fired) = evaluate_tree_checked(&t, &[0.3, 0.7]);
        assert_eq!(v, evaluate_tree(&t, &[0.3, 0.7]));
        assert!(fired);
        assert!(v.is_finite());
    }
}
