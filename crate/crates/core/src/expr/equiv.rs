use super::{evaluate_tree_checked, simplify, SymbolicTree};
use rand::Rng;

/// Number of probe points used by [`numeric_equiv`].
pub const EQUIV_POINTS: usize = 256;
const REL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    Different,
    /// More than half of the probe points hit a protection rule.
    Indeterminate,
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [usize; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Probe points in the unit cube: a midpoint grid for d <= 2, otherwise a
/// randomly shifted Halton sequence.
fn unit_points<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    match d {
        0 => vec![Vec::new()],
        1 => (0..EQUIV_POINTS)
            .map(|i| vec![(i as f64 + 0.5) / EQUIV_POINTS as f64])
            .collect(),
        2 => {
            let side = 16;
            (0..side * side)
                .map(|k| {
                    vec![
                        ((k / side) as f64 + 0.5) / side as f64,
                        ((k % side) as f64 + 0.5) / side as f64,
                    ]
                })
                .collect()
        }
        _ => {
            let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            (1..=EQUIV_POINTS)
                .map(|i| {
                    (0..d)
                        .map(|k| {
                            let base = PRIMES.get(k).copied().unwrap_or_else(|| nth_prime(k));
                            (radical_inverse(i, base) + shift[k]).fract()
                        })
                        .collect()
                })
                .collect()
        }
    }
}

fn nth_prime(n: usize) -> usize {
    let mut count = 0;
    let mut c = 1;
    loop {
        c += 1;
        if (2..c).take_while(|q| q * q <= c).all(|q| c % q != 0) {
            if count == n {
                return c;
            }
            count += 1;
        }
    }
}

/// Compares two trees pointwise over `domain` (one `(lo, hi)` per variable)
/// after Pass elimination. Points where a protection fires in either tree
/// are skipped.
pub fn numeric_equiv_report<R: Rng + ?Sized>(
    a: &SymbolicTree,
    b: &SymbolicTree,
    domain: &[(f64, f64)],
    rng: &mut R,
) -> Equivalence {
    let needed = a.max_var().max(b.max_var()).map_or(0, |v| v + 1);
    if needed > domain.len() {
        return Equivalence::Different;
    }
    let a = simplify(a);
    let b = simplify(b);
    let d = domain.len();
    let mut skipped = 0usize;
    let points = unit_points(d, rng);
    let total = points.len();
    let mut x = vec![0.0; d];
    for u in points {
        for k in 0..d {
            let (lo, hi) = domain[k];
            x[k] = lo + u[k] * (hi - lo);
        }
        let (va, fa) = evaluate_tree_checked(&a, &x);
        let (vb, fb) = evaluate_tree_checked(&b, &x);
        if fa || fb {
            skipped += 1;
            continue;
        }
        if (va - vb).abs() > REL_TOL * (1.0 + vb.abs()) {
            return Equivalence::Different;
        }
    }
    if 2 * skipped > total {
        Equivalence::Indeterminate
    } else {
        Equivalence::Equivalent
    }
}

/// True iff the trees agree within `1e-10 * (1 + |b|)` on every
/// protection-free probe point. Indeterminate comparisons count as false.
pub fn numeric_equiv<R: Rng + ?Sized>(
    a: &SymbolicTree,
    b: &SymbolicTree,
    domain: &[(f64, f64)],
    rng: &mut R,
) -> bool {
    numeric_equiv_report(a, b, domain, rng) == Equivalence::Equivalent
}
