//! Reverse-mode gradients of the composite loss against central finite
//! differences of the plain forward pass.

use dgp_core::dst::{relax, DiffSymbolicTree, InitConfig};
use dgp_core::expr::{ramped_half_and_half, PrimitiveSet};
use dgp_core::grad::{backward, record_loss, total_loss, LossConfig, Tape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

struct Case {
    dst: DiffSymbolicTree,
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
}

/// Cases whose loss exceeds this are redrawn: a central difference in f64
/// cannot resolve a gradient against a loss of order 1e19.
const MAX_CASE_LOSS: f64 = 1e6;

fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let case = draw_case(&mut rng);
        let xr: Vec<&[f64]> = case.xs.iter().map(|x| x.as_slice()).collect();
        if let Ok(parts) = total_loss(&case.dst, &xr, &case.ys, &LossConfig::default()) {
            if parts.total < MAX_CASE_LOSS {
                return case;
            }
        }
    }
}

fn draw_case(rng: &mut ChaCha8Rng) -> Case {
    let d = rng.random_range(1..=3);
    let ps = Arc::new(PrimitiveSet::new(d));
    let tree = loop {
        let t = ramped_half_and_half(&mut *rng, (0, 3), &ps);
        if t.len() <= 9 {
            break t;
        }
    };
    let mut dst = relax(&tree, ps, &InitConfig::default());
    let params: Vec<f64> = (0..dst.n_params())
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    dst.set_params(&params);
    let n = rng.random_range(2..=8);
    let xs: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    Case { dst, xs, ys }
}

fn loss_at(case: &Case, params: &[f64], cfg: &LossConfig) -> f64 {
    let mut dst = case.dst.clone();
    dst.set_params(params);
    let xr: Vec<&[f64]> = case.xs.iter().map(|x| x.as_slice()).collect();
    total_loss(&dst, &xr, &case.ys, cfg).unwrap().total
}

/// Largest violation of `|a - fd| <= max(1e-4 * max(|a|, |fd|), 1e-6)`
/// reported as a ratio (<= 1 means pass).
fn check_case(case: &Case, cfg: &LossConfig) -> f64 {
    let xr: Vec<&[f64]> = case.xs.iter().map(|x| x.as_slice()).collect();
    let lt = record_loss(&case.dst, &xr, &case.ys, cfg, Tape::new()).unwrap();
    let g = backward(&lt);
    let analytic: Vec<f64> = g.node.iter().chain(g.edge.iter()).copied().collect();
    let base = case.dst.params();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for k in 0..base.len() {
        let mut p = base.clone();
        p[k] = base[k] + h;
        let up = loss_at(case, &p, cfg);
        p[k] = base[k] - h;
        let down = loss_at(case, &p, cfg);
        let fd = (up - down) / (2.0 * h);
        let a = analytic[k];
        let allowed = (1e-4 * a.abs().max(fd.abs())).max(1e-6);
        worst = worst.max((a - fd).abs() / allowed);
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    let cfg = LossConfig::default();
    let mut failures = Vec::new();
    for seed in 0..120u64 {
        let case = random_case(seed);
        let r = check_case(&case, &cfg);
        if r > 1.0 {
            failures.push((seed, r, case.dst.tree.to_string()));
        }
    }
    assert!(failures.is_empty(), "gradcheck failures: {failures:?}");
}

#[test]
fn sigmoid_gradient_at_zero_edge_logit() {
    // single edge at logit 0: d sigma / dv = 0.25 enters the chain rule
    let case = {
        let mut c = random_case(7);
        let mut p = c.dst.params();
        let n_node = c.dst.node_matrix.logits().len();
        for v in &mut p[n_node..] {
            *v = 0.0;
        }
        c.dst.set_params(&p);
        c
    };
    assert!(check_case(&case, &LossConfig::default()) <= 1.0);
}

#[test]
fn loss01_gradient_is_symmetric_for_tied_entries() {
    let ps = Arc::new(PrimitiveSet::new(2));
    let tree = dgp_core::expr::parse_tree("x0").unwrap();
    let dst = relax(&tree, ps, &InitConfig::default());
    let xs = [vec![0.1, 0.2], vec![0.5, -0.3]];
    let xr: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
    // penalty-only gradient: difference of the lambda=1 and lambda=0 runs
    let t2 = dst.clone();
    let g = {
        let lt = record_loss(&t2, &xr, &[0.1, 0.5], &LossConfig { lambda_01: 1.0 }, Tape::new()).unwrap();
        let lt0 = record_loss(&t2, &xr, &[0.1, 0.5], &LossConfig { lambda_01: 0.0 }, Tape::new()).unwrap();
        let a = backward(&lt).node;
        let b = backward(&lt0).node;
        a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<f64>>()
    };
    // columns 0..9 are functions; x1 (column 10) also shares logit 0
    for j in 1..9 {
        assert!((g[j] - g[0]).abs() < 1e-15, "column {j}: {} vs {}", g[j], g[0]);
    }
    assert!((g[10] - g[0]).abs() < 1e-15);
}
