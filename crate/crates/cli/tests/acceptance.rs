//! End-to-end acceptance checks. Runs as a plain binary so every check
//! prints a PASS/FAIL line; exits non-zero if any check fails.

use dgp_core::data::{synthetic_trial, Dataset, NoiseSpec, SyntheticBenchmark, SyntheticSpec};
use dgp_core::dst::{forward, relax, DiffSymbolicTree, InitConfig};
use dgp_core::engine::{canonical_gp_run, dgp_run, EngineConfig, RunResult};
use dgp_core::expr::{evaluate_tree, random_tree, ramped_half_and_half, simplify, Caps, GenMethod, PrimitiveSet, SymbolicTree};
use dgp_core::grad::{backward, loss_01, nrmse, record_loss, total_loss, LossConfig, Tape};
use dgp_core::metrics::r2;
use dgp_core::sampler::{crossover_one_point, expand, mutate_uniform, replace, sample_tree, shrink, GeneticConfig, SampleConfig};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

const SEEDS: u64 = 10;

// -- 1: gradients ----------------------------------------------------------

fn grad_case(seed: u64) -> (DiffSymbolicTree, Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let d = rng.random_range(1..=3);
        let ps = Arc::new(PrimitiveSet::new(d));
        let tree = loop {
            let t = ramped_half_and_half(&mut rng, (0, 3), &ps);
            if t.len() <= 9 {
                break t;
            }
        };
        let mut dst = relax(&tree, ps, &InitConfig::default());
        let p: Vec<f64> = (0..dst.n_params()).map(|_| rng.random_range(-2.0..2.0)).collect();
        dst.set_params(&p);
        let n = rng.random_range(1..=8);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let xr: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        // f64 differences cannot resolve gradients of astronomically large losses
        match total_loss(&dst, &xr, &ys, &LossConfig::default()) {
            Ok(l) if l.total < 1e6 => return (dst, xs, ys),
            _ => continue,
        }
    }
}

fn criterion_1() -> Outcome {
    let cfg = LossConfig::default();
    let mut worst: f64 = 0.0;
    let mut params = 0;
    for seed in 0..120 {
        let (dst, xs, ys) = grad_case(1000 + seed);
        let xr: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        let g = backward(&record_loss(&dst, &xr, &ys, &cfg, Tape::new()).unwrap());
        let analytic: Vec<f64> = g.node.iter().chain(&g.edge).copied().collect();
        let base = dst.params();
        let loss = |p: &[f64]| {
            let mut d = dst.clone();
            d.set_params(p);
            total_loss(&d, &xr, &ys, &cfg).unwrap().total
        };
        let h = 1e-5;
        for k in 0..base.len() {
            let mut p = base.clone();
            p[k] += h;
            let up = loss(&p);
            p[k] = base[k] - h;
            let fd = (up - loss(&p)) / (2.0 * h);
            let a = analytic[k];
            worst = worst.max((a - fd).abs() / (1e-4 * a.abs().max(fd.abs())).max(1e-6));
            params += 1;
        }
    }
    outcome(worst <= 1.0, format!("120 cases, {params} parameters, worst error/tolerance {worst:.3}"))
}

// -- 2: relaxation limit ---------------------------------------------------

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let init = InitConfig {
        hot_logit: 40.0,
        edge_logit: 40.0,
        ..InitConfig::default()
    };
    let mut worst = (0.0f64, String::new());
    let mut violations = 0;
    for _ in 0..200 {
        let d = rng.random_range(1..=3);
        let ps = Arc::new(PrimitiveSet::new(d));
        let t = ramped_half_and_half(&mut rng, (0, 4), &ps);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let truth = evaluate_tree(&t, &x);
        let got = forward(&relax(&t, ps, &init), &x).output;
        let ratio = (got - truth).abs() / (1e-3 * (1.0 + truth.abs()));
        violations += (ratio > 1.0) as u32;
        if ratio > worst.0 {
            worst = (ratio, format!("{t} at {x:.3?}: {got:.6} vs {truth:.6}"));
        }
    }
    outcome(
        violations == 0,
        format!("200 pairs, {violations} outside tolerance, worst error/tolerance {:.2e} for {}", worst.0, worst.1),
    )
}

// -- 3: cold sampling ------------------------------------------------------

fn criterion_3() -> Outcome {
    let cold = SampleConfig { temperature: 1e-3 };
    let caps = Caps::default();
    let mut same = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ps = Arc::new(PrimitiveSet::new(rng.random_range(1..=3)));
        let t = ramped_half_and_half(&mut rng, (1, 4), &ps);
        let dst = relax(&t, ps, &InitConfig::default());
        same += (sample_tree(&dst, &mut rng, &cold, &caps) == t) as u32;
    }
    outcome(same == 100, format!("{same}/100 trees reproduced"))
}

// -- 4: structure ----------------------------------------------------------

/// Structural check written against the raw node table.
fn sound(t: &SymbolicTree, caps: &Caps) -> bool {
    let nodes = t.nodes();
    if nodes.is_empty() || nodes.len() > caps.max_nodes {
        return false;
    }
    if nodes.iter().filter(|n| n.parent.is_none()).count() != 1 || nodes[0].parent.is_some() {
        return false;
    }
    for (i, n) in nodes.iter().enumerate() {
        if n.children.len() != n.primitive.arity() {
            return false;
        }
        if n.children.iter().any(|&c| c >= nodes.len() || nodes[c].parent != Some(i)) {
            return false;
        }
    }
    // every node reachable from the root, depth within cap
    let mut seen = vec![false; nodes.len()];
    let mut stack = vec![(0usize, 0usize)];
    let mut max_depth = 0;
    while let Some((i, depth)) = stack.pop() {
        if seen[i] {
            return false;
        }
        seen[i] = true;
        max_depth = max_depth.max(depth);
        stack.extend(nodes[i].children.iter().map(|&c| (c, depth + 1)));
    }
    seen.iter().all(|&s| s) && max_depth <= caps.max_depth
}

fn criterion_4() -> Outcome {
    let caps = Caps::default();
    let gc = GeneticConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut ops, mut produced, mut bad) = (0u64, 0u64, 0u64);
    for _ in 0..10_000 {
        let ps = Arc::new(PrimitiveSet::new(rng.random_range(1..=3)));
        let funcs: Vec<_> = ps.generative_functions().collect();
        let all: Vec<_> = funcs.iter().copied().chain(ps.terminals()).collect();
        let mut t = ramped_half_and_half(&mut rng, (1, 4), &ps);
        for _ in 0..rng.random_range(1..=8) {
            ops += 1;
            let i = rng.random_range(0..t.len());
            let next = match rng.random_range(0..5) {
                0 => {
                    let dst = relax(&t, ps.clone(), &InitConfig::default());
                    shrink(&t, i, &dst.adjacency).ok()
                }
                1 => {
                    let arity = t.primitive(i).arity();
                    let same: Vec<_> = all.iter().filter(|p| p.arity() == arity).collect();
                    replace(&t, i, **same.choose(&mut rng).unwrap()).ok()
                }
                2 => {
                    let p = *funcs.choose(&mut rng).unwrap();
                    expand(&t, i, p, &ps, &caps, &mut rng).ok()
                }
                3 => {
                    let other = random_tree(&mut rng, (0, 5), GenMethod::Grow, &ps);
                    Some(crossover_one_point(&t, &other, &mut rng, &caps).0)
                }
                _ => Some(mutate_uniform(&t, &mut rng, &gc, &ps, &caps)),
            };
            if let Some(n) = next {
                produced += 1;
                if !sound(&n, &caps) {
                    bad += 1;
                }
                t = n;
            }
        }
    }
    outcome(bad == 0, format!("10000 sequences, {ops} operations, {produced} trees, {bad} unsound"))
}

// -- 5: loss oracles -------------------------------------------------------

fn criterion_5() -> Outcome {
    let mut row = vec![0.0; 9];
    row[0] = 1.0;
    let l01 = loss_01(&row, 9);
    let nr = nrmse(&[0.0, 2.0], &[1.0, 1.0]).unwrap();
    let r = r2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
    let pass = (l01 + 0.25).abs() <= 1e-12 && (nr - 1.0).abs() <= 1e-12 && (r - 0.5).abs() <= 1e-12;
    outcome(pass, format!("loss_01 {l01}, nrmse {nr}, r2 {r}"))
}

// -- 6-9: desk-scale searches ----------------------------------------------

fn trial(bench: SyntheticBenchmark, level: f64, seed: u64) -> Dataset {
    let noise = NoiseSpec { level, ..NoiseSpec::default() };
    synthetic_trial(&SyntheticSpec::new(bench), &noise, 0, seed).unwrap()
}

fn runs(bench: SyntheticBenchmark, level: f64, gp: bool) -> (Vec<RunResult>, f64) {
    let t0 = Instant::now();
    let out = (0..SEEDS)
        .map(|seed| {
            let cfg = EngineConfig { seed, ..EngineConfig::desk() };
            let ds = trial(bench, level, seed);
            if gp { canonical_gp_run(&ds, &cfg) } else { dgp_run(&ds, &cfg) }.unwrap()
        })
        .collect();
    (out, t0.elapsed().as_secs_f64())
}

fn recovered(bench: SyntheticBenchmark, rs: &[RunResult]) -> usize {
    rs.iter().filter(|r| bench.is_recovered(&r.best_tree, r.seed)).count()
}

fn mean_test_rmse(rs: &[RunResult]) -> f64 {
    rs.iter().map(|r| r.test_metrics.rmse.unwrap()).sum::<f64>() / rs.len() as f64
}

// -- 10: CLI determinism ---------------------------------------------------

fn strip_wall_time(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("wall_time");
            m.values_mut().for_each(strip_wall_time);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_wall_time),
        _ => {}
    }
}

fn dgp(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_dgp")).arg("--quiet").args(args).output().unwrap();
    assert!(out.status.success(), "dgp {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

/// Every file under `dir`, JSON with wall times removed, others verbatim.
fn snapshot(dir: &Path) -> Vec<(String, String)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let text = std::fs::read_to_string(&p).unwrap();
            let body = if p.extension().is_some_and(|x| x == "json") {
                let mut v: Value = serde_json::from_str(&text).unwrap();
                strip_wall_time(&mut v);
                v.to_string()
            } else {
                text
            };
            files.push((p.strip_prefix(dir).unwrap().display().to_string(), body));
        }
    }
    files.sort();
    files
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let csv = root.join("data.csv");
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut text = String::from("a,b,y\n");
    for _ in 0..24 {
        let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        text += &format!("{a},{b},{}\n", a * b + a.sin());
    }
    std::fs::write(&csv, text).unwrap();
    let cfg = root.join("run.toml");
    std::fs::write(
        &cfg,
        "[engine]\npopulation_size = 20\nmax_evaluations = 2000\nsamples_per_dst = 5\n[train]\nepochs = 40\n[genetic]\ngenerations_per_iteration = 5\n",
    )
    .unwrap();
    let (csv, cfg) = (csv.to_str().unwrap(), cfg.to_str().unwrap());
    let mut same = Vec::new();
    for k in 0..2 {
        let out = root.join(format!("run{k}"));
        let o = out.to_str().unwrap();
        dgp(&["fit", "--data", csv, "--config", cfg, "--seed", "3", "--out", &format!("{o}/fit/dgp.json")]);
        dgp(&["fit", "--data", csv, "--config", cfg, "--seed", "3", "--method", "gp", "--out", &format!("{o}/fit/gp.json")]);
        dgp(&["synth", "--bench", "S4", "--trials", "2", "--noise", "0.05", "--config", cfg, "--seed", "1", "--out", &format!("{o}/synth")]);
        let eval = dgp(&["eval", "--expr", "(+ (* x0 x1) (sin x0))", "--data", csv]).stdout;
        std::fs::write(out.join("eval.txt"), eval).unwrap();
        same.push(snapshot(&out));
    }
    let files = same[0].len();
    let pass = files == 7 && same[0] == same[1];
    outcome(pass, format!("fit, synth and eval run twice: {files} artifacts, identical apart from wall time: {}", same[0] == same[1]))
}

fn main() {
    // `cargo test -- <filter>` passes arguments; only run on an empty filter or a match
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    if filter.as_deref().is_some_and(|f| !"acceptance".contains(f)) {
        return;
    }
    let mut failed = 0;
    let mut report = |n: u32, name: &str, t0: Instant, o: Outcome| {
        let status = if o.pass { "PASS" } else { "FAIL" };
        failed += !o.pass as u32;
        println!("criterion {n:>2} {status} {name}: {} ({:.1}s)", o.detail, t0.elapsed().as_secs_f64());
    };

    let t = Instant::now();
    report(1, "gradient check", t, criterion_1());
    let t = Instant::now();
    report(2, "relaxation limit", t, criterion_2());
    let t = Instant::now();
    report(3, "cold sampling identity", t, criterion_3());
    let t = Instant::now();
    report(4, "structural soundness", t, criterion_4());
    let t = Instant::now();
    report(5, "loss oracles", t, criterion_5());

    use SyntheticBenchmark::{S1, S4};
    let t = Instant::now();
    let (s4, secs) = runs(S4, 0.0, false);
    let n = recovered(S4, &s4);
    report(6, "S4 recovery", t, outcome(n >= 6 && secs < 600.0, format!("{n}/10 recovered in {secs:.0}s (need >= 6 within 600s)")));

    let t = Instant::now();
    let (s1_dgp, _) = runs(S1, 0.0, false);
    let (s1_gp, _) = runs(S1, 0.0, true);
    let (a, b) = (recovered(S1, &s1_dgp), recovered(S1, &s1_gp));
    report(7, "S1 DGP vs GP", t, outcome(a >= b, format!("DGP {a}/10, GP {b}/10")));

    let t = Instant::now();
    let (s1_noisy, _) = runs(S1, 0.1, false);
    let (clean, noisy) = (mean_test_rmse(&s1_dgp), mean_test_rmse(&s1_noisy));
    report(8, "noise degradation", t, outcome(noisy >= clean, format!("mean test RMSE {clean:.4e} at 0, {noisy:.4e} at 0.1")));

    let t = Instant::now();
    let sizes: Vec<usize> = s4
        .iter()
        .filter(|r| S4.is_recovered(&r.best_tree, r.seed))
        .map(|r| simplify(&r.best_tree).len())
        .collect();
    let ok = !sizes.is_empty() && sizes.iter().all(|&s| s <= 15);
    report(9, "recovered S4 size", t, outcome(ok, format!("sizes {sizes:?} (need <= 15)")));

    let t = Instant::now();
    report(10, "CLI determinism", t, criterion_10());

    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
