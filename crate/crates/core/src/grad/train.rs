use super::adam::{adam_step, AdamConfig, AdamState};
use super::loss::{check_target, LossConfig, LossParts, NONFINITE_SENTINEL};
use super::tape::{Tape, Var};
use crate::dst::{forward_sample, Algebra, DiffSymbolicTree, Plan};
use crate::{DgpError, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Samples per batch; `None` uses `min(n_train, 256)`.
    pub batch_size: Option<usize>,
    pub batches_per_epoch: usize,
    pub lr_node: f64,
    pub lr_edge: f64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            batch_size: None,
            batches_per_epoch: 1,
            lr_node: 0.005,
            lr_edge: 0.005,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn effective_batch(&self, n_train: usize) -> usize {
        self.batch_size.unwrap_or(256).min(n_train).max(1)
    }
}

/// A recorded forward + loss pass, ready for [`backward`].
pub struct LossTape {
    pub tape: Tape,
    pub parts: LossParts,
    node_vars: Vec<Var>,
    edge_vars: Vec<Var>,
    loss: Var,
}

/// Gradients of the total loss.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    /// Row-major, shaped like the node matrix.
    pub node: Vec<f64>,
    /// One per node (the root entry is always 0).
    pub edge: Vec<f64>,
}

/// Records the forward pass over a batch and the composite loss on `tape`
/// (which is cleared first).
pub fn record_loss(
    dst: &DiffSymbolicTree,
    xs: &[&[f64]],
    ys: &[f64],
    cfg: &LossConfig,
    mut tape: Tape,
) -> Result<LossTape> {
    assert_eq!(xs.len(), ys.len(), "batch length mismatch");
    let sigma = check_target(ys)?;
    tape.clear();
    let node_vars: Vec<Var> = dst
        .node_matrix
        .logits()
        .iter()
        .map(|&v| tape.leaf(v))
        .collect();
    let edge_vars: Vec<Var> = dst
        .adjacency
        .logits()
        .iter()
        .map(|&v| tape.leaf(v))
        .collect();
    let plan = Plan::build(&mut tape, dst, &node_vars, &edge_vars);

    let mut squares = Vec::with_capacity(xs.len());
    for (x, &y) in xs.iter().zip(ys) {
        let mut pred = forward_sample(&mut tape, dst, &plan, x, None);
        if !tape.value(pred).is_finite() {
            pred = tape.leaf(NONFINITE_SENTINEL);
        }
        let r = tape.offset(pred, -y);
        squares.push(tape.mul(r, r));
    }
    let sse = tape.sum(&squares);
    let mse = tape.scale(sse, 1.0 / xs.len() as f64);
    let rmse = tape.sqrt(mse);
    let nrmse = tape.scale(rmse, 1.0 / sigma);

    let l = dst.primitive_set.len();
    let k = dst.len();
    let mut pen = Vec::with_capacity(k * l);
    for &w in &plan.weights {
        let c = tape.offset(w, -0.5);
        pen.push(tape.mul(c, c));
    }
    let pen_sum = tape.sum(&pen);
    let loss01 = tape.scale(pen_sum, -1.0 / (l * k) as f64);
    let weighted = tape.scale(loss01, cfg.lambda_01);
    let loss = tape.add(nrmse, weighted);
    let parts = LossParts {
        nrmse: tape.value(nrmse),
        loss01: tape.value(loss01),
        total: tape.value(loss),
    };
    Ok(LossTape {
        tape,
        parts,
        node_vars,
        edge_vars,
        loss,
    })
}

/// Reverse sweep seeded with 1 at the loss.
pub fn backward(lt: &LossTape) -> Gradients {
    let adj = lt.tape.backward(lt.loss, 1.0);
    Gradients {
        node: lt.node_vars.iter().map(|v| adj[v.index()]).collect(),
        edge: lt.edge_vars.iter().map(|v| adj[v.index()]).collect(),
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Loss before each epoch's update (averaged over the epoch's batches).
    pub trajectory: Vec<LossParts>,
}

/// Trains node and edge logits in place with Adam.
///
/// Each epoch draws `batches_per_epoch` shuffled batches; every batch runs a
/// recorded forward pass, the composite loss, a reverse sweep and one Adam
/// step per parameter block.
pub fn train_dst<R: Rng + ?Sized>(
    dst: &mut DiffSymbolicTree,
    x: &[Vec<f64>],
    y: &[f64],
    tc: &TrainConfig,
    lc: &LossConfig,
    rng: &mut R,
) -> Result<TrainOutcome> {
    check_target(y)?;
    let n_b = tc.effective_batch(x.len());
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut node_state = AdamState::new(dst.node_matrix.logits().len());
    let mut edge_state = AdamState::new(dst.adjacency.logits().len());
    let mut tape = Tape::new();
    let mut trajectory = Vec::with_capacity(tc.epochs);
    let mut bx: Vec<&[f64]> = Vec::with_capacity(n_b);
    let mut by: Vec<f64> = Vec::with_capacity(n_b);
    let batches = tc.batches_per_epoch.max(1);

    for epoch in 0..tc.epochs {
        let mut acc = LossParts {
            nrmse: 0.0,
            loss01: 0.0,
            total: 0.0,
        };
        for _ in 0..batches {
            order.shuffle(rng);
            bx.clear();
            by.clear();
            for &i in &order[..n_b] {
                bx.push(&x[i]);
                by.push(y[i]);
            }
            let lt = record_loss(dst, &bx, &by, lc, tape)?;
            let g = backward(&lt);
            acc.nrmse += lt.parts.nrmse;
            acc.loss01 += lt.parts.loss01;
            acc.total += lt.parts.total;
            tape = lt.tape;
            adam_step(
                dst.node_matrix.logits_mut(),
                &g.node,
                &mut node_state,
                &tc.adam,
                tc.lr_node,
            );
            adam_step(
                dst.adjacency.logits_mut(),
                &g.edge,
                &mut edge_state,
                &tc.adam,
                tc.lr_edge,
            );
            if !dst.params_finite() {
                return Err(DgpError::NonFinite(format!(
                    "non-finite logits after epoch {epoch}"
                )));
            }
        }
        let b = batches as f64;
        trajectory.push(LossParts {
            nrmse: acc.nrmse / b,
            loss01: acc.loss01 / b,
            total: acc.total / b,
        });
    }
    Ok(TrainOutcome { trajectory })
}

/// Writes `epoch,nrmse,loss01,total` rows.
pub fn write_trajectory_csv<W: Write>(w: W, trajectory: &[LossParts]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["epoch", "nrmse", "loss01", "total"])?;
    for (e, p) in trajectory.iter().enumerate() {
        wtr.write_record([
            e.to_string(),
            p.nrmse.to_string(),
            p.loss01.to_string(),
            p.total.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dst::{relax, InitConfig};
    use crate::expr::{parse_tree, Primitive, PrimitiveSet};
    use crate::grad::total_loss;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn grid2(n: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        (0..n)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect()
    }

    #[test]
    fn taped_loss_matches_plain_loss() {
        let ps = Arc::new(PrimitiveSet::new(2));
        let t = parse_tree("(* (sin x0) (- x1 (exp x0)))").unwrap();
        let dst = relax(&t, ps, &InitConfig::default());
        let x = grid2(6);
        let y: Vec<f64> = x.iter().map(|r| r[0] + r[1]).collect();
        let xr: Vec<&[f64]> = x.iter().map(|r| r.as_slice()).collect();
        let cfg = LossConfig::default();
        let plain = total_loss(&dst, &xr, &y, &cfg).unwrap();
        let taped = record_loss(&dst, &xr, &y, &cfg, Tape::new()).unwrap().parts;
        assert!((plain.total - taped.total).abs() < 1e-12);
        assert!((plain.loss01 - taped.loss01).abs() < 1e-12);
    }

    #[test]
    fn identity_target_does_not_get_worse() {
        let ps = Arc::new(PrimitiveSet::new(1));
        let t = parse_tree("x0").unwrap();
        let mut dst = relax(&t, ps, &InitConfig::default());
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![-1.0 + 0.1 * i as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0]).collect();
        let tc = TrainConfig {
            epochs: 50,
            ..Default::default()
        };
        let out = train_dst(&mut dst, &x, &y, &tc, &LossConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let first = out.trajectory.first().unwrap().nrmse;
        let xr: Vec<&[f64]> = x.iter().map(|r| r.as_slice()).collect();
        let last = total_loss(&dst, &xr, &y, &LossConfig::default()).unwrap().nrmse;
        assert!(last <= first, "{last} > {first}");
    }

    #[test]
    fn learns_plus_from_minus() {
        let ps = Arc::new(PrimitiveSet::new(2));
        let t = parse_tree("(- x0 x1)").unwrap();
        let mut dst = relax(&t, ps.clone(), &InitConfig::default());
        let x = grid2(40);
        let y: Vec<f64> = x.iter().map(|r| r[0] + r[1]).collect();

        // oracle: one-hot + beats one-hot - on this data
        let sharp = InitConfig {
            hot_logit: 60.0,
            edge_logit: 60.0,
            ..Default::default()
        };
        let xr: Vec<&[f64]> = x.iter().map(|r| r.as_slice()).collect();
        let plus = total_loss(&relax(&parse_tree("(+ x0 x1)").unwrap(), ps.clone(), &sharp), &xr, &y, &LossConfig::default()).unwrap();
        let minus = total_loss(&relax(&t, ps.clone(), &sharp), &xr, &y, &LossConfig::default()).unwrap();
        assert!(plus.total < minus.total);

        let tc = TrainConfig {
            epochs: 1000,
            ..Default::default()
        };
        train_dst(&mut dst, &x, &y, &tc, &LossConfig::default(), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let w = dst.node_matrix.weights_row(0);
        let add = w[ps.column_of(Primitive::Add).unwrap()];
        let sub = w[ps.column_of(Primitive::Sub).unwrap()];
        assert!(add > sub, "add {add} sub {sub}");
    }

    #[test]
    fn training_is_deterministic() {
        let ps = Arc::new(PrimitiveSet::new(2));
        let t = parse_tree("(+ (sin x0) x1)").unwrap();
        let x = grid2(30);
        let y: Vec<f64> = x.iter().map(|r| r[0] * r[1]).collect();
        let tc = TrainConfig {
            epochs: 30,
            batch_size: Some(8),
            ..Default::default()
        };
        let run = || {
            let mut dst = relax(&t, ps.clone(), &InitConfig::default());
            let out = train_dst(&mut dst, &x, &y, &tc, &LossConfig::default(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
            (out.trajectory, dst.params())
        };
        let (a, pa) = run();
        let (b, pb) = run();
        assert_eq!(a, b);
        assert_eq!(pa, pb);
    }

    #[test]
    fn degenerate_target_is_an_error() {
        let ps = Arc::new(PrimitiveSet::new(1));
        let mut dst = relax(&parse_tree("x0").unwrap(), ps, &InitConfig::default());
        let x = vec![vec![1.0], vec![2.0], vec![3.0]];
        let err = train_dst(&mut dst, &x, &[5.0, 5.0, 5.0], &TrainConfig::default(), &LossConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(err.is_degenerate_target());
    }

    #[test]
    fn trajectory_csv() {
        let rows = vec![LossParts { nrmse: 1.0, loss01: -0.2, total: 0.98 }];
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &rows).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "epoch,nrmse,loss01,total\n0,1,-0.2,0.98\n");
    }
}
