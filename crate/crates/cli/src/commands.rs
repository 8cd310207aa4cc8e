use crate::config::RunConfig;
use anyhow::{bail, Context, Result};
use dgp_core::data::{load_csv, split, synthetic_trial, NoiseSpec, SyntheticBenchmark, SyntheticSpec, NOISE_GRID};
use dgp_core::engine::{canonical_gp_run, dgp_run, RunResult};
use dgp_core::expr::{evaluate_tree, simplify};
use dgp_core::grad::nrmse;
use dgp_core::metrics::{aggregate, r2, rmse, write_aggregate_csv, write_trials_csv, TrialRecord};
use dgp_core::seed::derived_rng;
use dgp_core::{parse_tree, Dataset, DgpError};
use rayon::prelude::*;
use serde::Serialize;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

const STREAM_SPLIT: u64 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dgp,
    Gp,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Dgp => "dgp",
            Method::Gp => "gp",
        }
    }

    fn run(self, ds: &Dataset, cfg: &RunConfig) -> dgp_core::Result<RunResult> {
        let engine = cfg.engine_config();
        match self {
            Method::Dgp => dgp_run(ds, &engine),
            Method::Gp => canonical_gp_run(ds, &engine),
        }
    }
}

#[derive(Serialize)]
struct DataInfo {
    source: String,
    target: String,
    variables: Vec<String>,
    n_train: usize,
    n_test: usize,
    noise: f64,
}

impl DataInfo {
    fn of(ds: &Dataset, source: String, noise: f64) -> Self {
        Self {
            source,
            target: ds.target_name().to_string(),
            variables: ds.variable_names().to_vec(),
            n_train: ds.train_indices().len(),
            n_test: ds.test_indices().len(),
            noise,
        }
    }
}

/// One run's artifact: enough to reproduce it exactly.
#[derive(Serialize)]
struct Artifact<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    method: Method,
    seed: u64,
    config: &'a RunConfig,
    data: DataInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    recovered: Option<bool>,
    result: &'a RunResult,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    use std::io::Write;
    writeln!(w)?;
    Ok(())
}

pub struct FitArgs {
    pub data: PathBuf,
    pub target: Option<String>,
    pub config: RunConfig,
    pub method: Method,
    pub out: PathBuf,
    pub quiet: bool,
}

pub fn fit(a: FitArgs) -> Result<()> {
    let cfg = &a.config;
    let seed = cfg.engine.seed;
    let ds = load_csv(&a.data, a.target.as_deref())?;
    if ds.target_is_constant() {
        eprintln!("warning: target column `{}` is constant", ds.target_name());
    }
    let ds = split(ds, cfg.data.train_fraction, &mut derived_rng(seed, &[STREAM_SPLIT]))?;
    if !a.quiet {
        eprintln!(
            "fit {}: {} train / {} test rows, method {}, seed {seed}",
            a.data.display(),
            ds.train_indices().len(),
            ds.test_indices().len(),
            a.method.name()
        );
    }
    let result = a.method.run(&ds, cfg)?;
    if !a.quiet {
        eprintln!(
            "best {} (train nrmse {:.4e}, {} evaluations, {:.1}s)",
            result.best_tree, result.best_train_nrmse, result.evaluations_used, result.wall_time
        );
    }
    let artifact = Artifact {
        tool: "dgp",
        version: dgp_core::VERSION,
        command: "fit",
        method: a.method,
        seed,
        config: cfg,
        data: DataInfo::of(&ds, a.data.display().to_string(), 0.0),
        recovered: None,
        result: &result,
    };
    write_json(&a.out, &artifact)
}

pub struct SynthArgs {
    pub bench: SyntheticBenchmark,
    pub trials: u64,
    pub noise: Option<f64>,
    pub noise_sweep: bool,
    pub method: Method,
    pub config: RunConfig,
    pub out: PathBuf,
    pub quiet: bool,
}

fn trial_record(bench: SyntheticBenchmark, r: &RunResult) -> TrialRecord {
    TrialRecord {
        seed: r.seed,
        test_r2: r.test_metrics.r2.unwrap_or(f64::NAN),
        test_rmse: r.test_metrics.rmse.unwrap_or(f64::NAN),
        recovered: bench.is_recovered(&r.best_tree, r.seed),
        program_size: r.program_size,
    }
}

pub fn synth(a: SynthArgs) -> Result<()> {
    if a.trials == 0 {
        bail!("--trials must be >= 1");
    }
    let levels: Vec<f64> = if a.noise_sweep {
        NOISE_GRID.to_vec()
    } else {
        vec![a.noise.unwrap_or(a.config.noise.level)]
    };
    for &l in &levels {
        if !(l >= 0.0 && l.is_finite()) {
            bail!("noise level must be a finite value >= 0, got {l}");
        }
    }
    let base_seed = a.config.engine.seed;
    let spec = SyntheticSpec {
        benchmark: a.bench,
        points: a.config.data.points,
        trials: a.config.data.trials,
    };
    fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    let method = a.method.name();
    let mut summaries = Vec::new();
    let mut per_seed = Vec::new();
    for &level in &levels {
        let noise = NoiseSpec {
            level,
            ..a.config.noise
        };
        let mut config = a.config.clone();
        config.noise = noise;
        let records: Vec<TrialRecord> = (0..a.trials)
            .into_par_iter()
            .map(|i| -> Result<TrialRecord> {
                let seed = base_seed.wrapping_add(i);
                let ds = synthetic_trial(&spec, &noise, base_seed, i)?;
                let result = a.method.run(&ds, &config.clone().with_seed(Some(seed)))?;
                let rec = trial_record(a.bench, &result);
                let artifact = Artifact {
                    tool: "dgp",
                    version: dgp_core::VERSION,
                    command: "synth",
                    method: a.method,
                    seed,
                    config: &config,
                    data: DataInfo::of(&ds, a.bench.to_string(), level),
                    recovered: Some(rec.recovered),
                    result: &result,
                };
                let name = format!("{}-{method}-noise{level}-seed{seed}.json", a.bench);
                write_json(&a.out.join("trials").join(name), &artifact)?;
                if !a.quiet {
                    eprintln!(
                        "{} {method} noise {level} seed {seed}: {} recovered={} size={} ({:.1}s)",
                        a.bench, result.best_tree, rec.recovered, rec.program_size, result.wall_time
                    );
                }
                Ok(rec)
            })
            .collect::<Result<_>>()?;
        let summary = aggregate(&records);
        if !a.quiet {
            eprintln!(
                "{} {method} noise {level}: recovery {}%, test rmse mean {:.4e}, size mean {:.1}",
                a.bench, summary.recovery_rate, summary.test_rmse.mean, summary.program_size.mean
            );
        }
        for t in &summary.trials {
            per_seed.push((a.bench.to_string(), method.to_string(), level, t.clone()));
        }
        summaries.push((a.bench.to_string(), method.to_string(), level, summary));
    }
    write_aggregate_csv(File::create(a.out.join("aggregate.csv"))?, &summaries)?;
    write_trials_csv(File::create(a.out.join("trials.csv"))?, &per_seed)?;
    Ok(())
}

pub fn eval(expr: &str, data: &Path, target: Option<&str>) -> Result<()> {
    let tree = parse_tree(expr)?;
    let ds = load_csv(data, target)?;
    if let Some(v) = tree.max_var().filter(|&v| v >= ds.n_vars()) {
        return Err(DgpError::UnknownVariable {
            index: v,
            n_vars: ds.n_vars(),
        }
        .into());
    }
    let pred: Vec<f64> = ds.x().iter().map(|x| evaluate_tree(&tree, x)).collect();
    let y = ds.y();
    println!("r2 {}", r2(y, &pred)?);
    println!("rmse {}", rmse(y, &pred));
    println!("nrmse {}", nrmse(y, &pred)?);
    println!("size {}", simplify(&tree).len());
    Ok(())
}
