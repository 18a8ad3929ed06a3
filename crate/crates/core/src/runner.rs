//! Single runs, parallel batches, and the trace CSV format.
//!
//! A trace file is `header LF (record LF)*` with the header
//! `iteration,best_fitness,msd,alpha1,alpha2,omega`. Reals are written in
//! their shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::AdaptiveConfig;
use crate::engine::Engine;
use crate::swarm::{InertiaSchedule, PsoParams, SwarmConfig};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "iteration,best_fitness,msd,alpha1,alpha2,omega";
pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based; record `t` is the state after iteration `t`.
    pub iteration: usize,
    pub best_fitness: f64,
    pub msd: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub config: SwarmConfig,
    pub params_initial: PsoParams,
    pub adaptive: Option<AdaptiveConfig>,
    pub seed: u64,
    pub initial_best_fitness: f64,
    pub initial_msd: f64,
    pub records: Vec<IterationRecord>,
    pub warnings: Vec<String>,
    /// Set when an evaluation failed; `records` then stops short.
    pub error: Option<String>,
}

impl RunTrace {
    pub fn final_best_fitness(&self) -> f64 {
        self.records.last().map_or(self.initial_best_fitness, |r| r.best_fitness)
    }

    pub fn final_msd(&self) -> f64 {
        self.records.last().map_or(self.initial_msd, |r| r.msd)
    }

    pub fn best_curve(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best_fitness).collect()
    }

    pub fn msd_curve(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.msd).collect()
    }
}

/// Runs `config.iterations` iterations. Configuration problems are errors;
/// a failed objective evaluation ends the run early and is kept in the trace.
pub fn run_single(config: &SwarmConfig, params: &PsoParams, adaptive: Option<&AdaptiveConfig>) -> Result<RunTrace> {
    let mut engine = Engine::new(config.clone(), *params, adaptive.copied())?;
    let mut trace = RunTrace {
        config: config.clone(),
        params_initial: *params,
        adaptive: adaptive.copied(),
        seed: config.seed,
        initial_best_fitness: engine.best_fitness(),
        initial_msd: engine.initial_msd(),
        records: Vec::with_capacity(config.iterations),
        warnings: Vec::new(),
        error: None,
    };
    while !engine.is_finished() {
        match engine.step() {
            Ok(r) => trace.records.push(r),
            Err(e @ Error::Evaluation { .. }) => {
                trace.error = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    trace.warnings = engine.take_warnings();
    Ok(trace)
}

/// `config` with the seed of run `index`.
pub fn run_config(config: &SwarmConfig, index: usize) -> SwarmConfig {
    SwarmConfig {
        seed: config.seed.wrapping_add(index as u64),
        ..config.clone()
    }
}

fn pool(n_workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_workers(n_workers))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// `0` means one worker per available hardware thread.
pub fn resolve_workers(n_workers: usize) -> usize {
    if n_workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        n_workers
    }
}

/// Runs `n_runs` seeds in memory, in index order.
pub fn run_many(
    config: &SwarmConfig,
    params: &PsoParams,
    adaptive: Option<&AdaptiveConfig>,
    n_runs: usize,
    n_workers: usize,
) -> Result<Vec<RunTrace>> {
    pool(n_workers)?.install(|| {
        (0..n_runs)
            .into_par_iter()
            .map(|i| run_single(&run_config(config, i), params, adaptive))
            .collect()
    })
}

/// `swarm_000.csv`, widening past three digits when `n_runs` needs it.
pub fn batch_file_name(index: usize, n_runs: usize) -> String {
    let digits = n_runs.saturating_sub(1).max(1).to_string().len();
    format!("swarm_{index:0width$}.csv", width = digits.max(3))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRun {
    pub index: usize,
    pub seed: u64,
    pub file: PathBuf,
    pub final_best_fitness: f64,
    pub final_msd: f64,
    pub iterations: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub runs: Vec<BatchRun>,
    pub manifest: PathBuf,
}

impl BatchSummary {
    pub fn files(&self) -> Vec<PathBuf> {
        self.runs.iter().map(|r| r.file.clone()).collect()
    }

    pub fn final_fitness(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.final_best_fitness).collect()
    }
}

fn check_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".psolab-write-check");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

/// Runs `n_runs` seeds (`config.seed + index`) on up to `n_workers` threads
/// and writes one trace per run plus `manifest.csv` into `out_dir`. The
/// bytes written do not depend on the worker count.
pub fn run_batch(
    config: &SwarmConfig,
    params: &PsoParams,
    adaptive: Option<&AdaptiveConfig>,
    n_runs: usize,
    out_dir: &Path,
    n_workers: usize,
) -> Result<BatchSummary> {
    if n_runs == 0 {
        return Err(Error::Config("a batch needs at least one run".into()));
    }
    // Fail on a bad configuration before touching the file system.
    Engine::new(config.clone(), *params, adaptive.copied())?;
    check_writable(out_dir)?;

    let runs = pool(n_workers)?.install(|| {
        (0..n_runs)
            .into_par_iter()
            .map(|index| {
                let cfg = run_config(config, index);
                let trace = run_single(&cfg, params, adaptive)?;
                let file = out_dir.join(batch_file_name(index, n_runs));
                dump_csv(&trace, &file)?;
                Ok(BatchRun {
                    index,
                    seed: cfg.seed,
                    file,
                    final_best_fitness: trace.final_best_fitness(),
                    final_msd: trace.final_msd(),
                    iterations: trace.records.len(),
                    error: trace.error,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let manifest = out_dir.join(MANIFEST_FILE);
    fs::write(&manifest, manifest_csv(config, params, adaptive, &runs)).map_err(|e| Error::io(&manifest, e))?;
    Ok(BatchSummary { runs, manifest })
}

fn manifest_csv(config: &SwarmConfig, params: &PsoParams, adaptive: Option<&AdaptiveConfig>, runs: &[BatchRun]) -> String {
    let mut out = String::from(
        "run,seed,file,variant,objective,particles,dims,iterations,boundary_radius,\
         alpha1,alpha2,omega,inertia_schedule,epsilon,metric,rule,final_best_fitness,final_msd,completed,error\n",
    );
    let (eps, metric, rule) = match adaptive {
        Some(a) => (fmt_real(a.epsilon), a.metric.to_string(), a.rule.to_string()),
        None => Default::default(),
    };
    for r in runs {
        let file = r.file.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        // Error text may hold commas; it is the last column and quoted.
        let error = r.error.as_deref().map(|e| format!("\"{}\"", e.replace('"', "\"\""))).unwrap_or_default();
        let schedule = match params.inertia_schedule {
            InertiaSchedule::Constant => "constant",
            InertiaSchedule::Linear => "linear",
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.index,
            r.seed,
            file,
            config.variant,
            config.objective,
            config.n_particles,
            config.dims,
            config.iterations,
            fmt_real(config.boundary_radius),
            fmt_real(params.alpha1),
            fmt_real(params.alpha2),
            fmt_real(params.omega),
            schedule,
            eps,
            metric,
            rule,
            fmt_real(r.final_best_fitness),
            fmt_real(r.final_msd),
            r.iterations,
            error
        )
        .expect("writing to a String");
    }
    out
}

/// Shortest decimal that parses back to the same `f64`; exponent form for
/// very large or very small magnitudes.
pub fn fmt_real(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn write_csv(records: &[IterationRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.iteration,
            fmt_real(r.best_fitness),
            fmt_real(r.msd),
            fmt_real(r.alpha1),
            fmt_real(r.alpha2),
            fmt_real(r.omega)
        )
        .expect("writing to a String");
    }
    out
}

pub fn dump_csv(trace: &RunTrace, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(write_csv(&trace.records).as_bytes()).map_err(|e| Error::io(path, e))
}

/// Parses a trace file; `path` only labels errors.
pub fn parse_csv(text: &str, path: &Path) -> Result<Vec<IterationRecord>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    if text.is_empty() {
        return Err(err(1, "empty file, expected a header".into()));
    }
    let mut lines = text.split_inclusive('\n').enumerate().map(|(i, l)| (i + 1, l));
    let mut records = Vec::new();
    while let Some((no, raw)) = lines.next() {
        let Some(line) = raw.strip_suffix('\n') else {
            return Err(err(no, "unterminated line, file looks truncated".into()));
        };
        if no == 1 {
            if line != CSV_HEADER {
                return Err(err(1, format!("expected header `{CSV_HEADER}`")));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(err(no, format!("expected 6 fields, found {}", fields.len())));
        }
        let iteration = fields[0]
            .parse::<usize>()
            .map_err(|e| err(no, format!("bad iteration `{}`: {e}", fields[0])))?;
        let mut reals = [0.0; 5];
        for (slot, (name, text)) in reals.iter_mut().zip(CSV_HEADER.split(',').skip(1).zip(&fields[1..])) {
            *slot = text.parse::<f64>().map_err(|e| err(no, format!("bad {name} `{text}`: {e}")))?;
        }
        let [best_fitness, msd, alpha1, alpha2, omega] = reals;
        records.push(IterationRecord {
            iteration,
            best_fitness,
            msd,
            alpha1,
            alpha2,
            omega,
        });
    }
    Ok(records)
}

pub fn read_csv(path: &Path) -> Result<Vec<IterationRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path)
}
