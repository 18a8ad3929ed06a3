use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use psolab_core::analysis::mean_std;
use psolab_core::runner::{dump_csv, fmt_real, run_batch, run_single, write_csv};
use psolab_core::{
    AdaptiveConfig, DeltaMode, Error, InertiaSchedule, MetricId, ObjectiveId, PsoParams, RuleId, SwarmConfig, Variant,
};
use psolab_service::{ServeOptions, Server};

mod analyze;

#[derive(Parser)]
#[command(name = "psolab", version, about = "Particle swarm optimization laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one swarm and write its per-iteration trace as CSV.
    Run {
        #[command(flatten)]
        swarm: SwarmArgs,
        /// Trace file. Without it the CSV goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run many seeds in parallel and summarize the final fitness.
    Batch {
        #[command(flatten)]
        swarm: SwarmArgs,
        #[arg(long, default_value_t = 50)]
        runs: usize,
        #[arg(long)]
        out_dir: PathBuf,
        /// Worker threads; 0 uses every hardware thread.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Mean curves, increment histogram and power-law fit of trace files.
    Analyze(analyze::AnalyzeArgs),
    /// Serve the live-control protocol over TCP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        bind: SocketAddr,
        #[arg(long, default_value_t = 2)]
        sample_interval_ms: u64,
    },
}

#[derive(Args)]
struct SwarmArgs {
    #[arg(long, default_value = "standard")]
    variant: Variant,
    #[arg(long, default_value = "schwefel")]
    objective: ObjectiveId,
    #[arg(long, default_value_t = 20)]
    dims: usize,
    #[arg(long, default_value_t = 20)]
    particles: usize,
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
    /// Radius of the starting ball. Defaults per objective: Schwefel 500,
    /// Rastrigin 7.5, Griewank and sphere 100.
    #[arg(long)]
    boundary: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.494)]
    alpha1: f64,
    #[arg(long, default_value_t = 1.494)]
    alpha2: f64,
    #[arg(long, default_value_t = 0.729)]
    omega: f64,
    /// Decrease ω linearly from --omega-top to --omega-bottom.
    #[arg(long)]
    linear_inertia: bool,
    #[arg(long, default_value_t = 0.8)]
    omega_top: f64,
    #[arg(long, default_value_t = 0.4)]
    omega_bottom: f64,
    /// Per-component velocity limit.
    #[arg(long)]
    velocity_clamp: Option<f64>,
    /// Adaptive step size.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    metric: Option<MetricId>,
    #[arg(long)]
    rule: Option<RuleId>,
    #[arg(long)]
    delta_mode: Option<DeltaMode>,
}

fn default_radius(objective: ObjectiveId) -> f64 {
    match objective {
        ObjectiveId::Schwefel => 500.0,
        ObjectiveId::Rastrigin => 7.5,
        ObjectiveId::Griewank | ObjectiveId::Sphere => 100.0,
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Writes to stdout. A reader that went away early is not an error.
fn emit(text: &str) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

type Setup = (SwarmConfig, PsoParams, Option<AdaptiveConfig>);

impl SwarmArgs {
    fn setup(&self) -> Result<Setup, Failure> {
        let config = SwarmConfig {
            n_particles: self.particles,
            dims: self.dims,
            iterations: self.iters,
            boundary_radius: self.boundary.unwrap_or_else(|| default_radius(self.objective)),
            objective: self.objective,
            variant: self.variant,
            seed: self.seed,
            velocity_clamp: self.velocity_clamp,
        };
        let params = PsoParams {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            omega: self.omega,
            omega_top: self.omega_top,
            omega_bottom: self.omega_bottom,
            inertia_schedule: if self.linear_inertia { InertiaSchedule::Linear } else { InertiaSchedule::Constant },
        };
        let given = [
            ("--epsilon", self.epsilon.is_some()),
            ("--metric", self.metric.is_some()),
            ("--rule", self.rule.is_some()),
            ("--delta-mode", self.delta_mode.is_some()),
        ];
        let adaptive = if self.variant == Variant::Adaptive {
            let mut a = AdaptiveConfig::default();
            match self.epsilon {
                Some(e) => a.epsilon = e,
                None => eprintln!("warning: --epsilon not given, using {}", a.epsilon),
            }
            a.metric = self.metric.unwrap_or(a.metric);
            a.rule = self.rule.unwrap_or(a.rule);
            a.delta_mode = self.delta_mode.unwrap_or(a.delta_mode);
            Some(a)
        } else {
            if let Some((flag, _)) = given.iter().find(|(_, set)| *set) {
                return Err(Failure::Usage(format!("{flag} only applies to --variant adaptive")));
            }
            None
        };
        config.validate()?;
        params.validate_ui_bounds()?;
        Ok((config, params, adaptive))
    }
}

fn cmd_run(swarm: &SwarmArgs, out: Option<&PathBuf>) -> Result<(), Failure> {
    let (config, params, adaptive) = swarm.setup()?;
    let trace = run_single(&config, &params, adaptive.as_ref())?;
    for w in &trace.warnings {
        eprintln!("warning: {w}");
    }
    match out {
        Some(path) => dump_csv(&trace, path)?,
        None => emit(&write_csv(&trace.records))?,
    }
    let summary = format!(
        "final best fitness {}\nfinal msd {}\n",
        fmt_real(trace.final_best_fitness()),
        fmt_real(trace.final_msd())
    );
    // Keep stdout clean when it carries the CSV.
    if out.is_some() {
        emit(&summary)?;
    } else {
        eprint!("{summary}");
    }
    match trace.error {
        Some(e) => Err(Failure::Runtime(format!("run stopped after {} iterations: {e}", trace.records.len()))),
        None => Ok(()),
    }
}

fn cmd_batch(swarm: &SwarmArgs, runs: usize, out_dir: &PathBuf, workers: usize) -> Result<(), Failure> {
    let (config, params, adaptive) = swarm.setup()?;
    let summary = run_batch(&config, &params, adaptive.as_ref(), runs, out_dir, workers)?;
    let finals = summary.final_fitness();
    let (mean, std) = mean_std(&finals).expect("a batch has at least one run");
    let best = finals.iter().copied().fold(f64::INFINITY, f64::min);
    emit(&format!(
        "runs {}\nmean final fitness {}\nstddev final fitness {}\nbest final fitness {}\nmanifest {}\n",
        finals.len(),
        fmt_real(mean),
        fmt_real(std),
        fmt_real(best),
        summary.manifest.display()
    ))?;
    let failed: Vec<_> = summary.runs.iter().filter(|r| r.error.is_some()).collect();
    if failed.is_empty() {
        return Ok(());
    }
    for r in &failed {
        eprintln!("run {}: {}", r.index, r.error.as_deref().unwrap_or_default());
    }
    Err(Failure::Runtime(format!("{} of {} runs stopped early", failed.len(), finals.len())))
}

fn cmd_serve(bind: SocketAddr, sample_interval_ms: u64) -> Result<(), Failure> {
    if sample_interval_ms == 0 {
        return Err(Failure::Usage("--sample-interval-ms must be positive".into()));
    }
    let server = Server::bind(bind, ServeOptions { sample_interval: Duration::from_millis(sample_interval_ms) })
        .map_err(|e| Failure::Runtime(format!("cannot bind {bind}: {e}")))?;
    eprintln!("listening on {}", server.local_addr()?);
    server.run()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Cmd::Run { swarm, out } => cmd_run(swarm, out.as_ref()),
        Cmd::Batch { swarm, runs, out_dir, workers } => cmd_batch(swarm, *runs, out_dir, *workers),
        Cmd::Analyze(args) => analyze::run(args),
        Cmd::Serve { bind, sample_interval_ms } => cmd_serve(*bind, *sample_interval_ms),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
