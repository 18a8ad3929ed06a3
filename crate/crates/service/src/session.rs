//! The per-client state machine. It owns at most one engine and is driven by
//! one thread, so commands always land between two iterations.

use std::path::Path;

use psolab_core::analysis::{Histogram, DEFAULT_RANGE};
use psolab_core::runner::write_csv;
use psolab_core::{Engine, InertiaSchedule, IterationRecord, Variant};

use crate::protocol::{Command, ErrorKind, HistogramView, ParamValues, Phase, Snapshot};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct CommandError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CommandError {
    fn state(cmd: &Command, phase: Phase) -> Self {
        CommandError {
            kind: ErrorKind::State,
            message: format!("`{}` is not allowed while {}", cmd.name(), phase_name(phase)),
        }
    }

    fn invalid(e: impl ToString) -> Self {
        CommandError { kind: ErrorKind::Invalid, message: e.to_string() }
    }
}

fn phase_name(phase: Phase) -> &'static str {
    match phase {
        Phase::Idle => "idle",
        Phase::Ready => "ready",
        Phase::Running => "running",
        Phase::Paused => "paused",
        Phase::Finished => "finished",
    }
}

#[derive(Debug)]
pub struct Session {
    phase: Phase,
    engine: Option<Engine>,
    run: u64,
    records: Vec<IterationRecord>,
    last_msd: f64,
    histogram: Histogram,
    log_scale: bool,
    increments: u64,
    error: Option<String>,
}

impl Default for Session {
    fn default() -> Self {
        Session::new()
    }
}

impl Session {
    pub fn new() -> Self {
        Session {
            phase: Phase::Idle,
            engine: None,
            run: 0,
            records: Vec::new(),
            last_msd: 0.0,
            histogram: Histogram::default(),
            log_scale: false,
            increments: 0,
            error: None,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn engine(&self) -> Option<&Engine> {
        self.engine.as_ref()
    }

    /// Why the last run stopped early, if it did.
    pub fn run_error(&self) -> Option<&str> {
        self.error.as_deref()
    }

    /// Applies one command. The returned text, if any, goes into the ack.
    pub fn apply(&mut self, cmd: &Command) -> Result<Option<String>, CommandError> {
        use Phase::*;
        match (cmd, self.phase) {
            (Command::Configure { .. }, Running) => Err(CommandError::state(cmd, self.phase)),
            (Command::Configure { config, params, adaptive }, _) => {
                let engine = Engine::new(config.clone(), *params, *adaptive).map_err(CommandError::invalid)?;
                self.install(engine);
                Ok(None)
            }
            (Command::Start, Ready) => {
                self.phase = Running;
                Ok(None)
            }
            (Command::Pause, Running) => {
                self.phase = Paused;
                Ok(None)
            }
            (Command::Resume, Paused) => {
                self.phase = Running;
                Ok(None)
            }
            (Command::Reset, Ready | Running | Paused | Finished) => {
                let mut engine = self.engine.take().expect("configured phases hold an engine");
                engine.reset().map_err(CommandError::invalid)?;
                self.install(engine);
                Ok(None)
            }
            (Command::SetParam { name, value }, Ready | Running | Paused) => {
                let engine = self.engine.as_mut().expect("configured phases hold an engine");
                engine.set_param(*name, *value).map_err(CommandError::invalid)?;
                Ok(None)
            }
            (Command::SetHistogram { bin_size, log_scale }, _) => {
                let mut h = Histogram::new(*bin_size, DEFAULT_RANGE.0, DEFAULT_RANGE.1).map_err(CommandError::invalid)?;
                let mut previous = self.engine.as_ref().map_or(0.0, |e| e.initial_msd());
                for r in &self.records {
                    if r.msd > previous {
                        h.add(r.msd - previous);
                    }
                    previous = r.msd;
                }
                self.histogram = h;
                self.log_scale = *log_scale;
                Ok(None)
            }
            (Command::DumpStats { path }, Ready | Running | Paused | Finished) => {
                let path = Path::new(path);
                std::fs::write(path, write_csv(&self.records)).map_err(|e| CommandError {
                    kind: ErrorKind::Io,
                    message: format!("{}: {e}", path.display()),
                })?;
                Ok(Some(format!("{} records written to {}", self.records.len(), path.display())))
            }
            _ => Err(CommandError::state(cmd, self.phase)),
        }
    }

    fn install(&mut self, engine: Engine) {
        self.last_msd = engine.initial_msd();
        self.phase = if engine.is_finished() { Phase::Finished } else { Phase::Ready };
        self.engine = Some(engine);
        self.run += 1;
        self.records.clear();
        self.histogram.clear();
        self.increments = 0;
        self.error = None;
    }

    /// Runs one iteration if the session is running. Returns whether it did.
    pub fn tick(&mut self) -> bool {
        if self.phase != Phase::Running {
            return false;
        }
        let engine = self.engine.as_mut().expect("running sessions hold an engine");
        match engine.step() {
            Ok(record) => {
                if record.msd > self.last_msd {
                    self.histogram.add(record.msd - self.last_msd);
                    self.increments += 1;
                }
                self.last_msd = record.msd;
                self.records.push(record);
                if engine.is_finished() {
                    self.phase = Phase::Finished;
                }
            }
            Err(e) => {
                self.error = Some(e.to_string());
                self.phase = Phase::Finished;
            }
        }
        true
    }

    /// The latest state. Normalization of the histogram is left to the reader.
    pub fn snapshot(&self) -> Snapshot {
        let (iteration, iterations, best_fitness, params) = match &self.engine {
            Some(e) => {
                // A scheduled ω is reported as last used; otherwise the live value.
                let p = e.params();
                let omega = match p.inertia_schedule {
                    InertiaSchedule::Linear => self.records.last().map_or(p.omega_top, |r| r.omega),
                    InertiaSchedule::Constant => p.omega,
                };
                (
                    e.iteration(),
                    e.config().iterations,
                    e.best_fitness(),
                    ParamValues { alpha1: p.alpha1, alpha2: p.alpha2, omega },
                )
            }
            None => (0, 0, f64::NAN, ParamValues { alpha1: f64::NAN, alpha2: f64::NAN, omega: f64::NAN }),
        };
        Snapshot {
            run: self.run,
            iteration,
            iterations,
            best_fitness,
            msd: self.last_msd,
            params,
            running: self.phase == Phase::Running,
            phase: self.phase,
            histogram: self.engine.as_ref().map(|_| HistogramView {
                histogram: self.histogram.clone(),
                log_scale: self.log_scale,
                increments: self.increments,
            }),
        }
    }

    pub fn is_adaptive(&self) -> bool {
        self.engine.as_ref().is_some_and(|e| e.config().variant == Variant::Adaptive)
    }
}
