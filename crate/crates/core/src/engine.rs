//! One swarm of any variant, stepped one iteration at a time.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adaptive::{step_adaptive, AdaptiveConfig, MetricTrace};
use crate::analysis::msd_to_centroid;
use crate::eigencritical::{step_eigencritical, EigenStep};
use crate::runner::IterationRecord;
use crate::swarm::{
    init_swarm, step_standard, InertiaSchedule, PsoParams, SwarmConfig, SwarmRng, SwarmState, Variant, ALPHA_UI_MAX,
    OMEGA_UI_MAX,
};
use crate::{Error, Result};

/// A parameter that can be changed between iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamName {
    Alpha1,
    Alpha2,
    Omega,
}

impl ParamName {
    pub fn name(self) -> &'static str {
        match self {
            ParamName::Alpha1 => "alpha1",
            ParamName::Alpha2 => "alpha2",
            ParamName::Omega => "omega",
        }
    }

    pub fn ui_max(self) -> f64 {
        match self {
            ParamName::Omega => OMEGA_UI_MAX,
            _ => ALPHA_UI_MAX,
        }
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [ParamName::Alpha1, ParamName::Alpha2, ParamName::Omega]
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown parameter `{s}`"))
    }
}

#[derive(Debug, Clone)]
pub struct Engine {
    config: SwarmConfig,
    initial_params: PsoParams,
    adaptive: Option<AdaptiveConfig>,
    /// Parameters for the next iteration.
    params: PsoParams,
    state: SwarmState,
    rng: SwarmRng,
    metric: Option<MetricTrace>,
    initial_msd: f64,
    last_eigen: Option<EigenStep>,
    warnings: Vec<String>,
}

impl Engine {
    /// `adaptive` must be given exactly when the variant is adaptive.
    pub fn new(config: SwarmConfig, params: PsoParams, adaptive: Option<AdaptiveConfig>) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        match (config.variant, &adaptive) {
            (Variant::Adaptive, None) => {
                return Err(Error::Config("adaptive variant needs an adaptive configuration".into()))
            }
            (Variant::Adaptive, Some(a)) => {
                a.validate()?;
                if params.inertia_schedule == InertiaSchedule::Linear {
                    return Err(Error::Config("adaptive variant adapts a constant inertia, not a schedule".into()));
                }
            }
            (v, Some(_)) => {
                return Err(Error::Config(format!("adaptive configuration given for the {v} variant")))
            }
            _ => {}
        }
        let mut rng = SwarmRng::new(config.seed, config.n_particles);
        let state = init_swarm(&config, &params, &mut rng)?;
        let metric = adaptive.map(|a| MetricTrace::init(a.metric, &state)).transpose()?;
        let initial_msd = msd_to_centroid(&state)?;
        Ok(Engine {
            config,
            initial_params: params,
            adaptive,
            params,
            state,
            rng,
            metric,
            initial_msd,
            last_eigen: None,
            warnings: Vec::new(),
        })
    }

    /// A fresh engine with the same configuration, seed and starting parameters.
    pub fn reset(&mut self) -> Result<()> {
        *self = Engine::new(self.config.clone(), self.initial_params, self.adaptive)?;
        Ok(())
    }

    pub fn config(&self) -> &SwarmConfig {
        &self.config
    }

    pub fn adaptive(&self) -> Option<&AdaptiveConfig> {
        self.adaptive.as_ref()
    }

    pub fn initial_params(&self) -> PsoParams {
        self.initial_params
    }

    pub fn params(&self) -> PsoParams {
        self.params
    }

    pub fn state(&self) -> &SwarmState {
        &self.state
    }

    pub fn iteration(&self) -> usize {
        self.state.iteration
    }

    pub fn is_finished(&self) -> bool {
        self.state.iteration >= self.config.iterations
    }

    pub fn initial_msd(&self) -> f64 {
        self.initial_msd
    }

    pub fn msd(&self) -> f64 {
        msd_to_centroid(&self.state).expect("validated swarm has at least 2 particles")
    }

    pub fn best_fitness(&self) -> f64 {
        self.state.global_best_fitness
    }

    pub fn last_eigen_step(&self) -> Option<&EigenStep> {
        self.last_eigen.as_ref()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn take_warnings(&mut self) -> Vec<String> {
        std::mem::take(&mut self.warnings)
    }

    /// Changes one parameter for the following iterations. Adaptive runs own
    /// their parameters and refuse; values outside the UI bounds are refused.
    pub fn set_param(&mut self, name: ParamName, value: f64) -> Result<()> {
        if self.config.variant == Variant::Adaptive {
            return Err(Error::Config("parameters of an adaptive run are locked".into()));
        }
        if !(value.is_finite() && (0.0..=name.ui_max()).contains(&value)) {
            return Err(Error::Config(format!("{name} must lie in [0, {}], got {value}", name.ui_max())));
        }
        match name {
            ParamName::Alpha1 => self.params.alpha1 = value,
            ParamName::Alpha2 => self.params.alpha2 = value,
            ParamName::Omega => {
                self.params.omega = value;
                self.params.inertia_schedule = InertiaSchedule::Constant;
            }
        }
        Ok(())
    }

    /// Runs one iteration under the current parameters.
    pub fn step(&mut self) -> Result<IterationRecord> {
        let used = self.params;
        let objective = &self.config.objective;
        let omega_used = used.omega_at(self.state.iteration, self.state.horizon)?;
        match self.config.variant {
            Variant::Standard => step_standard(&mut self.state, &used, objective, &mut self.rng)?,
            Variant::Eigencritical => {
                let step = step_eigencritical(&mut self.state, &used, objective, &mut self.rng)?;
                if let Some(w) = &step.warning {
                    self.warnings.push(w.clone());
                }
                self.last_eigen = Some(step);
            }
            Variant::Adaptive => {
                let cfg = self.adaptive.expect("checked at construction");
                let trace = self.metric.expect("initialized with the adaptive config");
                let step = step_adaptive(&mut self.state, &used, &cfg, objective, &mut self.rng, trace)?;
                self.params = step.params;
                self.metric = Some(step.trace);
            }
        }
        Ok(self.record(omega_used))
    }

    /// The record for the latest state; `omega_used` matters only for a
    /// scheduled inertia, otherwise the live parameters are reported.
    fn record(&self, omega_used: f64) -> IterationRecord {
        let omega = match self.params.inertia_schedule {
            InertiaSchedule::Linear => omega_used,
            InertiaSchedule::Constant => self.params.omega,
        };
        IterationRecord {
            iteration: self.state.iteration,
            best_fitness: self.state.global_best_fitness,
            msd: self.msd(),
            alpha1: self.params.alpha1,
            alpha2: self.params.alpha2,
            omega,
        }
    }
}
