//! Adaptive PSO: measure the swarm, squash the measurement into `(−1, 1)`,
//! and move `(α₁, α₂, ω)` against the observed change `ΔS`.
//!
//! A growing metric (`ΔS > 0`) means the swarm is diverging, so every
//! parameter shrinks; a shrinking metric means it is collapsing, so they grow.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::objectives::Objective;
use crate::swarm::{step_standard, PsoParams, SwarmRng, SwarmState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    /// Mean distance over all unordered particle pairs.
    ParticleDist,
    /// Mean distance from each particle to the centroid.
    CentroidDist,
    /// Mean velocity norm.
    VelNorm,
}

impl MetricId {
    pub fn name(self) -> &'static str {
        match self {
            MetricId::ParticleDist => "particle_dist",
            MetricId::CentroidDist => "centroid_dist",
            MetricId::VelNorm => "vel_norm",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        [MetricId::ParticleDist, MetricId::CentroidDist, MetricId::VelNorm]
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleId {
    /// `θ ← θ − ε·ΔS`
    Dependant,
    /// `θ ← θ − ε·ΔS·θ`
    Independent,
}

impl RuleId {
    pub fn name(self) -> &'static str {
        match self {
            RuleId::Dependant => "dependant",
            RuleId::Independent => "independent",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [RuleId::Dependant, RuleId::Independent]
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown rule `{s}`"))
    }
}

/// Where the squashing happens relative to the difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    /// `ΔS = squash(S(t+1)) − squash(S(t))`
    #[default]
    SquashThenDiff,
    /// `ΔS = squash(S(t+1) − S(t))`
    DiffThenSquash,
}

impl DeltaMode {
    pub fn name(self) -> &'static str {
        match self {
            DeltaMode::SquashThenDiff => "squash_then_diff",
            DeltaMode::DiffThenSquash => "diff_then_squash",
        }
    }
}

impl fmt::Display for DeltaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DeltaMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        [DeltaMode::SquashThenDiff, DeltaMode::DiffThenSquash]
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| format!("unknown delta mode `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptiveConfig {
    /// Step size ε, in `(0, 1)`.
    pub epsilon: f64,
    pub metric: MetricId,
    pub rule: RuleId,
    pub delta_mode: DeltaMode,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            epsilon: 0.1,
            metric: MetricId::VelNorm,
            rule: RuleId::Dependant,
            delta_mode: DeltaMode::SquashThenDiff,
        }
    }
}

impl AdaptiveConfig {
    /// Starting parameters that pair with the defaults above.
    pub fn default_start_params() -> PsoParams {
        PsoParams::new(1.0, 1.0, 0.815)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!(
                "adaptive epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// The previous and current metric readings, raw and squashed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTrace {
    /// Squashed `S(t)`.
    pub previous: f64,
    /// Squashed `S(t+1)`.
    pub current: f64,
    pub raw_previous: f64,
    pub raw_current: f64,
}

impl MetricTrace {
    /// Seeds both readings from the swarm before its first step.
    pub fn init(metric: MetricId, state: &SwarmState) -> Result<Self> {
        let raw = measure(metric, state)?;
        let s = squash(raw, state_boundary(state)?);
        Ok(MetricTrace {
            previous: s,
            current: s,
            raw_previous: raw,
            raw_current: raw,
        })
    }

    fn push(self, raw: f64, boundary: f64) -> Self {
        MetricTrace {
            previous: self.current,
            current: squash(raw, boundary),
            raw_previous: self.raw_current,
            raw_current: raw,
        }
    }

    pub fn delta(&self, mode: DeltaMode, boundary: f64) -> f64 {
        match mode {
            DeltaMode::SquashThenDiff => self.current - self.previous,
            DeltaMode::DiffThenSquash => squash(self.raw_current - self.raw_previous, boundary),
        }
    }
}

fn state_boundary(state: &SwarmState) -> Result<f64> {
    if state.boundary_radius > 0.0 && state.boundary_radius.is_finite() {
        Ok(state.boundary_radius)
    } else {
        Err(Error::Config(format!(
            "boundary radius must be positive, got {}",
            state.boundary_radius
        )))
    }
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

pub fn measure(metric: MetricId, state: &SwarmState) -> Result<f64> {
    let n = state.n_particles();
    if n < 2 {
        return Err(Error::Config(format!("metrics need at least 2 particles, got {n}")));
    }
    let value = match metric {
        MetricId::ParticleDist => {
            let mut total = 0.0;
            for (i, a) in state.particles.iter().enumerate() {
                for b in &state.particles[i + 1..] {
                    total += norm(a.position.iter().zip(&b.position).map(|(x, y)| x - y));
                }
            }
            total / (n * (n - 1) / 2) as f64
        }
        MetricId::CentroidDist => {
            let c = centroid(state);
            state
                .particles
                .iter()
                .map(|p| norm(p.position.iter().zip(&c).map(|(x, m)| x - m)))
                .sum::<f64>()
                / n as f64
        }
        MetricId::VelNorm => {
            state
                .particles
                .iter()
                .map(|p| norm(p.velocity.iter().copied()))
                .sum::<f64>()
                / n as f64
        }
    };
    Ok(value)
}

pub(crate) fn centroid(state: &SwarmState) -> Vec<f64> {
    let mut c = vec![0.0; state.dims()];
    for p in &state.particles {
        for (m, x) in c.iter_mut().zip(&p.position) {
            *m += x;
        }
    }
    let n = state.n_particles() as f64;
    for m in &mut c {
        *m /= n;
    }
    c
}

/// `2·σ(x/η) − 1` with `η = boundary/2`, which equals `tanh(x/boundary)`.
pub fn squash(x: f64, boundary: f64) -> f64 {
    (x / boundary).tanh()
}

pub fn apply_rule(rule: RuleId, params: &PsoParams, delta_s: f64, epsilon: f64) -> PsoParams {
    let step = epsilon * delta_s;
    let update = |theta: f64| {
        let next = match rule {
            RuleId::Dependant => theta - step,
            RuleId::Independent => theta - step * theta,
        };
        next.max(0.0)
    };
    PsoParams {
        alpha1: update(params.alpha1),
        alpha2: update(params.alpha2),
        omega: update(params.omega),
        ..*params
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveStep {
    /// Parameters for the next iteration.
    pub params: PsoParams,
    pub trace: MetricTrace,
    pub delta_s: f64,
}

/// One standard step under `params`, then the metric update. The returned
/// parameters take effect on the following iteration.
pub fn step_adaptive<O: Objective + ?Sized>(
    state: &mut SwarmState,
    params: &PsoParams,
    config: &AdaptiveConfig,
    objective: &O,
    rng: &mut SwarmRng,
    trace: MetricTrace,
) -> Result<AdaptiveStep> {
    config.validate()?;
    let boundary = state_boundary(state)?;
    step_standard(state, params, objective, rng)?;
    let trace = trace.push(measure(config.metric, state)?, boundary);
    let delta_s = trace.delta(config.delta_mode, boundary);
    Ok(AdaptiveStep {
        params: apply_rule(config.rule, params, delta_s, config.epsilon),
        trace,
        delta_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::ObjectiveId;
    use crate::swarm::{init_swarm, SwarmConfig, Variant};
    use proptest::prelude::*;

    fn two_particles(a: Vec<f64>, b: Vec<f64>) -> SwarmState {
        let cfg = SwarmConfig {
            n_particles: 2,
            dims: a.len(),
            objective: ObjectiveId::Sphere,
            ..SwarmConfig::default()
        };
        let mut rng = SwarmRng::new(0, 2);
        let mut state = init_swarm(&cfg, &PsoParams::default(), &mut rng).unwrap();
        state.particles[0].position = a;
        state.particles[1].position = b;
        state
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn metric_examples() {
        let s = two_particles(vec![0.0, 0.0], vec![2.0, 0.0]);
        assert!(close(measure(MetricId::ParticleDist, &s).unwrap(), 2.0));
        assert!(close(measure(MetricId::CentroidDist, &s).unwrap(), 1.0));
        assert_eq!(measure(MetricId::VelNorm, &s).unwrap(), 0.0);

        let s = two_particles(vec![3.0, 4.0], vec![3.0, 4.0]);
        assert_eq!(measure(MetricId::ParticleDist, &s).unwrap(), 0.0);
        assert_eq!(measure(MetricId::CentroidDist, &s).unwrap(), 0.0);
    }

    #[test]
    fn metrics_need_two_particles() {
        let mut s = two_particles(vec![0.0], vec![1.0]);
        s.particles.pop();
        assert!(matches!(measure(MetricId::VelNorm, &s), Err(Error::Config(_))));
    }

    #[test]
    fn squash_examples() {
        assert_eq!(squash(0.0, 500.0), 0.0);
        assert_eq!(squash(1e6, 1.0), 1.0);
        assert_eq!(squash(-1e6, 1.0), -1.0);
        // x = η = B/2 gives 2σ(1) − 1.
        let sigma1 = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((squash(250.0, 500.0) - (2.0 * sigma1 - 1.0)).abs() < 1e-15);
        assert!((squash(250.0, 500.0) - 0.46211715726000974).abs() < 1e-15);
    }

    #[test]
    fn rule_examples() {
        let p = PsoParams::new(1.0, 1.0, 0.815);
        for rule in [RuleId::Dependant, RuleId::Independent] {
            assert_eq!(apply_rule(rule, &p, 0.0, 0.1), p);
        }
        let d = apply_rule(RuleId::Dependant, &p, 0.5, 0.1);
        assert!(close(d.alpha1, 0.95) && close(d.alpha2, 0.95) && close(d.omega, 0.765));
        let i = apply_rule(RuleId::Independent, &PsoParams::new(1.0, 1.0, 0.8), 0.5, 0.1);
        assert!(close(i.alpha1, 0.95) && close(i.alpha2, 0.95) && close(i.omega, 0.76));
    }

    #[test]
    fn parameters_clamp_at_zero() {
        let p = apply_rule(RuleId::Dependant, &PsoParams::new(0.01, 2.0, 0.02), 1.0, 0.9);
        assert_eq!((p.alpha1, p.omega), (0.0, 0.0));
        assert!(close(p.alpha2, 1.1));
    }

    #[test]
    fn epsilon_bounds() {
        for eps in [0.0, 1.0, -0.1, f64::NAN] {
            let cfg = AdaptiveConfig { epsilon: eps, ..AdaptiveConfig::default() };
            assert!(cfg.validate().is_err());
        }
        assert!(AdaptiveConfig::default().validate().is_ok());
    }

    #[test]
    fn names_parse() {
        assert_eq!("vel-norm".parse::<MetricId>().unwrap(), MetricId::VelNorm);
        assert_eq!("centroid_dist".parse::<MetricId>().unwrap(), MetricId::CentroidDist);
        assert_eq!("Independent".parse::<RuleId>().unwrap(), RuleId::Independent);
        assert!("rule3".parse::<RuleId>().is_err());
    }

    fn swarm(seed: u64) -> (SwarmState, SwarmRng) {
        let cfg = SwarmConfig {
            n_particles: 10,
            dims: 5,
            seed,
            variant: Variant::Adaptive,
            ..SwarmConfig::default()
        };
        let mut rng = SwarmRng::new(seed, 10);
        let state = init_swarm(&cfg, &AdaptiveConfig::default_start_params(), &mut rng).unwrap();
        (state, rng)
    }

    #[test]
    fn first_delta_reflects_first_move() {
        let (mut state, mut rng) = swarm(4);
        let cfg = AdaptiveConfig::default();
        let trace = MetricTrace::init(cfg.metric, &state).unwrap();
        assert_eq!(trace.current, 0.0);
        let params = AdaptiveConfig::default_start_params();
        let step = step_adaptive(&mut state, &params, &cfg, &ObjectiveId::Schwefel, &mut rng, trace).unwrap();
        assert!(step.delta_s > 0.0);
        assert_eq!(step.trace.previous, 0.0);
        assert!(step.params.omega < params.omega);
    }

    #[test]
    fn frozen_swarm_keeps_parameters() {
        let (mut state, mut rng) = swarm(5);
        // Everyone already sits on the global best with zero velocity.
        let g = state.global_best_position.clone();
        let gf = state.global_best_fitness;
        for p in &mut state.particles {
            p.position = g.clone();
            p.best_position = g.clone();
            p.best_fitness = gf;
        }
        let cfg = AdaptiveConfig::default();
        let mut trace = MetricTrace::init(cfg.metric, &state).unwrap();
        let mut params = AdaptiveConfig::default_start_params();
        for _ in 0..20 {
            let step = step_adaptive(&mut state, &params, &cfg, &ObjectiveId::Schwefel, &mut rng, trace).unwrap();
            assert_eq!(step.delta_s, 0.0);
            assert_eq!(step.params, params);
            params = step.params;
            trace = step.trace;
        }
    }

    #[test]
    fn diff_then_squash_mode() {
        let t = MetricTrace { previous: 0.0, current: 0.0, raw_previous: 100.0, raw_current: 350.0 };
        assert!((t.delta(DeltaMode::DiffThenSquash, 500.0) - (0.5f64).tanh()).abs() < 1e-15);
        assert_eq!(t.delta(DeltaMode::SquashThenDiff, 500.0), 0.0);
    }

    proptest! {
        #[test]
        fn squash_is_odd_bounded_monotone(x in -1e4f64..1e4, b in 0.1f64..1000.0) {
            prop_assert!((squash(-x, b) + squash(x, b)).abs() <= 1e-12);
            prop_assert!(squash(x, b).abs() <= 1.0);
            if x.abs() < 5.0 * b {
                prop_assert!(squash(x, b).abs() < 1.0);
            }
            let h = b * 1e-3;
            prop_assert!(squash(x + h, b) >= squash(x, b));
        }

        #[test]
        fn squash_strictly_increasing_on_grid(b in 0.1f64..1000.0) {
            let grid: Vec<f64> = (-200..=200).map(|i| i as f64 * b / 100.0).collect();
            for w in grid.windows(2) {
                prop_assert!(squash(w[1], b) > squash(w[0], b));
            }
        }

        #[test]
        fn rules_move_against_delta(
            a1 in 0.0f64..4.0, a2 in 0.0f64..4.0, w in 0.0f64..2.0,
            ds in -2.0f64..2.0, eps in 0.001f64..0.999,
        ) {
            let p = PsoParams::new(a1, a2, w);
            for rule in [RuleId::Dependant, RuleId::Independent] {
                let q = apply_rule(rule, &p, ds, eps);
                for (before, after) in [(p.alpha1, q.alpha1), (p.alpha2, q.alpha2), (p.omega, q.omega)] {
                    prop_assert!(after >= 0.0);
                    if ds > 0.0 { prop_assert!(after <= before); }
                    if ds < 0.0 { prop_assert!(after >= before); }
                }
            }
        }

        #[test]
        fn independent_rule_preserves_ratios(
            a1 in 0.01f64..4.0, a2 in 0.01f64..4.0,
            deltas in prop::collection::vec(-1.0f64..1.0, 1..50),
        ) {
            let mut p = PsoParams::new(a1, a2, 0.7);
            let ratio = a1 / a2;
            for ds in deltas {
                p = apply_rule(RuleId::Independent, &p, ds, 0.1);
                prop_assert!((p.alpha1 / p.alpha2 - ratio).abs() <= 1e-9 * ratio);
            }
        }
    }
}
