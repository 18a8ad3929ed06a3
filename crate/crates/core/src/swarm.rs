//! Swarm representation, initialization and the standard PSO iteration.
//!
//! Velocity update (per particle, per dimension `d`, fresh `r₁, r₂ ~ U[0,1]`):
//!
//! ```text
//! v_d ← ω·v_d + α₁·r₁·(p_d − x_d) + α₂·r₂·(g_d − x_d)
//! x_d ← x_d + v_d
//! ```

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::objectives::{Objective, ObjectiveId};
use crate::{Error, Result};

/// Upper bound for `α₁`/`α₂` accepted from user-facing controls.
pub const ALPHA_UI_MAX: f64 = 4.0;
/// Upper bound for `ω` accepted from user-facing controls.
pub const OMEGA_UI_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InertiaSchedule {
    #[default]
    Constant,
    /// `ω(t) = Ω_top − (t/I)·(Ω_top − Ω_bottom)`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoParams {
    /// Cognitive weight α₁.
    pub alpha1: f64,
    /// Social weight α₂.
    pub alpha2: f64,
    /// Inertia ω, used when the schedule is constant.
    pub omega: f64,
    pub omega_top: f64,
    pub omega_bottom: f64,
    pub inertia_schedule: InertiaSchedule,
}

impl Default for PsoParams {
    /// Trelea's recommended values: α₁ = α₂ = 1.494, ω = 0.729, Ω ∈ [0.4, 0.8].
    fn default() -> Self {
        PsoParams {
            alpha1: 1.494,
            alpha2: 1.494,
            omega: 0.729,
            omega_top: 0.8,
            omega_bottom: 0.4,
            inertia_schedule: InertiaSchedule::Constant,
        }
    }
}

impl PsoParams {
    /// Constant-inertia parameters with default schedule endpoints.
    pub fn new(alpha1: f64, alpha2: f64, omega: f64) -> Self {
        PsoParams {
            alpha1,
            alpha2,
            omega,
            ..PsoParams::default()
        }
    }

    pub fn linear(alpha1: f64, alpha2: f64, omega_top: f64, omega_bottom: f64) -> Self {
        PsoParams {
            alpha1,
            alpha2,
            omega: omega_top,
            omega_top,
            omega_bottom,
            inertia_schedule: InertiaSchedule::Linear,
        }
    }

    /// Library-level check: every value finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.named() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.inertia_schedule == InertiaSchedule::Linear && self.omega_bottom > self.omega_top {
            return Err(Error::Config(format!(
                "omega_bottom ({}) exceeds omega_top ({})",
                self.omega_bottom, self.omega_top
            )));
        }
        Ok(())
    }

    /// The stricter bounds used for values typed into the CLI or the live service.
    pub fn validate_ui_bounds(&self) -> Result<()> {
        self.validate()?;
        for (name, v) in self.named() {
            let max = if name.starts_with("alpha") { ALPHA_UI_MAX } else { OMEGA_UI_MAX };
            if v > max {
                return Err(Error::Config(format!("{name} must lie in [0, {max}], got {v}")));
            }
        }
        Ok(())
    }

    fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("omega", self.omega),
            ("omega_top", self.omega_top),
            ("omega_bottom", self.omega_bottom),
        ]
    }

    /// Inertia in force at iteration `t` of a run with `horizon` iterations.
    pub fn omega_at(&self, t: usize, horizon: usize) -> Result<f64> {
        match self.inertia_schedule {
            InertiaSchedule::Constant => Ok(self.omega),
            InertiaSchedule::Linear => {
                if horizon == 0 {
                    return Err(Error::Config(
                        "linear inertia schedule needs at least one iteration".into(),
                    ));
                }
                let frac = t as f64 / horizon as f64;
                Ok(self.omega_top - frac * (self.omega_top - self.omega_bottom))
            }
        }
    }
}

/// Inertia at iteration `t` for `config.iterations` total iterations.
pub fn omega_at(t: usize, config: &SwarmConfig, params: &PsoParams) -> Result<f64> {
    params.omega_at(t, config.iterations)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Standard,
    Eigencritical,
    Adaptive,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Eigencritical => "eigencritical",
            Variant::Adaptive => "adaptive",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Variant::Standard, Variant::Eigencritical, Variant::Adaptive]
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwarmConfig {
    pub n_particles: usize,
    pub dims: usize,
    pub iterations: usize,
    /// Radius of the origin-centred ball the particles start in.
    pub boundary_radius: f64,
    pub objective: ObjectiveId,
    pub variant: Variant,
    pub seed: u64,
    /// Optional per-component velocity limit. Off by default.
    pub velocity_clamp: Option<f64>,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        SwarmConfig {
            n_particles: 20,
            dims: 20,
            iterations: 10_000,
            boundary_radius: 500.0,
            objective: ObjectiveId::Schwefel,
            variant: Variant::Standard,
            seed: 0,
            velocity_clamp: None,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::Config(format!(
                "need at least 2 particles, got {}",
                self.n_particles
            )));
        }
        if self.dims < 1 {
            return Err(Error::Config("need at least 1 dimension".into()));
        }
        if !(self.boundary_radius.is_finite() && self.boundary_radius > 0.0) {
            return Err(Error::Config(format!(
                "boundary radius must be positive, got {}",
                self.boundary_radius
            )));
        }
        if let Some(c) = self.velocity_clamp {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Config(format!("velocity clamp must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub global_best_position: Vec<f64>,
    pub global_best_fitness: f64,
    /// Completed iterations.
    pub iteration: usize,
    /// Parameters used by the most recent step.
    pub current_params: PsoParams,
    /// Total planned iterations; the linear inertia schedule is defined against it.
    pub horizon: usize,
    pub velocity_clamp: Option<f64>,
    /// Radius of the initialization ball; adaptive metrics are squashed against it.
    pub boundary_radius: f64,
}

impl SwarmState {
    pub fn n_particles(&self) -> usize {
        self.particles.len()
    }

    pub fn dims(&self) -> usize {
        self.global_best_position.len()
    }

    /// Row-major `N×D` copy of the current positions.
    pub fn position_rows(&self) -> Vec<f64> {
        self.particles
            .iter()
            .flat_map(|p| p.position.iter().copied())
            .collect()
    }
}

/// One independent random stream per particle index, so the swarm size
/// never perturbs the sequence a given particle sees.
#[derive(Debug, Clone)]
pub struct SwarmRng {
    streams: Vec<ChaCha8Rng>,
}

impl SwarmRng {
    pub fn new(seed: u64, n_particles: usize) -> Self {
        let streams = (0..n_particles)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                rng
            })
            .collect();
        SwarmRng { streams }
    }

    pub fn particle(&mut self, index: usize) -> &mut ChaCha8Rng {
        &mut self.streams[index]
    }

    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }
}

/// Uniform sample from the `dims`-ball of the given radius: Gaussian
/// direction, radius `R·u^(1/D)`.
pub fn sample_in_ball<R: Rng + ?Sized>(rng: &mut R, dims: usize, radius: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dims).map(|_| rng.sample(StandardNormal)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / dims as f64);
    if norm > 0.0 {
        for x in &mut v {
            *x *= r / norm;
        }
    }
    v
}

pub fn init_swarm(config: &SwarmConfig, params: &PsoParams, rng: &mut SwarmRng) -> Result<SwarmState> {
    init_swarm_with(config, params, &config.objective, rng)
}

/// Like [`init_swarm`] but scored with an arbitrary objective.
pub fn init_swarm_with<O: Objective + ?Sized>(
    config: &SwarmConfig,
    params: &PsoParams,
    objective: &O,
    rng: &mut SwarmRng,
) -> Result<SwarmState> {
    config.validate()?;
    params.validate()?;
    if rng.len() != config.n_particles {
        return Err(Error::Config(format!(
            "rng has {} streams for {} particles",
            rng.len(),
            config.n_particles
        )));
    }
    let mut particles = Vec::with_capacity(config.n_particles);
    for i in 0..config.n_particles {
        let position = sample_in_ball(rng.particle(i), config.dims, config.boundary_radius);
        let fitness = evaluate(objective, i, &position)?;
        particles.push(Particle {
            velocity: vec![0.0; config.dims],
            best_position: position.clone(),
            position,
            best_fitness: fitness,
        });
    }
    let best = best_particle(&particles);
    Ok(SwarmState {
        global_best_position: particles[best].best_position.clone(),
        global_best_fitness: particles[best].best_fitness,
        particles,
        iteration: 0,
        current_params: *params,
        horizon: config.iterations,
        velocity_clamp: config.velocity_clamp,
        boundary_radius: config.boundary_radius,
    })
}

fn best_particle(particles: &[Particle]) -> usize {
    // First index wins on ties.
    let mut best = 0;
    for (i, p) in particles.iter().enumerate().skip(1) {
        if p.best_fitness < particles[best].best_fitness {
            best = i;
        }
    }
    best
}

fn evaluate<O: Objective + ?Sized>(objective: &O, particle: usize, x: &[f64]) -> Result<f64> {
    let value = objective.evaluate(x);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Evaluation {
            particle,
            value,
            position: x.to_vec(),
        })
    }
}

/// Velocities and positions a standard step would produce, not yet applied.
/// Both are row-major `N×D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub velocities: Vec<f64>,
    pub positions: Vec<f64>,
}

/// Draws the random vectors and computes the next velocities and positions
/// without touching `state`.
pub fn propose(state: &SwarmState, params: &PsoParams, rng: &mut SwarmRng) -> Result<Proposal> {
    let omega = params.omega_at(state.iteration, state.horizon)?;
    let dims = state.dims();
    let n = state.n_particles();
    let g = &state.global_best_position;
    let mut velocities = Vec::with_capacity(n * dims);
    let mut positions = Vec::with_capacity(n * dims);
    for (i, p) in state.particles.iter().enumerate() {
        let stream = rng.particle(i);
        for d in 0..dims {
            let r1: f64 = stream.random();
            let r2: f64 = stream.random();
            let x = p.position[d];
            let mut v = omega * p.velocity[d]
                + params.alpha1 * r1 * (p.best_position[d] - x)
                + params.alpha2 * r2 * (g[d] - x);
            if let Some(c) = state.velocity_clamp {
                v = v.clamp(-c, c);
            }
            velocities.push(v);
            positions.push(x + v);
        }
    }
    Ok(Proposal {
        velocities,
        positions,
    })
}

/// Installs new positions and velocities, scores them, and updates the
/// personal and global bests on strict improvement.
pub fn commit<O: Objective + ?Sized>(
    state: &mut SwarmState,
    positions: &[f64],
    velocities: &[f64],
    objective: &O,
) -> Result<()> {
    let dims = state.dims();
    let n = state.n_particles();
    if positions.len() != n * dims || velocities.len() != n * dims {
        return Err(Error::Shape(format!(
            "expected {}x{} positions and velocities",
            n, dims
        )));
    }
    for (i, p) in state.particles.iter_mut().enumerate() {
        let row = i * dims..(i + 1) * dims;
        p.position.copy_from_slice(&positions[row.clone()]);
        p.velocity.copy_from_slice(&velocities[row]);
        let fitness = evaluate(objective, i, &p.position)?;
        if fitness < p.best_fitness {
            p.best_fitness = fitness;
            p.best_position.copy_from_slice(&p.position);
        }
    }
    let best = best_particle(&state.particles);
    if state.particles[best].best_fitness < state.global_best_fitness {
        state.global_best_fitness = state.particles[best].best_fitness;
        state.global_best_position = state.particles[best].best_position.clone();
    }
    state.iteration += 1;
    Ok(())
}

/// One iteration of the standard PSO.
pub fn step_standard<O: Objective + ?Sized>(
    state: &mut SwarmState,
    params: &PsoParams,
    objective: &O,
    rng: &mut SwarmRng,
) -> Result<()> {
    let proposal = propose(state, params, rng)?;
    commit(state, &proposal.positions, &proposal.velocities, objective)?;
    state.current_params = *params;
    Ok(())
}
