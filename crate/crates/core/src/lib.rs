//! Particle swarm optimization laboratory.
//!
//! Three swarm variants share one engine:
//!
//! * **Standard** PSO with per-dimension random vectors and an optional
//!   linear inertia schedule.
//! * **Eigencritical** PSO, which estimates the linear map between the
//!   present and the tentative next swarm configuration, rescales it so its
//!   dominant eigenvalue has unit modulus, and applies that map instead.
//! * **Adaptive** PSO, which measures the swarm dynamics every iteration and
//!   nudges `(α₁, α₂, ω)` against the observed trend.
//!
//! The [`analysis`] module holds the criticality toolkit (MSD traces,
//! positive-increment histograms, power-law MLE and two reference
//! self-organized critical systems), and [`runner`] executes single runs and
//! parallel batches with CSV persistence.

pub mod adaptive;
pub mod analysis;
pub mod eigencritical;
pub mod engine;
mod error;
pub mod numerics;
pub mod objectives;
pub mod runner;
pub mod swarm;

pub use adaptive::{AdaptiveConfig, DeltaMode, MetricId, MetricTrace, RuleId};
pub use engine::Engine;
pub use error::{Error, Result};
pub use objectives::{Objective, ObjectiveId};
pub use runner::{IterationRecord, RunTrace};
pub use swarm::{InertiaSchedule, Particle, PsoParams, SwarmConfig, SwarmRng, SwarmState, Variant};
