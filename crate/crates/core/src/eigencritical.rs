//! Eigencritical PSO step.
//!
//! A standard step is computed but not applied. The particle-mixing map `C`
//! with `X̃(t+1) ≈ C·X(t)` is estimated by least squares, rescaled so its
//! dominant eigenvalue has modulus one, and the swarm moves to `C·X(t)`.
//! Velocities keep the tentative step's values; bests are scored on the
//! committed positions only.

use crate::numerics::{eigenvalues, lstsq_transform, RealMatrix};
use crate::objectives::Objective;
use crate::swarm::{commit, propose, PsoParams, SwarmRng, SwarmState};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EigenStep {
    /// The normalized map that was applied, `None` when the step fell back to
    /// leaving positions unchanged.
    pub transform: Option<RealMatrix>,
    /// `|λ₁|` of the raw least-squares map before normalization.
    pub raw_spectral_radius: f64,
    pub rank_deficient: bool,
    /// `‖X̃(t+1) − C_raw·X(t)‖_F`.
    pub residual: f64,
    pub warning: Option<String>,
}

pub fn step_eigencritical<O: Objective + ?Sized>(
    state: &mut SwarmState,
    params: &PsoParams,
    objective: &O,
    rng: &mut SwarmRng,
) -> Result<EigenStep> {
    let (n, dims) = (state.n_particles(), state.dims());
    if n < 2 {
        return Err(Error::Config("eigencritical step needs at least 2 particles".into()));
    }
    let proposal = propose(state, params, rng)?;
    let current = state.position_rows();
    state.current_params = *params;

    if proposal.positions == current {
        commit(state, &current, &proposal.velocities, objective)?;
        return Ok(EigenStep {
            transform: Some(RealMatrix::identity(n)),
            raw_spectral_radius: 1.0,
            rank_deficient: false,
            residual: 0.0,
            warning: None,
        });
    }

    let x_now = RealMatrix::from_row_major(n, dims, current)?;
    let x_next = RealMatrix::from_row_major(n, dims, proposal.positions)?;
    let fit = match lstsq_transform(&x_now, &x_next) {
        Ok(fit) => fit,
        Err(Error::Domain(msg)) => {
            commit(state, x_now.as_slice(), &proposal.velocities, objective)?;
            return Ok(EigenStep {
                transform: None,
                raw_spectral_radius: 0.0,
                rank_deficient: false,
                residual: f64::NAN,
                warning: Some(format!("iteration {}: {msg}; positions left unchanged", state.iteration)),
            });
        }
        Err(e) => return Err(e),
    };

    let radius = if !fit.transform.as_slice().iter().all(|c| c.is_finite()) {
        Err("fitted transform is not finite".to_string())
    } else {
        match eigenvalues(&fit.transform) {
            Ok(spectrum) => Ok(spectrum.spectral_radius()),
            Err(Error::NoConvergence(s)) => Err(format!("eigenvalue iteration stalled after {s} sweeps")),
            Err(Error::Domain(msg)) => Err(msg),
            Err(e) => return Err(e),
        }
    };
    match radius {
        Ok(r) if r > 0.0 && r.is_finite() => {
            let transform = fit.transform.scale(1.0 / r);
            let committed = transform.matmul(&x_now)?;
            commit(state, committed.as_slice(), &proposal.velocities, objective)?;
            Ok(EigenStep {
                transform: Some(transform),
                raw_spectral_radius: r,
                rank_deficient: fit.rank_deficient,
                residual: fit.residual,
                warning: None,
            })
        }
        other => {
            let reason = match other {
                Err(msg) => msg,
                Ok(_) => "transform has a zero spectral radius".to_string(),
            };
            commit(state, x_now.as_slice(), &proposal.velocities, objective)?;
            Ok(EigenStep {
                transform: None,
                raw_spectral_radius: 0.0,
                rank_deficient: fit.rank_deficient,
                residual: fit.residual,
                warning: Some(format!(
                    "iteration {}: {reason}; positions left unchanged",
                    state.iteration
                )),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::ObjectiveId;
    use crate::swarm::{init_swarm, SwarmConfig, Variant};

    fn setup(n: usize, d: usize, seed: u64) -> (SwarmConfig, SwarmState, SwarmRng) {
        let cfg = SwarmConfig {
            n_particles: n,
            dims: d,
            iterations: 200,
            boundary_radius: 500.0,
            objective: ObjectiveId::Schwefel,
            variant: Variant::Eigencritical,
            seed,
            velocity_clamp: None,
        };
        let mut rng = SwarmRng::new(seed, n);
        let state = init_swarm(&cfg, &PsoParams::new(0.6, 0.6, 0.6), &mut rng).unwrap();
        (cfg, state, rng)
    }

    #[test]
    fn committed_positions_are_the_normalized_map_applied() {
        let (_, mut state, mut rng) = setup(8, 8, 3);
        let params = PsoParams::new(0.6, 0.6, 0.6);
        let mut best = state.global_best_fitness;
        for _ in 0..100 {
            let before = RealMatrix::from_row_major(8, 8, state.position_rows()).unwrap();
            let step = step_eigencritical(&mut state, &params, &ObjectiveId::Schwefel, &mut rng).unwrap();
            let c = step.transform.expect("regular swarm");
            let radius = eigenvalues(&c).unwrap().spectral_radius();
            assert!((radius - 1.0).abs() <= 1e-9);
            let expected = c.matmul(&before).unwrap();
            assert_eq!(expected.as_slice(), state.position_rows().as_slice());
            assert!(state.global_best_fitness <= best);
            best = state.global_best_fitness;
        }
    }

    #[test]
    fn zero_move_is_a_no_op() {
        let (_, mut state, mut rng) = setup(4, 3, 1);
        let params = PsoParams::new(0.0, 0.0, 0.0);
        let before = state.position_rows();
        let step = step_eigencritical(&mut state, &params, &ObjectiveId::Schwefel, &mut rng).unwrap();
        assert_eq!(state.position_rows(), before);
        assert_eq!(step.transform, Some(RealMatrix::identity(4)));
        assert_eq!(state.iteration, 1);
    }

    #[test]
    fn uniform_blow_up_is_cancelled() {
        // Particles sit on their bests at G = 0, so only inertia acts:
        // with v = x and ω = 1 the tentative move doubles every position.
        let (_, mut state, mut rng) = setup(4, 6, 2);
        for p in &mut state.particles {
            p.velocity = p.position.clone();
            p.best_position = vec![0.0; 6];
            p.best_fitness = -1e9;
        }
        state.global_best_position = vec![0.0; 6];
        state.global_best_fitness = -1e9;
        let params = PsoParams::new(0.0, 0.0, 1.0);
        let before = state.position_rows();
        let step = step_eigencritical(&mut state, &params, &ObjectiveId::Schwefel, &mut rng).unwrap();
        assert!((step.raw_spectral_radius - 2.0).abs() < 1e-9);
        for (a, b) in state.position_rows().iter().zip(&before) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn origin_swarm_falls_back_with_warning() {
        let (_, mut state, mut rng) = setup(4, 3, 9);
        for p in &mut state.particles {
            p.position = vec![0.0; 3];
            p.velocity = vec![1.0, 0.0, 0.0];
        }
        let params = PsoParams::new(0.5, 0.5, 0.5);
        let step = step_eigencritical(&mut state, &params, &ObjectiveId::Schwefel, &mut rng).unwrap();
        assert!(step.transform.is_none());
        assert!(step.warning.is_some());
        assert!(state.particles.iter().all(|p| p.position == vec![0.0; 3]));
    }
}
