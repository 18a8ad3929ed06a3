//! Small dense linear-algebra kernel used by the eigencritical variant and
//! by the stability diagnostics.

mod eigen;
mod matrix;
mod qr;

pub use eigen::{eigenvalues, Spectrum};
pub use matrix::RealMatrix;
pub use qr::{solve_least_squares, LeastSquares};

use crate::{Error, Result};

/// Least-squares estimate of the particle-mixing map between two swarm
/// configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformFit {
    /// `N×N` matrix `C` minimizing `‖X_next − C·X_now‖_F`.
    pub transform: RealMatrix,
    pub rank: usize,
    /// Set when `X_now` does not have full row rank; `transform` is then
    /// the minimum-norm solution.
    pub rank_deficient: bool,
    /// `‖X_next − C·X_now‖_F`.
    pub residual: f64,
}

/// Solves `X_next ≈ C·X_now` for `C` through the transposed system
/// `X_nowᵀ·Cᵀ ≈ X_nextᵀ`. Both inputs are `N×D` with one particle per row.
pub fn lstsq_transform(x_now: &RealMatrix, x_next: &RealMatrix) -> Result<TransformFit> {
    if x_now.rows() != x_next.rows() || x_now.cols() != x_next.cols() {
        return Err(Error::Shape(format!(
            "position matrices differ: {}x{} vs {}x{}",
            x_now.rows(),
            x_now.cols(),
            x_next.rows(),
            x_next.cols()
        )));
    }
    if x_now.rows() == 0 || x_now.cols() == 0 {
        return Err(Error::Shape("transform needs at least one particle and one dimension".into()));
    }
    // C is invariant under X_now → X_now/b, X_next → X_next/a once rescaled
    // by a/b. Unit-sized inputs keep the Householder norms out of the
    // subnormal range, where a collapsed swarm would otherwise crawl.
    let (a, b) = (max_abs(x_next), max_abs(x_now));
    let (a, b) = if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() { (a, b) } else { (1.0, 1.0) };
    let ls = solve_least_squares(&x_now.scale(1.0 / b).transpose(), &x_next.scale(1.0 / a).transpose())?;
    let transform = ls.solution.transpose().scale(a / b);
    let residual = x_next.sub(&transform.matmul(x_now)?)?.frobenius_norm();
    Ok(TransformFit {
        transform,
        rank: ls.rank,
        rank_deficient: ls.rank_deficient,
        residual,
    })
}

fn max_abs(m: &RealMatrix) -> f64 {
    m.as_slice().iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

/// Divides `m` by the modulus of its dominant eigenvalue.
pub fn spectral_normalize(m: &RealMatrix) -> Result<RealMatrix> {
    let radius = eigenvalues(m)?.spectral_radius();
    if radius == 0.0 || !radius.is_finite() {
        return Err(Error::SingularSpectrum);
    }
    Ok(m.scale(1.0 / radius))
}

/// Per-dimension linear model of the deterministic PSO,
/// `y(t+1) = A·y(t) + B·ψ` with state `y = (x, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicSystem {
    /// `θ = (α₁ + α₂)/2`, the expected attraction once `r ~ U[0,1]` is
    /// replaced by its mean.
    pub theta: f64,
    pub omega: f64,
}

impl DynamicSystem {
    pub fn new(alpha1: f64, alpha2: f64, omega: f64) -> Self {
        DynamicSystem {
            theta: (alpha1 + alpha2) / 2.0,
            omega,
        }
    }

    /// `A = [[1−θ, ω], [−θ, ω]]`.
    pub fn dynamic_matrix(&self) -> RealMatrix {
        let (t, w) = (self.theta, self.omega);
        RealMatrix::from_row_major(2, 2, vec![1.0 - t, w, -t, w]).expect("2x2")
    }

    /// `B = [θ, θ]ᵀ`.
    pub fn input_matrix(&self) -> RealMatrix {
        RealMatrix::from_row_major(2, 1, vec![self.theta, self.theta]).expect("2x1")
    }

    /// The external input `ψ`, the α-weighted mix of personal and global best.
    pub fn attractor(alpha1: f64, alpha2: f64, personal: f64, global: f64) -> f64 {
        let sum = alpha1 + alpha2;
        if sum == 0.0 {
            return personal;
        }
        (alpha1 * personal + alpha2 * global) / sum
    }
}

/// Eigenvalues of the dynamic matrix for `(α₁, α₂, ω)`.
pub fn dynamic_matrix_eigs(alpha1: f64, alpha2: f64, omega: f64) -> Result<Spectrum> {
    eigenvalues(&DynamicSystem::new(alpha1, alpha2, omega).dynamic_matrix())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    /// Every eigenvalue modulus below one.
    Stagnant,
    /// Dominant modulus exactly one.
    Critical,
    /// Some modulus above one.
    Chaotic,
}

pub fn classify(spectrum: &Spectrum, tol: f64) -> Stability {
    let r = spectrum.spectral_radius();
    if (r - 1.0).abs() <= tol {
        Stability::Critical
    } else if r < 1.0 {
        Stability::Stagnant
    } else {
        Stability::Chaotic
    }
}
