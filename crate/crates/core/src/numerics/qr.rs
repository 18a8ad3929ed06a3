//! Householder QR with column pivoting, and least squares on top of it.
//!
//! Full-rank systems are solved by back substitution on `R`. Rank-deficient
//! ones go through a complete orthogonal decomposition so the returned
//! solution is the minimum-norm least-squares solution.

use super::RealMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    /// `n×k` solution of `A·X ≈ B`.
    pub solution: RealMatrix,
    /// Numerical rank of `A`.
    pub rank: usize,
    pub rank_deficient: bool,
}

/// Applies the reflector `I − 2vvᵀ/(vᵀv)` to rows `offset..offset+v.len()`
/// of columns `cols` of `m`.
fn reflect(m: &mut RealMatrix, v: &[f64], vtv: f64, offset: usize, cols: std::ops::Range<usize>) {
    for c in cols {
        let dot: f64 = v.iter().enumerate().map(|(i, vi)| vi * m[(offset + i, c)]).sum();
        let f = 2.0 * dot / vtv;
        if f != 0.0 {
            for (i, vi) in v.iter().enumerate() {
                m[(offset + i, c)] -= f * vi;
            }
        }
    }
}

/// Householder vector annihilating `x[1..]`. Returns `(v, vᵀv, alpha)` with
/// the reflected leading entry equal to `alpha`, or `None` for a zero column.
fn householder(x: &[f64]) -> Option<(Vec<f64>, f64, f64)> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    let alpha = if x[0] > 0.0 { -norm } else { norm };
    let mut v = x.to_vec();
    v[0] -= alpha;
    let vtv: f64 = v.iter().map(|a| a * a).sum();
    if vtv == 0.0 {
        return None;
    }
    Some((v, vtv, alpha))
}

/// Minimizes `‖A·X − B‖_F` column by column.
pub fn solve_least_squares(a: &RealMatrix, b: &RealMatrix) -> Result<LeastSquares> {
    let (m, n) = (a.rows(), a.cols());
    let k = b.cols();
    if b.rows() != m {
        return Err(Error::Shape(format!(
            "least squares with {m}x{n} system and {}x{k} right-hand side",
            b.rows()
        )));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain("least squares on non-finite input".into()));
    }
    let mut r = a.clone();
    let mut rhs = b.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let steps = m.min(n);
    let mut diag_len = 0;

    for j in 0..steps {
        let (pivot, best) = (j..n)
            .map(|c| (c, (j..m).map(|i| r[(i, c)] * r[(i, c)]).sum::<f64>()))
            .fold((j, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if best <= 0.0 {
            break;
        }
        if pivot != j {
            for i in 0..m {
                let tmp = r[(i, j)];
                r[(i, j)] = r[(i, pivot)];
                r[(i, pivot)] = tmp;
            }
            perm.swap(j, pivot);
        }
        let column: Vec<f64> = (j..m).map(|i| r[(i, j)]).collect();
        let Some((v, vtv, alpha)) = householder(&column) else {
            break;
        };
        reflect(&mut r, &v, vtv, j, j + 1..n);
        reflect(&mut rhs, &v, vtv, j, 0..k);
        r[(j, j)] = alpha;
        for i in j + 1..m {
            r[(i, j)] = 0.0;
        }
        diag_len = j + 1;
    }

    let threshold = if diag_len == 0 {
        0.0
    } else {
        r[(0, 0)].abs() * m.max(n) as f64 * f64::EPSILON
    };
    let rank = (0..diag_len).take_while(|&i| r[(i, i)].abs() > threshold).count();

    let mut solution = RealMatrix::zeros(n, k);
    if rank == 0 {
        return Ok(LeastSquares {
            solution,
            rank,
            rank_deficient: n > 0,
        });
    }

    let mut y = RealMatrix::zeros(n, k);
    if rank == n {
        for c in 0..k {
            for i in (0..n).rev() {
                let mut s = rhs[(i, c)];
                for l in i + 1..n {
                    s -= r[(i, l)] * y[(l, c)];
                }
                y[(i, c)] = s / r[(i, i)];
            }
        }
    } else {
        // Tᵀ = Z·[U; 0] for the leading rank×n block T of R.
        let mut t = RealMatrix::zeros(n, rank);
        for i in 0..rank {
            for l in i..n {
                t[(l, i)] = r[(i, l)];
            }
        }
        let mut reflectors = Vec::with_capacity(rank);
        for j in 0..rank {
            let column: Vec<f64> = (j..n).map(|i| t[(i, j)]).collect();
            match householder(&column) {
                Some((v, vtv, alpha)) => {
                    reflect(&mut t, &v, vtv, j, j + 1..rank);
                    t[(j, j)] = alpha;
                    for i in j + 1..n {
                        t[(i, j)] = 0.0;
                    }
                    reflectors.push(Some((v, vtv)));
                }
                None => reflectors.push(None),
            }
        }
        // Uᵀ·w = c, then y = Z·[w; 0].
        for c in 0..k {
            for i in 0..rank {
                let mut s = rhs[(i, c)];
                for l in 0..i {
                    s -= t[(l, i)] * y[(l, c)];
                }
                y[(i, c)] = s / t[(i, i)];
            }
        }
        for (j, refl) in reflectors.iter().enumerate().rev() {
            if let Some((v, vtv)) = refl {
                reflect(&mut y, v, *vtv, j, 0..k);
            }
        }
    }

    for (i, &p) in perm.iter().enumerate() {
        for c in 0..k {
            solution[(p, c)] = y[(i, c)];
        }
    }
    Ok(LeastSquares {
        solution,
        rank,
        rank_deficient: rank < n,
    })
}
