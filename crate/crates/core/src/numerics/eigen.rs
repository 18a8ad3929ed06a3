//! Eigenvalues of a general real matrix: balancing, Householder reduction to
//! upper Hessenberg form, then Francis double-shift QR iteration.

use num_complex::Complex64;

use super::RealMatrix;
use crate::{Error, Result};

/// Eigenvalues sorted by descending modulus, ties broken by descending real
/// part and then descending imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(mut eigenvalues: Vec<Complex64>) -> Self {
        eigenvalues.sort_by(|a, b| {
            b.norm()
                .total_cmp(&a.norm())
                .then(b.re.total_cmp(&a.re))
                .then(b.im.total_cmp(&a.im))
        });
        Spectrum { eigenvalues }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// The dominant eigenvalue `λ₁`.
    pub fn leading(&self) -> Option<Complex64> {
        self.eigenvalues.first().copied()
    }

    /// `|λ₁|`, zero for an empty spectrum.
    pub fn spectral_radius(&self) -> f64 {
        self.leading().map_or(0.0, |l| l.norm())
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| l.norm()).collect()
    }
}

const SWEEPS_PER_DIM: usize = 100;

pub fn eigenvalues(m: &RealMatrix) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "eigenvalues of a non-square {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::Domain("eigenvalues of a non-finite matrix".into()));
    }
    let n = m.rows();
    // Work on m / max|mᵢⱼ| so squared intermediates cannot overflow or
    // underflow, then scale the eigenvalues back.
    let scale = m.as_slice().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return Ok(Spectrum::new(vec![Complex64::new(0.0, 0.0); n]));
    }
    // 1-based working copy keeps the QR sweep close to its textbook form.
    let mut a = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = m[(i, j)] / scale;
        }
    }
    balance(&mut a, n);
    hessenberg(&mut a, n);
    let values = hqr(&mut a, n)?;
    Ok(Spectrum::new(values.into_iter().map(|l| l * scale).collect()))
}

/// Diagonal similarity scaling by powers of two so row and column norms are
/// comparable.
fn balance(a: &mut [Vec<f64>], n: usize) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 1..=n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 1..=n {
                        a[i][j] *= g;
                    }
                    for j in 1..=n {
                        a[j][i] *= f;
                    }
                }
            }
        }
    }
}

/// Orthogonal similarity reduction to upper Hessenberg form.
fn hessenberg(a: &mut [Vec<f64>], n: usize) {
    if n < 3 {
        return;
    }
    for k in 1..=n - 2 {
        let x: Vec<f64> = (k + 1..=n).map(|i| a[i][k]).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|t| t * t).sum();
        if vtv == 0.0 {
            continue;
        }
        // H ← P·H
        for j in k..=n {
            let dot: f64 = v.iter().enumerate().map(|(i, vi)| vi * a[k + 1 + i][j]).sum();
            let f = 2.0 * dot / vtv;
            for (i, vi) in v.iter().enumerate() {
                a[k + 1 + i][j] -= f * vi;
            }
        }
        // H ← H·P
        for row in a.iter_mut().take(n + 1).skip(1) {
            let dot: f64 = v.iter().enumerate().map(|(j, vj)| vj * row[k + 1 + j]).sum();
            let f = 2.0 * dot / vtv;
            for (j, vj) in v.iter().enumerate() {
                row[k + 1 + j] -= f * vj;
            }
        }
        a[k + 1][k] = alpha;
        for row in a.iter_mut().take(n + 1).skip(k + 2) {
            row[k] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (1-based), after
/// the EISPACK `hqr` routine.
fn hqr(a: &mut [Vec<f64>], n: usize) -> Result<Vec<Complex64>> {
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let max_sweeps = SWEEPS_PER_DIM * n.max(1);
    let mut sweeps = 0usize;
    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    let (mut x, mut y, mut z, mut w, mut s);

    while nn >= 1 {
        let mut its = 0;
        loop {
            // Look for a single small subdiagonal element.
            let mut l = nn;
            while l >= 2 {
                s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            y = a[nn - 1][nn - 1];
            w = a[nn][nn - 1] * a[nn - 1][nn];
            if l == nn - 1 {
                p = 0.5 * (y - x);
                q = p * p + w;
                z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + z.copysign(p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - w / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = z;
                    wi[nn] = -z;
                }
                nn -= 2;
                break;
            }
            sweeps += 1;
            if sweeps > max_sweeps {
                return Err(Error::NoConvergence(max_sweeps));
            }
            if its > 0 && its % 10 == 0 {
                // Exceptional shift.
                t += x;
                for i in 1..=nn {
                    a[i][i] -= x;
                }
                s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let mut m = nn - 2;
            loop {
                z = a[m][m];
                r = x - z;
                s = y - z;
                p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - r - s;
                r = a[m + 2][m + 1];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = 0.0;
                    if k != nn - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        p = a[k][j] + q * a[k + 1][j];
                        if k != nn - 1 {
                            p += r * a[k + 2][j];
                            a[k + 2][j] -= p * z;
                        }
                        a[k + 1][j] -= p * y;
                        a[k][j] -= p * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for row in a.iter_mut().take(mmin + 1).skip(l) {
                        p = x * row[k] + y * row[k + 1];
                        if k != nn - 1 {
                            p += z * row[k + 2];
                            row[k + 2] -= p * r;
                        }
                        row[k + 1] -= p * q;
                        row[k] -= p;
                    }
                }
                k += 1;
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}
