//! Criticality toolkit: swarm-size traces, positive-increment histograms,
//! power-law fitting, and two reference self-organized critical systems.

mod histogram;
mod powerlaw;
mod soc;

pub use histogram::{build_histogram, Histogram, DEFAULT_BIN_SIZE, DEFAULT_RANGE};
pub use powerlaw::{
    fit_exponential, fit_power_law, hurwitz_zeta, ks_distance, power_law_pdf, ExponentialFit, PdfKind,
    PowerLawFit, MIN_TAIL,
};
pub use soc::{simulate_bak_sneppen, simulate_sandpile_1d, AvalancheSeries, BakSneppen, BakSneppenRun, Sandpile, SandpileAudit};

use crate::swarm::SwarmState;
use crate::{Error, Result};

/// Mean squared Euclidean distance from each particle to the swarm centroid.
pub fn msd_to_centroid(state: &SwarmState) -> Result<f64> {
    let n = state.n_particles();
    if n < 2 {
        return Err(Error::Config(format!("MSD needs at least 2 particles, got {n}")));
    }
    let c = crate::adaptive::centroid(state);
    let total: f64 = state
        .particles
        .iter()
        .map(|p| p.position.iter().zip(&c).map(|(x, m)| (x - m) * (x - m)).sum::<f64>())
        .sum();
    Ok(total / n as f64)
}

/// Strictly positive consecutive differences, in order.
pub fn positive_increments(series: &[f64]) -> Vec<f64> {
    series
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0)
        .collect()
}

/// Mean and sample standard deviation. The deviation is 0 for one value.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Some((mean, (ss / (n - 1.0)).sqrt()))
}

/// Pointwise mean of curves that may differ in length. Entry `t` averages
/// the curves that reach `t`; the second vector holds those counts.
pub fn mean_curve(curves: &[Vec<f64>]) -> (Vec<f64>, Vec<usize>) {
    let len = curves.iter().map(Vec::len).max().unwrap_or(0);
    let mut sum = vec![0.0; len];
    let mut count = vec![0usize; len];
    for c in curves {
        for (t, v) in c.iter().enumerate() {
            sum[t] += v;
            count[t] += 1;
        }
    }
    let mean = sum.iter().zip(&count).map(|(s, &k)| s / k as f64).collect();
    (mean, count)
}
