use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_BIN_SIZE: f64 = 0.2;
pub const DEFAULT_RANGE: (f64, f64) = (0.0, 25.0);

/// Fixed-width counts over `[range_min, range_max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_size: f64,
    pub range_min: f64,
    pub range_max: f64,
    pub counts: Vec<u64>,
    /// Counts rescaled so the smallest maps to 0 and the largest to 1. Absent
    /// when every bin holds the same count.
    pub normalized: Option<Vec<f64>>,
}

impl Default for Histogram {
    fn default() -> Self {
        Histogram::new(DEFAULT_BIN_SIZE, DEFAULT_RANGE.0, DEFAULT_RANGE.1).expect("valid defaults")
    }
}

impl Histogram {
    pub fn new(bin_size: f64, range_min: f64, range_max: f64) -> Result<Self> {
        if !(bin_size > 0.0 && bin_size.is_finite()) {
            return Err(Error::Config(format!("bin size must be positive, got {bin_size}")));
        }
        if !(range_max > range_min && range_min.is_finite() && range_max.is_finite()) {
            return Err(Error::Config(format!(
                "histogram range [{range_min}, {range_max}] is empty"
            )));
        }
        let raw = (range_max - range_min) / bin_size;
        // 25/0.2 must give 125 bins, not 126 through rounding noise.
        let bins = if (raw - raw.round()).abs() <= 1e-9 * raw.max(1.0) {
            raw.round()
        } else {
            raw.ceil()
        } as usize;
        Ok(Histogram {
            bin_size,
            range_min,
            range_max,
            counts: vec![0; bins.max(1)],
            normalized: None,
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Lower edge of bin `i`.
    pub fn bin_start(&self, i: usize) -> f64 {
        self.range_min + i as f64 * self.bin_size
    }

    /// Counts `value` if it is in range. Does not refresh `normalized`.
    pub fn add(&mut self, value: f64) -> bool {
        if !(value >= self.range_min && value < self.range_max) {
            return false;
        }
        let i = (((value - self.range_min) / self.bin_size).floor() as usize).min(self.counts.len() - 1);
        self.counts[i] += 1;
        true
    }

    pub fn normalize(&mut self) {
        let lo = *self.counts.iter().min().expect("at least one bin");
        let hi = *self.counts.iter().max().expect("at least one bin");
        self.normalized = (hi > lo).then(|| {
            let span = (hi - lo) as f64;
            self.counts.iter().map(|&c| (c - lo) as f64 / span).collect()
        });
    }

    pub fn clear(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.normalized = None;
    }
}

pub fn build_histogram(values: &[f64], bin_size: f64, range_min: f64, range_max: f64) -> Result<Histogram> {
    let mut h = Histogram::new(bin_size, range_min, range_max)?;
    for &v in values {
        h.add(v);
    }
    h.normalize();
    Ok(h)
}
