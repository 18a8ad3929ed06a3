//! Reference self-organized critical systems: the one-dimensional sandpile
//! and the Bak–Sneppen evolution model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvalancheSeries {
    pub sizes: Vec<u64>,
}

impl AvalancheSeries {
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Nonzero sizes as reals, ready for `fit_power_law`.
    pub fn positive(&self) -> Vec<f64> {
        self.sizes.iter().filter(|s| **s > 0).map(|s| *s as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandpileAudit {
    pub added: u64,
    /// Grains that left through the open right edge.
    pub lost: u64,
    pub topples: u64,
}

/// One-dimensional sandpile on sites `0..n`, tracked by column heights.
///
/// The slope at site `i` is `z_i = h_i − h_{i+1}` with `h_n = 0`. A site
/// with `z_i > z_c` topples one grain onto its right neighbour
/// (`z_i −= 2`, `z_{i±1} += 1`); the grain falls off the edge at the last
/// site. The left end is a closed wall.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sandpile {
    heights: Vec<u64>,
    z_c: u64,
    audit: SandpileAudit,
    stack: Vec<usize>,
}

impl Sandpile {
    pub fn new(n_sites: usize, z_c: u64) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::Config(format!("sandpile needs at least 2 sites, got {n_sites}")));
        }
        if z_c < 1 {
            return Err(Error::Config("critical slope must be at least 1".into()));
        }
        Ok(Sandpile {
            heights: vec![0; n_sites],
            z_c,
            audit: SandpileAudit::default(),
            stack: Vec::new(),
        })
    }

    pub fn heights(&self) -> &[u64] {
        &self.heights
    }

    pub fn audit(&self) -> SandpileAudit {
        self.audit
    }

    pub fn grains(&self) -> u64 {
        self.heights.iter().sum()
    }

    pub fn slope(&self, i: usize) -> i64 {
        let right = self.heights.get(i + 1).copied().unwrap_or(0);
        self.heights[i] as i64 - right as i64
    }

    fn unstable(&self, i: usize) -> bool {
        self.slope(i) > self.z_c as i64
    }

    /// Adds one grain at `site`, relaxes, and returns the topple count.
    pub fn add_grain(&mut self, site: usize) -> u64 {
        let n = self.heights.len();
        self.heights[site] += 1;
        self.audit.added += 1;
        let mut topples = 0;
        self.stack.clear();
        self.stack.push(site);
        while let Some(i) = self.stack.pop() {
            if !self.unstable(i) {
                continue;
            }
            self.heights[i] -= 1;
            if i + 1 < n {
                self.heights[i + 1] += 1;
            } else {
                self.audit.lost += 1;
            }
            topples += 1;
            // Only the toppled site and its neighbours changed slope.
            if i > 0 {
                self.stack.push(i - 1);
            }
            if i + 1 < n {
                self.stack.push(i + 1);
            }
            self.stack.push(i);
        }
        self.audit.topples += topples;
        topples
    }

    pub fn drive<R: Rng + ?Sized>(&mut self, n_grains: usize, rng: &mut R) -> AvalancheSeries {
        let n = self.heights.len();
        AvalancheSeries {
            sizes: (0..n_grains).map(|_| self.add_grain(rng.random_range(0..n))).collect(),
        }
    }
}

/// Drives a fresh pile with `n_grains` grains at uniformly random sites.
pub fn simulate_sandpile_1d<R: Rng + ?Sized>(
    n_sites: usize,
    z_c: u64,
    n_grains: usize,
    rng: &mut R,
) -> Result<AvalancheSeries> {
    Ok(Sandpile::new(n_sites, z_c)?.drive(n_grains, rng))
}

/// Bak–Sneppen ring of species fitnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct BakSneppen {
    fitness: Vec<f64>,
}

impl BakSneppen {
    pub fn new<R: Rng + ?Sized>(n_species: usize, rng: &mut R) -> Result<Self> {
        if n_species < 3 {
            return Err(Error::Config(format!("Bak-Sneppen ring needs at least 3 species, got {n_species}")));
        }
        Ok(BakSneppen {
            fitness: (0..n_species).map(|_| rng.random()).collect(),
        })
    }

    pub fn fitness(&self) -> &[f64] {
        &self.fitness
    }

    /// Replaces the least fit species and its two ring neighbours. Returns
    /// the minimum fitness that was removed.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let n = self.fitness.len();
        let (i, min) = self
            .fitness
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, f)| if f < acc.1 { (i, f) } else { acc });
        for j in [(i + n - 1) % n, i, (i + 1) % n] {
            self.fitness[j] = rng.random();
        }
        min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BakSneppenRun {
    pub avalanches: AvalancheSeries,
    /// Largest minimum fitness seen during warm-up; the avalanche threshold.
    pub threshold: f64,
    pub warmup_steps: usize,
}

/// Runs `n_steps` updates. The first tenth is warm-up and sets the threshold
/// to the running maximum of the minimum fitness; afterwards each maximal
/// run of steps whose minimum lies below it counts as one avalanche.
pub fn simulate_bak_sneppen<R: Rng + ?Sized>(n_species: usize, n_steps: usize, rng: &mut R) -> Result<BakSneppenRun> {
    let mut model = BakSneppen::new(n_species, rng)?;
    let warmup_steps = n_steps / 10;
    let mut threshold: f64 = 0.0;
    for _ in 0..warmup_steps {
        threshold = threshold.max(model.step(rng));
    }
    let mut sizes = Vec::new();
    let mut run = 0u64;
    for _ in warmup_steps..n_steps {
        if model.step(rng) < threshold {
            run += 1;
        } else if run > 0 {
            sizes.push(run);
            run = 0;
        }
    }
    Ok(BakSneppenRun {
        avalanches: AvalancheSeries { sizes },
        threshold,
        warmup_steps,
    })
}
