//! Benchmark fitness functions. All of them are minimized.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Anything that maps a position to a fitness value.
pub trait Objective {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64,
{
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveId {
    Sphere,
    Rastrigin,
    Griewank,
    Schwefel,
}

impl ObjectiveId {
    pub const ALL: [ObjectiveId; 4] = [
        ObjectiveId::Sphere,
        ObjectiveId::Rastrigin,
        ObjectiveId::Griewank,
        ObjectiveId::Schwefel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveId::Sphere => "sphere",
            ObjectiveId::Rastrigin => "rastrigin",
            ObjectiveId::Griewank => "griewank",
            ObjectiveId::Schwefel => "schwefel",
        }
    }

    /// Known global minimum value in `dims` dimensions.
    pub fn optimum(self, dims: usize) -> f64 {
        match self {
            ObjectiveId::Schwefel => -418.982_887_272_433_9 * dims as f64,
            _ => 0.0,
        }
    }
}

impl Objective for ObjectiveId {
    fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            ObjectiveId::Sphere => sphere(x),
            ObjectiveId::Rastrigin => rastrigin(x),
            ObjectiveId::Griewank => griewank(x),
            ObjectiveId::Schwefel => schwefel(x),
        }
    }
}

impl fmt::Display for ObjectiveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ObjectiveId::ALL
            .into_iter()
            .find(|o| o.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown objective `{s}`"))
    }
}

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn rastrigin(x: &[f64]) -> f64 {
    x.iter()
        .map(|v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0)
        .sum()
}

/// The product term uses 1-based indices: `cos(x_i / √i)` for `i = 1..=D`.
pub fn griewank(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().map(|v| v * v).sum();
    let prod: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product();
    sum / 4000.0 - prod + 1.0
}

pub fn schwefel(x: &[f64]) -> f64 {
    x.iter().map(|v| -v * v.abs().sqrt().sin()).sum()
}
