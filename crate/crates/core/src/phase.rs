//! Discrete phase grids and surface reflection configurations.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::linalg::{cis, C64};

/// Wrap an angle into `[0, 2 pi)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU { 0.0 } else { w }
}

/// Distance between two angles on the circle, in `[0, pi]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_phase(a - b);
    if d > PI { TAU - d } else { d }
}

/// Circular mean of a set of angles, wrapped into `[0, 2 pi)`.
pub fn circular_mean(angles: &[f64]) -> f64 {
    let (s, c) = angles.iter().fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    wrap_phase(s.atan2(c))
}

/// Uniform grid of `2^bits` phase levels `{0, step, ..., (2^bits - 1) step}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub bits: u32,
}

impl PhaseGrid {
    pub fn new(bits: u32) -> Self {
        PhaseGrid { bits }
    }

    pub fn levels(&self) -> usize {
        1usize << self.bits
    }

    pub fn step(&self) -> f64 {
        TAU / self.levels() as f64
    }

    pub fn value(&self, index: usize) -> f64 {
        (index % self.levels()) as f64 * self.step()
    }

    /// Index of the grid point nearest to `theta` under circular distance.
    pub fn nearest(&self, theta: f64) -> usize {
        let l = self.levels() as i64;
        ((wrap_phase(theta) / self.step()).round() as i64).rem_euclid(l) as usize
    }
}

/// Reflection phases of one surface, optionally tied to a discrete grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    phases: Vec<f64>,
    grid: Option<(PhaseGrid, Vec<usize>)>,
}

impl PhaseConfig {
    pub fn continuous(phases: Vec<f64>) -> Self {
        PhaseConfig { phases: phases.into_iter().map(wrap_phase).collect(), grid: None }
    }

    pub fn discrete(grid: PhaseGrid, indices: Vec<usize>) -> Self {
        let indices: Vec<usize> = indices.into_iter().map(|i| i % grid.levels()).collect();
        PhaseConfig { phases: indices.iter().map(|&i| grid.value(i)).collect(), grid: Some((grid, indices)) }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn grid(&self) -> Option<PhaseGrid> {
        self.grid.as_ref().map(|(g, _)| *g)
    }

    /// Grid indices when the configuration is discrete.
    pub fn indices(&self) -> Option<&[usize]> {
        self.grid.as_ref().map(|(_, i)| i.as_slice())
    }

    /// Unit-modulus reflection coefficients `e^{j theta_n}`.
    pub fn coefficients(&self) -> Vec<C64> {
        self.phases.iter().map(|&t| cis(t)).collect()
    }
}
