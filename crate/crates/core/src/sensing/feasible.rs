use serde::Serialize;

use crate::phase::{circular_distance, circular_mean, wrap_phase, PhaseGrid};
use crate::scenario::{Angles, PhaseRates};

/// Eq.-style optimal reflection phase of element `(y, z)` (1-based) for a
/// BS at `bs` and a user at `user`, both given as (elevation, azimuth) seen
/// from the surface.
pub fn optimal_phase(y: usize, z: usize, bs: Angles, user: Angles, dy: f64, dz: f64, wavelength: f64) -> f64 {
    let k = 2.0 * std::f64::consts::PI / wavelength;
    let (st, sd) = (bs.elevation.sin(), user.elevation.sin());
    let ry = st * bs.azimuth.cos() + sd * user.azimuth.cos();
    let rz = st * bs.azimuth.sin() + sd * user.azimuth.sin();
    phase_from_rates(y, z, k * dy * ry, k * dz * rz)
}

/// `mod((y - 1/2) rate_y + (z - 1/2) rate_z, 2 pi)` for 1-based `(y, z)`.
pub fn phase_from_rates(y: usize, z: usize, rate_y: f64, rate_z: f64) -> f64 {
    wrap_phase((y as f64 - 0.5) * rate_y + (z as f64 - 0.5) * rate_z)
}

/// Phases that align the BS path with a user path on an `ny x nz` surface,
/// in element order `y * nz + z`.
pub fn coherent_phases(ny: usize, nz: usize, bs: PhaseRates, user: PhaseRates) -> Vec<f64> {
    let (ry, rz) = (user.u - bs.u, user.v - bs.v);
    (0..ny)
        .flat_map(|y| (0..nz).map(move |z| phase_from_rates(y + 1, z + 1, ry, rz)))
        .collect()
}

/// Contiguous run of grid indices `start, start+1, ...` modulo the grid size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Arc {
    pub start: usize,
    pub len: usize,
}

impl Arc {
    pub fn index(&self, offset: usize, levels: usize) -> usize {
        (self.start + offset) % levels
    }

    pub fn members(&self, levels: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).map(move |o| self.index(o, levels))
    }

    pub fn contains(&self, index: usize, levels: usize) -> bool {
        (index + levels - self.start) % levels < self.len
    }
}

/// Shortest circular arc of grid indices covering every index in `points`.
/// Ties go to the arc with the smaller start index.
pub fn covering_arc(points: &[usize], levels: usize) -> Arc {
    let mut q: Vec<usize> = points.iter().map(|p| p % levels).collect();
    q.sort_unstable();
    q.dedup();
    if q.len() <= 1 {
        return Arc { start: q.first().copied().unwrap_or(0), len: 1 };
    }
    let mut best: Option<Arc> = None;
    for j in 0..q.len() {
        let next = q[(j + 1) % q.len()];
        let gap = (next + levels - q[j]) % levels;
        let cand = Arc { start: next, len: levels - gap + 1 };
        best = match best {
            Some(b) if b.len < cand.len || (b.len == cand.len && b.start <= cand.start) => Some(b),
            _ => Some(cand),
        };
    }
    best.unwrap()
}

/// Per-element narrowed phase sets of one surface.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibleSetTable {
    pub grid: PhaseGrid,
    pub arcs: Vec<Arc>,
    /// Per element, the continuous optimum of every sensed user.
    pub optima: Vec<Vec<f64>>,
}

impl FeasibleSetTable {
    /// Every element may take any grid value.
    pub fn full(n_elements: usize, bits: u32) -> Self {
        let grid = PhaseGrid::new(bits);
        FeasibleSetTable {
            grid,
            arcs: vec![Arc { start: 0, len: grid.levels() }; n_elements],
            optima: vec![Vec::new(); n_elements],
        }
    }

    pub fn from_arcs(bits: u32, arcs: Vec<Arc>) -> Self {
        let n = arcs.len();
        FeasibleSetTable { grid: PhaseGrid::new(bits), arcs, optima: vec![Vec::new(); n] }
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn levels(&self) -> usize {
        self.grid.levels()
    }

    pub fn members(&self, element: usize) -> Vec<usize> {
        self.arcs[element].members(self.levels()).collect()
    }

    /// Product of arc sizes, saturating at `u128::MAX`.
    pub fn cardinality(&self) -> u128 {
        self.arcs.iter().fold(1u128, |acc, a| acc.saturating_mul(a.len as u128))
    }

    pub fn total_size(&self) -> usize {
        self.arcs.iter().map(|a| a.len).sum()
    }

    /// Arc point closest to the circular mean of the element's user optima
    /// (the arc midpoint when no optima are recorded).
    pub fn representative(&self, element: usize) -> usize {
        let arc = self.arcs[element];
        let levels = self.levels();
        let optima = &self.optima[element];
        if optima.is_empty() {
            return arc.index(arc.len / 2, levels);
        }
        let mean = circular_mean(optima);
        let mut best = (arc.start, f64::INFINITY);
        for idx in arc.members(levels) {
            let d = circular_distance(self.grid.value(idx), mean);
            if d < best.1 - 1e-12 {
                best = (idx, d);
            }
        }
        best.0
    }

    pub fn representatives(&self) -> Vec<usize> {
        (0..self.len()).map(|n| self.representative(n)).collect()
    }
}

/// Quantize each element's per-user optima and keep the shortest covering arc.
/// `per_element[n]` holds the optima of every user for element `n`.
pub fn narrow_feasible_set(per_element: &[Vec<f64>], bits: u32) -> FeasibleSetTable {
    let grid = PhaseGrid::new(bits);
    let arcs = per_element
        .iter()
        .map(|phases| {
            let q: Vec<usize> = phases.iter().map(|&p| grid.nearest(p)).collect();
            covering_arc(&q, grid.levels())
        })
        .collect();
    FeasibleSetTable { grid, arcs, optima: per_element.to_vec() }
}
