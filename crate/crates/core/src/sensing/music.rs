use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{cis, hermitian_eigen_desc, CMat, C64};
use crate::scenario::{uv_to_angles, Angles};

/// Upper bound applied to spectrum values whose noise-space projection vanishes.
pub const SPECTRUM_CAP: f64 = 1e12;

/// Signal and noise subspaces of a covariance matrix.
#[derive(Debug, Clone)]
pub struct SubspacePair {
    pub signal: CMat,
    pub noise: CMat,
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

/// Split `r` into its `k_sources` dominant eigenvectors and the rest.
pub fn subspace_split(r: &CMat, k_sources: usize) -> Result<SubspacePair> {
    let m = r.nrows();
    if r.ncols() != m {
        return Err(Error::Dimension("covariance must be square".into()));
    }
    if k_sources >= m {
        return Err(Error::Domain(format!(
            "{k_sources} sources leave no noise subspace in a {m}-element array"
        )));
    }
    let (eigenvalues, vectors) = hermitian_eigen_desc(r);
    Ok(SubspacePair {
        signal: vectors.columns(0, k_sources).into_owned(),
        noise: vectors.columns(k_sources, m - k_sources).into_owned(),
        eigenvalues,
    })
}

/// Rectangular `(u, v)` search grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Whether the last point on each axis aliases the first, as it does for
    /// a full `[-pi, pi]` span at half-wavelength spacing.
    pub periodic: bool,
}

impl SearchGrid {
    /// `points` uniformly spaced values over `[-pi, pi]` on both axes.
    pub fn uniform(points: usize) -> Self {
        let axis: Vec<f64> =
            (0..points).map(|i| -PI + 2.0 * PI * i as f64 / (points - 1) as f64).collect();
        SearchGrid { u: axis.clone(), v: axis, periodic: true }
    }

    pub fn from_axes(u: Vec<f64>, v: Vec<f64>) -> Self {
        SearchGrid { u, v, periodic: false }
    }

    pub fn step_u(&self) -> f64 {
        self.u[1] - self.u[0]
    }

    pub fn step_v(&self) -> f64 {
        self.v[1] - self.v[0]
    }
}

#[derive(Debug, Clone)]
pub struct MusicSpectrum {
    pub grid: SearchGrid,
    /// Row-major over `u`: entry `iu * v.len() + iv`.
    pub power: Vec<f64>,
}

impl MusicSpectrum {
    pub fn at(&self, iu: usize, iv: usize) -> f64 {
        self.power[iu * self.grid.v.len() + iv]
    }

    /// Grid cell of the global maximum.
    pub fn argmax(&self) -> (usize, usize) {
        let nv = self.grid.v.len();
        let (idx, _) = self
            .power
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
        (idx / nv, idx % nv)
    }
}

/// Evaluate `1 / ||E_o^H a(u, v)||^2` for the `my x mz` sensing array on every grid cell.
pub fn music_spectrum(noise: &CMat, grid: &SearchGrid, my: usize, mz: usize) -> Result<MusicSpectrum> {
    if noise.ncols() == 0 {
        return Err(Error::Domain("empty noise subspace".into()));
    }
    if noise.nrows() != my * mz {
        return Err(Error::Dimension(format!(
            "noise basis has {} rows, array has {} elements",
            noise.nrows(),
            my * mz
        )));
    }
    if grid.u.is_empty() || grid.v.is_empty() {
        return Err(Error::Domain("empty search grid".into()));
    }
    let p = noise.ncols();
    // a(u,v)^H E_o factorizes over the Kronecker structure: first fold the
    // row index against e^{-j y u}, then the column index against e^{-j z v}.
    let v_phasors: Vec<Vec<C64>> =
        grid.v.iter().map(|&v| (0..mz).map(|z| cis(-(z as f64) * v)).collect()).collect();
    let power: Vec<f64> = grid
        .u
        .par_iter()
        .flat_map_iter(|&u| {
            let mut folded = vec![C64::new(0.0, 0.0); mz * p];
            for y in 0..my {
                let w = cis(-(y as f64) * u);
                for z in 0..mz {
                    let row = y * mz + z;
                    for c in 0..p {
                        folded[z * p + c] += w * noise[(row, c)];
                    }
                }
            }
            let v_phasors = &v_phasors;
            (0..v_phasors.len()).map(move |iv| {
                let ph = &v_phasors[iv];
                let mut denom = 0.0;
                for c in 0..p {
                    let mut acc = C64::new(0.0, 0.0);
                    for z in 0..mz {
                        acc += ph[z] * folded[z * p + c];
                    }
                    denom += acc.norm_sqr();
                }
                (1.0 / denom).min(SPECTRUM_CAP)
            })
        })
        .collect();
    Ok(MusicSpectrum { grid: grid.clone(), power })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Peak {
    pub u_index: usize,
    pub v_index: usize,
    pub u: f64,
    pub v: f64,
    pub angles: Angles,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleEstimate {
    /// Descending by height.
    pub peaks: Vec<Peak>,
    /// Fewer than the requested number of local maxima existed.
    pub degraded: bool,
}

/// The `k_sources` highest strict local maxima over the 8-neighbourhood.
/// On a periodic grid the duplicated last row/column is skipped and
/// neighbours wrap around.
pub fn pick_peaks(spectrum: &MusicSpectrum, k_sources: usize, spacing: f64, wavelength: f64) -> AngleEstimate {
    let grid = &spectrum.grid;
    let (nu_all, nv_all) = (grid.u.len(), grid.v.len());
    let (nu, nv) = if grid.periodic { (nu_all - 1, nv_all - 1) } else { (nu_all, nv_all) };
    let mut found = Vec::new();
    for iu in 0..nu {
        for iv in 0..nv {
            let h = spectrum.at(iu, iv);
            let mut is_max = true;
            'nb: for du in [-1i64, 0, 1] {
                for dv in [-1i64, 0, 1] {
                    if du == 0 && dv == 0 {
                        continue;
                    }
                    let (ju, jv) = (iu as i64 + du, iv as i64 + dv);
                    let (ju, jv) = if grid.periodic {
                        (ju.rem_euclid(nu as i64), jv.rem_euclid(nv as i64))
                    } else if ju < 0 || jv < 0 || ju >= nu as i64 || jv >= nv as i64 {
                        continue;
                    } else {
                        (ju, jv)
                    };
                    if spectrum.at(ju as usize, jv as usize) >= h {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                found.push((iu, iv, h));
            }
        }
    }
    found.sort_by(|a, b| b.2.total_cmp(&a.2));
    let degraded = found.len() < k_sources;
    let peaks = found
        .into_iter()
        .take(k_sources)
        .map(|(iu, iv, height)| {
            let (u, v) = (grid.u[iu], grid.v[iv]);
            Peak { u_index: iu, v_index: iv, u, v, angles: uv_to_angles(u, v, spacing, wavelength), height }
        })
        .collect();
    AngleEstimate { peaks, degraded }
}
