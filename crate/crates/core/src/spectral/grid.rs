use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::FftNd;
use crate::error::{Error, Result};

/// Boundary setting of the computational domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    /// Periodic in every direction.
    Torus,
    /// Periodic horizontally, walls at y = 0 and y = 1 (2D only).
    Channel,
}

/// Parity of a component under reflection through the channel walls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Periodic,
    Even,
    Odd,
}

/// Whether a field carries one component or `dim` of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Scalar,
    Vector,
}

/// A structured spectral grid.
///
/// On the torus the computational lattice coincides with the collocation
/// grid. The channel is stored as its even/odd reflection across the walls,
/// a periodic box of height 2 whose lower half is the physical domain. The
/// vertical direction is always the last axis.
pub struct Grid {
    dim: usize,
    geometry: Geometry,
    extents: Vec<f64>,
    resolution: Vec<usize>,
    shape: Vec<usize>,
    box_lengths: Vec<f64>,
    lambda1: f64,
    ints: Vec<Vec<i64>>,
    wavenumbers: Vec<Vec<f64>>,
    lambda: Vec<f64>,
    kflat: Vec<Vec<f64>>,
    keep: Vec<bool>,
    stagger: Vec<Complex64>,
    fft: FftNd,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("geometry", &self.geometry)
            .field("extents", &self.extents)
            .field("resolution", &self.resolution)
            .field("lambda1", &self.lambda1)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.geometry == other.geometry
            && self.extents == other.extents
            && self.resolution == other.resolution
    }
}

fn signed_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl Grid {
    /// Periodic box with the given side lengths and collocation points per axis.
    pub fn torus(extents: &[f64], resolution: &[usize]) -> Result<Self> {
        let dim = extents.len();
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidGrid(format!(
                "dimension {dim} not in {{2, 3}}"
            )));
        }
        Self::build(Geometry::Torus, extents, resolution)
    }

    /// 2D channel of horizontal period `length` and unit height.
    pub fn channel(length: f64, resolution: [usize; 2]) -> Result<Self> {
        Self::build(Geometry::Channel, &[length, 1.0], &resolution)
    }

    /// Builds from a descriptor (used by config and checkpoint readers).
    pub fn new(geometry: Geometry, extents: &[f64], resolution: &[usize]) -> Result<Self> {
        match geometry {
            Geometry::Torus => Self::torus(extents, resolution),
            Geometry::Channel => {
                if extents.len() != 2 || resolution.len() != 2 {
                    return Err(Error::InvalidGrid("channel geometry is 2D only".into()));
                }
                if extents[1] != 1.0 {
                    return Err(Error::InvalidGrid("channel height must be 1".into()));
                }
                Self::channel(extents[0], [resolution[0], resolution[1]])
            }
        }
    }

    fn build(geometry: Geometry, extents: &[f64], resolution: &[usize]) -> Result<Self> {
        let dim = extents.len();
        if resolution.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{} resolutions for {dim} extents",
                resolution.len()
            )));
        }
        for (&l, &n) in extents.iter().zip(resolution) {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("extent {l} must be positive")));
            }
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "resolution {n} must be even and at least 8"
                )));
            }
        }
        let mut shape = resolution.to_vec();
        let mut box_lengths = extents.to_vec();
        if geometry == Geometry::Channel {
            shape[dim - 1] *= 2;
            box_lengths[dim - 1] *= 2.0;
        }
        let ints: Vec<Vec<i64>> = shape
            .iter()
            .map(|&n| (0..n).map(|i| signed_index(i, n)).collect())
            .collect();
        let wavenumbers: Vec<Vec<f64>> = ints
            .iter()
            .zip(&box_lengths)
            .map(|(ks, &l)| ks.iter().map(|&m| 2.0 * PI * m as f64 / l).collect())
            .collect();
        let total: usize = shape.iter().product();
        let mut lambda = vec![0.0; total];
        let mut keep = vec![false; total];
        let mut kflat = vec![vec![0.0; total]; dim];
        for idx in 0..total {
            let mut rem = idx;
            let mut lam = 0.0;
            let mut kept = true;
            for axis in (0..dim).rev() {
                let i = rem % shape[axis];
                rem /= shape[axis];
                let k = wavenumbers[axis][i];
                kflat[axis][idx] = k;
                lam += k * k;
                if 3 * ints[axis][i].unsigned_abs() as usize >= shape[axis] {
                    kept = false;
                }
            }
            lambda[idx] = lam;
            keep[idx] = kept;
        }
        let lambda1 = match geometry {
            Geometry::Torus => {
                let lmax = extents.iter().cloned().fold(0.0, f64::max);
                (2.0 * PI / lmax).powi(2)
            }
            Geometry::Channel => PI * PI,
        };
        let stagger = if geometry == Geometry::Channel {
            let n = shape[dim - 1];
            ints[dim - 1]
                .iter()
                .map(|&m| Complex64::from_polar(1.0, -PI * m as f64 / n as f64))
                .collect()
        } else {
            Vec::new()
        };
        let fft = FftNd::new(&shape);
        Ok(Self {
            dim,
            geometry,
            extents: extents.to_vec(),
            resolution: resolution.to_vec(),
            shape,
            box_lengths,
            lambda1,
            ints,
            wavenumbers,
            lambda,
            kflat,
            keep,
            stagger,
            fft,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Physical side lengths.
    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    /// Collocation points per axis on the physical domain.
    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    /// Shape of the periodic computational lattice.
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Side lengths of the periodic computational box.
    pub fn box_lengths(&self) -> &[f64] {
        &self.box_lengths
    }

    /// Smallest eigenvalue of the Stokes/Laplace operators.
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// Number of lattice modes.
    pub fn modes(&self) -> usize {
        self.lambda.len()
    }

    /// Number of physical collocation points.
    pub fn points(&self) -> usize {
        self.resolution.iter().product()
    }

    /// Volume of the physical domain.
    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }

    /// Quadrature weight of one collocation point.
    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.points() as f64
    }

    /// Eigenvalue |k|² of every lattice mode.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    /// Wavenumber along `axis` of every lattice mode.
    pub fn k_axis(&self, axis: usize) -> &[f64] {
        &self.kflat[axis]
    }

    /// 2/3-rule mask: true for modes that survive dealiasing.
    pub fn dealias_mask(&self) -> &[bool] {
        &self.keep
    }

    pub(crate) fn fft(&self) -> &FftNd {
        &self.fft
    }

    pub(crate) fn stagger(&self) -> &[Complex64] {
        &self.stagger
    }

    /// Per-axis physical wavenumbers in FFT order.
    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.wavenumbers[axis]
    }

    /// Lattice index tuple of a flat mode index.
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut rem = idx;
        for axis in (0..self.dim).rev() {
            out[axis] = rem % self.shape[axis];
            rem /= self.shape[axis];
        }
        out
    }

    /// Signed integer wavevector of a flat mode index.
    pub fn mode_ints(&self, idx: usize) -> [i64; 3] {
        let pos = self.unravel(idx);
        let mut out = [0; 3];
        for axis in 0..self.dim {
            out[axis] = self.ints[axis][pos[axis]];
        }
        out
    }

    /// Physical wavevector of a flat mode index.
    pub fn kvec(&self, idx: usize) -> [f64; 3] {
        let pos = self.unravel(idx);
        let mut out = [0.0; 3];
        for axis in 0..self.dim {
            out[axis] = self.wavenumbers[axis][pos[axis]];
        }
        out
    }

    /// Flat index of a signed wavevector, if it lies on the lattice.
    pub fn index_of(&self, m: &[i64]) -> Option<usize> {
        let mut idx = 0;
        for axis in 0..self.dim {
            let n = self.shape[axis] as i64;
            if m[axis] < -n / 2 || m[axis] >= n / 2 {
                return None;
            }
            idx = idx * self.shape[axis] + m[axis].rem_euclid(n) as usize;
        }
        Some(idx)
    }

    /// True if any axis index of the mode is the Nyquist index.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let pos = self.unravel(idx);
        (0..self.dim).any(|a| pos[a] == self.shape[a] / 2)
    }

    /// Parity of a component across the channel walls.
    pub fn parity(&self, kind: FieldKind, component: usize) -> Parity {
        match (self.geometry, kind) {
            (Geometry::Torus, _) => Parity::Periodic,
            (Geometry::Channel, FieldKind::Scalar) => Parity::Odd,
            (Geometry::Channel, FieldKind::Vector) => {
                if component == self.dim - 1 {
                    Parity::Odd
                } else {
                    Parity::Even
                }
            }
        }
    }

    /// Number of components of a field of the given kind.
    pub fn components(&self, kind: FieldKind) -> usize {
        match kind {
            FieldKind::Scalar => 1,
            FieldKind::Vector => self.dim,
        }
    }

    /// Coordinates of a physical collocation point given its index tuple.
    pub fn point(&self, pos: &[usize]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            let h = self.extents[axis] / self.resolution[axis] as f64;
            x[axis] = if self.geometry == Geometry::Channel && axis == self.dim - 1 {
                (pos[axis] as f64 + 0.5) * h
            } else {
                pos[axis] as f64 * h
            };
        }
        x
    }

    /// Index tuple of a flat physical sample index.
    pub fn unravel_point(&self, idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut rem = idx;
        for axis in (0..self.dim).rev() {
            out[axis] = rem % self.resolution[axis];
            rem /= self.resolution[axis];
        }
        out
    }
}
