//! Finite-rank observation operators: modal projection, volume averages and
//! mollified volume averages.

mod estimates;
mod modal;
pub mod mollifier;
mod partition;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{to_physical, to_spectral, FieldKind, Grid, Samples, SpectralField};

pub use estimates::{
    estimate_type1_constants, gradient_ratio, smoothed_gradient_bound_check, GradientBoundReport,
    Type1Constants,
};
pub use modal::ModalBasis;
pub use mollifier::mollifier_rho;
pub use partition::Partition;

/// Variant tag shared by interpolants and observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolantKind {
    Modal,
    Volume,
    SmoothedVolume,
}

impl InterpolantKind {
    pub fn tag(self) -> u8 {
        match self {
            Self::Modal => 1,
            Self::Volume => 2,
            Self::SmoothedVolume => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(Self::Modal),
            2 => Some(Self::Volume),
            3 => Some(Self::SmoothedVolume),
            _ => None,
        }
    }
}

impl fmt::Display for InterpolantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Modal => "modal",
            Self::Volume => "volume",
            Self::SmoothedVolume => "smoothed_volume",
        })
    }
}

/// Serializable description from which an interpolant is rebuilt on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolantSpec {
    pub kind: InterpolantKind,
    /// Retained mode count (modal).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    /// Cells per axis (volume variants).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<usize>>,
    /// Interpolant constant c; sets the modal h.
    pub c_interp: f64,
}

#[derive(Debug, Clone)]
enum Variant {
    Modal(ModalBasis),
    Volume(Partition),
    Smoothed {
        partition: Partition,
        epsilon: f64,
        kernel_hat: Vec<f64>,
    },
}

/// A coarse observation operator bound to one grid.
#[derive(Debug, Clone)]
pub struct Interpolant {
    grid: Arc<Grid>,
    h: f64,
    variant: Variant,
}

/// One snapshot of coarse data.
///
/// Modal payloads hold, for each component and each retained mode in basis
/// order, the real and imaginary part of the coefficient in the orthonormal
/// basis (√|Ω| times the Fourier coefficient). Volume payloads hold the cell
/// averages of each component in cell order.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub kind: InterpolantKind,
    pub time: f64,
    pub components: usize,
    pub payload: Vec<f64>,
}

impl Interpolant {
    /// Projection onto the first `n` nonzero lattice modes.
    pub fn modal(grid: &Arc<Grid>, n: usize, c_interp: f64) -> Result<Self> {
        check_c(c_interp)?;
        let basis = ModalBasis::new(grid, n)?;
        let h = 1.0 / (c_interp * basis.lambda_n().sqrt());
        Ok(Self {
            grid: grid.clone(),
            h,
            variant: Variant::Modal(basis),
        })
    }

    /// Projection onto every mode with λ ≤ 1/(c h)², reporting `h` as given.
    pub fn modal_for_h(grid: &Arc<Grid>, h: f64, c_interp: f64) -> Result<Self> {
        check_c(c_interp)?;
        if !(h > 0.0) {
            return Err(Error::Interpolant(format!("h = {h} must be positive")));
        }
        let basis = ModalBasis::up_to(grid, (1.0 / (c_interp * h)).powi(2))?;
        Ok(Self {
            grid: grid.clone(),
            h,
            variant: Variant::Modal(basis),
        })
    }

    /// Piecewise-constant cell averages on a partition.
    pub fn volume(grid: &Arc<Grid>, partition: Partition) -> Self {
        Self {
            grid: grid.clone(),
            h: partition.diameter(),
            variant: Variant::Volume(partition),
        }
    }

    /// Cell averages reconstructed with mollified indicators, ε = h/10.
    pub fn smoothed_volume(grid: &Arc<Grid>, partition: Partition) -> Self {
        let h = partition.diameter();
        let epsilon = h / 10.0;
        let kernel_hat = tabulate_kernel(grid, epsilon);
        Self {
            grid: grid.clone(),
            h,
            variant: Variant::Smoothed {
                partition,
                epsilon,
                kernel_hat,
            },
        }
    }

    pub fn from_spec(grid: &Arc<Grid>, spec: &InterpolantSpec) -> Result<Self> {
        let cells = || {
            spec.cells
                .as_deref()
                .ok_or_else(|| Error::Interpolant("volume interpolant needs cells".into()))
        };
        match spec.kind {
            InterpolantKind::Modal => {
                let n = spec
                    .modes
                    .ok_or_else(|| Error::Interpolant("modal interpolant needs modes".into()))?;
                Self::modal(grid, n, spec.c_interp)
            }
            InterpolantKind::Volume => Ok(Self::volume(grid, Partition::new(grid, cells()?)?)),
            InterpolantKind::SmoothedVolume => {
                Ok(Self::smoothed_volume(grid, Partition::new(grid, cells()?)?))
            }
        }
    }

    pub fn spec(&self, c_interp: f64) -> InterpolantSpec {
        InterpolantSpec {
            kind: self.kind(),
            modes: match &self.variant {
                Variant::Modal(b) => Some(b.len()),
                _ => None,
            },
            cells: self.partition().map(|p| p.cells_per_axis().to_vec()),
            c_interp,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn kind(&self) -> InterpolantKind {
        match self.variant {
            Variant::Modal(_) => InterpolantKind::Modal,
            Variant::Volume(_) => InterpolantKind::Volume,
            Variant::Smoothed { .. } => InterpolantKind::SmoothedVolume,
        }
    }

    /// Resolution length h.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Mollification radius (smoothed variant only).
    pub fn epsilon(&self) -> Option<f64> {
        match self.variant {
            Variant::Smoothed { epsilon, .. } => Some(epsilon),
            _ => None,
        }
    }

    pub fn partition(&self) -> Option<&Partition> {
        match &self.variant {
            Variant::Modal(_) => None,
            Variant::Volume(p) | Variant::Smoothed { partition: p, .. } => Some(p),
        }
    }

    pub fn modal_basis(&self) -> Option<&ModalBasis> {
        match &self.variant {
            Variant::Modal(b) => Some(b),
            _ => None,
        }
    }

    /// Payload length of an observation of a field with `components` components.
    pub fn payload_len(&self, components: usize) -> usize {
        match &self.variant {
            Variant::Modal(b) => 2 * b.len() * components,
            Variant::Volume(p) | Variant::Smoothed { partition: p, .. } => p.len() * components,
        }
    }

    fn check_grid(&self, f: &SpectralField) -> Result<()> {
        if !Arc::ptr_eq(&self.grid, f.grid()) && *self.grid != **f.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Coarse data of `f` at time `time`.
    pub fn observe_at(&self, f: &SpectralField, time: f64) -> Result<Observation> {
        self.check_grid(f)?;
        let payload = match &self.variant {
            Variant::Modal(b) => {
                let scale = self.grid.volume().sqrt();
                let mut out = Vec::with_capacity(self.payload_len(f.components().len()));
                for comp in f.components() {
                    for &idx in b.indices() {
                        out.push(comp[idx].re * scale);
                        out.push(comp[idx].im * scale);
                    }
                }
                out
            }
            Variant::Volume(p) | Variant::Smoothed { partition: p, .. } => {
                cell_averages(&self.grid, p, &to_physical(f)?)
            }
        };
        Ok(Observation {
            kind: self.kind(),
            time,
            components: f.components().len(),
            payload,
        })
    }

    /// Coarse data of `f` (timestamp 0).
    pub fn observe(&self, f: &SpectralField) -> Result<Observation> {
        self.observe_at(f, 0.0)
    }

    /// Field described by the coarse data.
    pub fn reconstruct(&self, obs: &Observation) -> Result<SpectralField> {
        if obs.kind != self.kind() {
            return Err(Error::ObservationMismatch {
                expected: self.kind().to_string(),
                found: obs.kind.to_string(),
            });
        }
        let kind = match obs.components {
            1 => FieldKind::Scalar,
            n if n == self.grid.dim() => FieldKind::Vector,
            n => return Err(Error::Shape(format!("{n} observed components"))),
        };
        if obs.payload.len() != self.payload_len(obs.components) {
            return Err(Error::Shape(format!(
                "payload of {} values, interpolant expects {}",
                obs.payload.len(),
                self.payload_len(obs.components)
            )));
        }
        match &self.variant {
            Variant::Modal(b) => {
                let scale = 1.0 / self.grid.volume().sqrt();
                let mut f = SpectralField::zeros(&self.grid, kind);
                let per = 2 * b.len();
                for (c, comp) in f.components_mut().iter_mut().enumerate() {
                    let chunk = &obs.payload[c * per..(c + 1) * per];
                    for (j, &idx) in b.indices().iter().enumerate() {
                        comp[idx] = Complex64::new(chunk[2 * j], chunk[2 * j + 1]) * scale;
                    }
                }
                Ok(f)
            }
            Variant::Volume(p) => {
                let s = piecewise(&self.grid, p, &obs.payload, obs.components, None);
                to_spectral(&s, &self.grid)
            }
            Variant::Smoothed {
                partition,
                epsilon,
                kernel_hat,
            } => {
                let s = piecewise(
                    &self.grid,
                    partition,
                    &obs.payload,
                    obs.components,
                    Some(*epsilon),
                );
                let mut f = to_spectral(&s, &self.grid)?;
                for comp in f.components_mut() {
                    for (v, &k) in comp.iter_mut().zip(kernel_hat) {
                        *v *= k;
                    }
                }
                Ok(f)
            }
        }
    }

    /// I_h f, i.e. `reconstruct(observe(f))`.
    pub fn apply(&self, f: &SpectralField) -> Result<SpectralField> {
        self.reconstruct(&self.observe(f)?)
    }

    /// Shape function φ_α of one cell (volume variants), as a scalar field.
    pub fn shape_function(&self, alpha: usize) -> Result<SpectralField> {
        let p = self
            .partition()
            .ok_or_else(|| Error::Interpolant("modal interpolant has no cells".into()))?;
        if alpha >= p.len() {
            return Err(Error::Interpolant(format!("cell {alpha} out of range")));
        }
        let mut payload = vec![0.0; p.len()];
        payload[alpha] = 1.0;
        self.reconstruct(&Observation {
            kind: self.kind(),
            time: 0.0,
            components: 1,
            payload,
        })
    }

    /// Σ_α |v̄_α|² of the observation (volume variants) or Σ|û|² (modal).
    pub fn payload_energy(obs: &Observation) -> f64 {
        obs.payload.iter().map(|x| x * x).sum()
    }
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Interpolant(format!("c = {c} must be positive")));
    }
    Ok(())
}

fn cell_averages(grid: &Grid, p: &Partition, s: &Samples) -> Vec<f64> {
    let n = p.len();
    let mut out = vec![0.0; n * s.data.len()];
    let cells: Vec<usize> = (0..grid.points())
        .map(|idx| p.cell_of_point(&grid.unravel_point(idx)))
        .collect();
    let inv = 1.0 / p.points_per_cell() as f64;
    for (c, comp) in s.data.iter().enumerate() {
        let dst = &mut out[c * n..(c + 1) * n];
        for (&alpha, &v) in cells.iter().zip(comp) {
            dst[alpha] += v;
        }
        for v in dst.iter_mut() {
            *v *= inv;
        }
    }
    out
}

/// Samples of Σ_α v̄_α ψ_α; `epsilon` enables the wall-shrunk boundary cells.
fn piecewise(
    grid: &Grid,
    p: &Partition,
    payload: &[f64],
    components: usize,
    epsilon: Option<f64>,
) -> Samples {
    let n = p.len();
    let mut data = vec![vec![0.0; grid.points()]; components];
    for idx in 0..grid.points() {
        let pos = grid.unravel_point(idx);
        let alpha = p.cell_of_point(&pos);
        if let Some(eps) = epsilon {
            if p.is_boundary(alpha) && !p.in_shape(alpha, &grid.point(&pos), eps) {
                continue;
            }
        }
        for (c, comp) in data.iter_mut().enumerate() {
            comp[idx] = payload[c * n + alpha];
        }
    }
    Samples {
        resolution: grid.resolution().to_vec(),
        data,
    }
}

/// Spectral multiplier of discrete convolution with ρ_ε, normalized to unit
/// discrete mass.
fn tabulate_kernel(grid: &Grid, epsilon: f64) -> Vec<f64> {
    let d = grid.dim();
    let shape = grid.shape();
    let spacing: Vec<f64> = grid
        .box_lengths()
        .iter()
        .zip(shape)
        .map(|(&l, &n)| l / n as f64)
        .collect();
    let mut data: Vec<Complex64> = (0..grid.modes())
        .map(|idx| {
            let pos = grid.unravel(idx);
            let mut r2 = 0.0;
            for axis in 0..d {
                let n = shape[axis];
                let j = pos[axis] as f64;
                let off = if pos[axis] <= n / 2 { j } else { j - n as f64 };
                let x = off * spacing[axis];
                r2 += x * x;
            }
            let r = r2.sqrt();
            Complex64::new(mollifier_rho(r, epsilon, d).unwrap_or(0.0), 0.0)
        })
        .collect();
    grid.fft().process(&mut data, false);
    let mass = data[0].re;
    data.into_iter().map(|v| v.re / mass).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{l2_norm, random_field};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Arc<Grid> {
        Arc::new(Grid::torus(&[1.0, 1.0], &[64, 64]).unwrap())
    }

    fn constant(g: &Arc<Grid>, c: f64) -> SpectralField {
        let s = Samples::from_fn(g, FieldKind::Scalar, |_| [c, 0.0, 0.0]);
        to_spectral(&s, g).unwrap()
    }

    #[test]
    fn constant_field_has_constant_averages() {
        let g = grid();
        let ip = Interpolant::volume(&g, Partition::new(&g, &[8, 8]).unwrap());
        let obs = ip.observe(&constant(&g, 1.75)).unwrap();
        assert!(obs.payload.iter().all(|&v| (v - 1.75).abs() < 1e-14));
        let back = to_physical(&ip.reconstruct(&obs).unwrap()).unwrap();
        assert!(back.data[0].iter().all(|&v| (v - 1.75).abs() < 1e-13));
    }

    #[test]
    fn smoothed_constant_is_constant_away_from_faces() {
        let g = grid();
        let ip = Interpolant::smoothed_volume(&g, Partition::new(&g, &[4, 4]).unwrap());
        let out = to_physical(&ip.apply(&constant(&g, 3.0)).unwrap()).unwrap();
        assert!(out.data[0].iter().all(|&v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let g = grid();
        let modal = Interpolant::modal(&g, 8, 1.0).unwrap();
        let vol = Interpolant::volume(&g, Partition::new(&g, &[4, 4]).unwrap());
        let obs = vol.observe(&constant(&g, 1.0)).unwrap();
        assert!(matches!(
            modal.reconstruct(&obs),
            Err(Error::ObservationMismatch { .. })
        ));
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let g = grid();
        let other = Arc::new(Grid::torus(&[1.0, 1.0], &[32, 32]).unwrap());
        let ip = Interpolant::modal(&g, 8, 1.0).unwrap();
        let f = SpectralField::zeros(&other, FieldKind::Scalar);
        assert!(matches!(ip.observe(&f), Err(Error::GridMismatch)));
    }

    #[test]
    fn modal_projection_of_band_limited_field_is_lossless() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_field(&g, FieldKind::Vector, &mut rng, 2.0, 0.0);
        let ip =
            Interpolant::modal_for_h(&g, 1.0 / (2.0 * std::f64::consts::PI * 3.0), 1.0).unwrap();
        let back = ip.apply(&f).unwrap();
        assert!(l2_norm(&back.sub(&f).unwrap()) < 1e-14 * l2_norm(&f));
    }

    #[test]
    fn shape_functions_nonnegative_and_localized() {
        let g = Arc::new(Grid::channel(1.0, [64, 64]).unwrap());
        let p = Partition::new(&g, &[4, 4]).unwrap();
        let ip = Interpolant::smoothed_volume(&g, p.clone());
        let eps = ip.epsilon().unwrap();
        for alpha in [0, 5, 15] {
            let phi = to_physical(&ip.shape_function(alpha).unwrap()).unwrap();
            let (lo, hi) = p.bounds(alpha);
            for idx in 0..g.points() {
                let x = g.point(&g.unravel_point(idx));
                let v = phi.data[0][idx];
                assert!(v >= -1e-12);
                let outside = (0..2).any(|a| x[a] < lo[a] - eps || x[a] > hi[a] + eps);
                // Horizontal periodic images are also within reach.
                let wrapped = (x[0] - lo[0] + 1.0).rem_euclid(1.0) < (hi[0] - lo[0]) + eps
                    || (lo[0] - x[0] + 1.0).rem_euclid(1.0) < eps;
                if outside && !wrapped {
                    assert!(v.abs() < 1e-12, "cell {alpha} leaks {v} at {x:?}");
                }
            }
        }
    }
}
