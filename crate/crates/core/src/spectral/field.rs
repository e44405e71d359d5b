use std::sync::Arc;

use num_complex::Complex64;

use super::grid::{FieldKind, Grid, Parity};
use crate::error::{Error, Result};

/// Relative size of the imaginary residue tolerated when returning to
/// physical space.
const SYMMETRY_TOL: f64 = 1e-8;

/// Real samples of a scalar or vector field on the physical collocation grid.
///
/// Components are stored separately, each in row-major order with the last
/// axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub resolution: Vec<usize>,
    pub data: Vec<Vec<f64>>,
}

impl Samples {
    pub fn zeros(grid: &Grid, kind: FieldKind) -> Self {
        Self {
            resolution: grid.resolution().to_vec(),
            data: vec![vec![0.0; grid.points()]; grid.components(kind)],
        }
    }

    /// Evaluates `f` at every collocation point.
    pub fn from_fn(grid: &Grid, kind: FieldKind, f: impl Fn(&[f64; 3]) -> [f64; 3]) -> Self {
        let mut s = Self::zeros(grid, kind);
        for idx in 0..grid.points() {
            let x = grid.point(&grid.unravel_point(idx));
            let v = f(&x);
            for (c, comp) in s.data.iter_mut().enumerate() {
                comp[idx] = v[c];
            }
        }
        s
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> Vec<f64> {
        let n = self.data[0].len();
        (0..n)
            .map(|i| self.data.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect()
    }
}

/// Fourier coefficients of a real scalar or vector field.
///
/// Coefficients are the plain ones of the periodic computational box, so the
/// zero mode is the mean and |f|² = |Ω| Σ|c_k|² on the physical domain.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<Grid>,
    kind: FieldKind,
    comps: Vec<Vec<Complex64>>,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        *self.grid == *other.grid && self.kind == other.kind && self.comps == other.comps
    }
}

impl SpectralField {
    pub fn zeros(grid: &Arc<Grid>, kind: FieldKind) -> Self {
        Self {
            grid: grid.clone(),
            kind,
            comps: vec![vec![Complex64::default(); grid.modes()]; grid.components(kind)],
        }
    }

    /// Wraps raw coefficient arrays.
    pub fn from_coeffs(
        grid: &Arc<Grid>,
        kind: FieldKind,
        comps: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        if comps.len() != grid.components(kind) || comps.iter().any(|c| c.len() != grid.modes()) {
            return Err(Error::Shape(format!(
                "expected {} components of {} modes",
                grid.components(kind),
                grid.modes()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            kind,
            comps,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.comps
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.comps
    }

    pub(crate) fn same_space(&self, other: &Self) -> Result<()> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && *self.grid != *other.grid {
            return Err(Error::GridMismatch);
        }
        if self.kind != other.kind {
            return Err(Error::Kind(format!("{:?} vs {:?}", self.kind, other.kind)));
        }
        Ok(())
    }

    pub(crate) fn require_vector(&self) -> Result<()> {
        if self.kind != FieldKind::Vector {
            return Err(Error::Kind("vector field required".into()));
        }
        Ok(())
    }

    pub(crate) fn require_scalar(&self) -> Result<()> {
        if self.kind != FieldKind::Scalar {
            return Err(Error::Kind("scalar field required".into()));
        }
        Ok(())
    }

    /// self + a·other.
    pub fn axpy(&mut self, a: f64, other: &Self) -> Result<()> {
        self.same_space(other)?;
        for (x, y) in self.comps.iter_mut().zip(&other.comps) {
            for (xi, yi) in x.iter_mut().zip(y) {
                *xi += yi * a;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.comps {
            for v in c.iter_mut() {
                *v *= a;
            }
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    /// Zeros every mode removed by the 2/3 rule.
    pub fn dealias(&mut self) {
        let keep = self.grid.dealias_mask();
        for c in &mut self.comps {
            for (v, &k) in c.iter_mut().zip(keep) {
                if !k {
                    *v = Complex64::default();
                }
            }
        }
    }

    /// True if all entries are finite.
    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter().map(|v| v.norm()))
            .fold(0.0, f64::max)
    }
}

/// Builds the periodic computational array of one component.
fn extend(grid: &Grid, parity: Parity, samples: &[f64]) -> Vec<Complex64> {
    let res = grid.resolution();
    let sign = match parity {
        Parity::Periodic => {
            return samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        }
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    let d = grid.dim();
    let ny = res[d - 1];
    let rows = samples.len() / ny;
    let mut out = vec![Complex64::default(); grid.modes()];
    for r in 0..rows {
        for j in 0..ny {
            let v = samples[r * ny + j];
            out[r * 2 * ny + j] = Complex64::new(v, 0.0);
            out[r * 2 * ny + 2 * ny - 1 - j] = Complex64::new(sign * v, 0.0);
        }
    }
    out
}

/// Applies the staggered-grid phase factor along the vertical axis.
fn apply_stagger(grid: &Grid, data: &mut [Complex64], conj: bool) {
    let stagger = grid.stagger();
    if stagger.is_empty() {
        return;
    }
    let n = stagger.len();
    for line in data.chunks_mut(n) {
        for (v, s) in line.iter_mut().zip(stagger) {
            *v *= if conj { s.conj() } else { *s };
        }
    }
}

/// Forward transform of one full computational array (in place), returning
/// true coefficients.
pub(crate) fn comp_forward(grid: &Grid, data: &mut [Complex64]) {
    grid.fft().process(data, false);
    let norm = 1.0 / grid.modes() as f64;
    for v in data.iter_mut() {
        *v *= norm;
    }
    apply_stagger(grid, data, false);
}

/// Inverse of `comp_forward`; values on the full computational lattice.
pub(crate) fn comp_inverse(grid: &Grid, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut data = coeffs.to_vec();
    apply_stagger(grid, &mut data, true);
    grid.fft().process(&mut data, true);
    data
}

/// Real part of the inverse transform on the full computational lattice.
pub(crate) fn comp_inverse_real(grid: &Grid, coeffs: &[Complex64]) -> Vec<f64> {
    comp_inverse(grid, coeffs)
        .into_iter()
        .map(|v| v.re)
        .collect()
}

/// Forward transform of a real field given on the full computational lattice.
pub(crate) fn comp_forward_real(grid: &Grid, values: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    comp_forward(grid, &mut data);
    data
}

/// Extracts the physical half of a computational-lattice array.
fn restrict(grid: &Grid, full: Vec<f64>) -> Vec<f64> {
    if grid.stagger().is_empty() {
        return full;
    }
    let d = grid.dim();
    let ny = grid.resolution()[d - 1];
    full.chunks(2 * ny)
        .flat_map(|line| line[..ny].to_vec())
        .collect()
}

/// Fourier coefficients of physical samples.
pub fn to_spectral(samples: &Samples, grid: &Arc<Grid>) -> Result<SpectralField> {
    if samples.resolution != grid.resolution() {
        return Err(Error::Shape(format!(
            "samples have resolution {:?}, grid has {:?}",
            samples.resolution,
            grid.resolution()
        )));
    }
    let kind = match samples.data.len() {
        1 => FieldKind::Scalar,
        n if n == grid.dim() => FieldKind::Vector,
        n => {
            return Err(Error::Shape(format!(
                "{n} components on a {}D grid",
                grid.dim()
            )))
        }
    };
    if samples.data.iter().any(|c| c.len() != grid.points()) {
        return Err(Error::Shape(
            "component length differs from grid size".into(),
        ));
    }
    let comps = samples
        .data
        .iter()
        .enumerate()
        .map(|(c, values)| {
            let mut data = extend(grid, grid.parity(kind, c), values);
            comp_forward(grid, &mut data);
            data
        })
        .collect();
    Ok(SpectralField {
        grid: grid.clone(),
        kind,
        comps,
    })
}

/// Physical samples of a real field.
pub fn to_physical(f: &SpectralField) -> Result<Samples> {
    let grid = &f.grid;
    let values: Vec<Vec<Complex64>> = f.comps.iter().map(|c| comp_inverse(grid, c)).collect();
    // The defect is measured against the whole field: a component that is
    // pure round-off (e.g. the vertical velocity of a shear flow) has no
    // meaningful symmetry of its own.
    let flat = || values.iter().flatten();
    let scale = flat().map(|v| v.norm()).fold(0.0, f64::max);
    let defect = flat().map(|v| v.im.abs()).fold(0.0, f64::max);
    if defect > SYMMETRY_TOL * scale {
        return Err(Error::Symmetry {
            defect: defect / scale,
        });
    }
    let data = values
        .into_iter()
        .map(|v| restrict(grid, v.into_iter().map(|v| v.re).collect()))
        .collect();
    Ok(Samples {
        resolution: grid.resolution().to_vec(),
        data,
    })
}
