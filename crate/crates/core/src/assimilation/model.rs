use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{divergence_ratio, l2_norm, random_field, FieldKind, Grid, SpectralField};

/// Which equations are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Velocity coupled to temperature through buoyancy.
    Boussinesq,
    /// Forced Navier-Stokes; the temperature slot stays zero.
    #[serde(rename = "nse", alias = "navier_stokes")]
    NavierStokes,
}

impl Model {
    pub fn tag(self) -> u8 {
        match self {
            Model::Boussinesq => 1,
            Model::NavierStokes => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(Model::Boussinesq),
            2 => Some(Model::NavierStokes),
            _ => None,
        }
    }
}

/// Physical parameters and the interpolation constants.
#[derive(Debug, Clone)]
pub struct Params {
    pub nu: f64,
    pub kappa: f64,
    /// Time-independent solenoidal body force (Navier-Stokes only).
    pub force: Option<SpectralField>,
    /// Interpolant constant c.
    pub c_interp: f64,
    /// Sobolev/Ladyzhenskaya constant C.
    pub c_sob: f64,
}

impl Params {
    pub fn new(nu: f64, kappa: f64) -> Self {
        Self {
            nu,
            kappa,
            force: None,
            c_interp: 1.0,
            c_sob: 1.0,
        }
    }

    pub fn validate(&self, model: Model, grid: &Grid) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::Precondition(format!(
                "nu = {} must be positive",
                self.nu
            )));
        }
        if model == Model::Boussinesq && !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::Precondition(format!(
                "kappa = {} must be positive",
                self.kappa
            )));
        }
        if !(self.c_interp > 0.0 && self.c_sob > 0.0) {
            return Err(Error::Precondition("c and C must be positive".into()));
        }
        if let Some(f) = &self.force {
            if f.kind() != FieldKind::Vector || **f.grid() != *grid {
                return Err(Error::Precondition(
                    "force must be a vector field on the simulation grid".into(),
                ));
            }
            let r = divergence_ratio(f)?;
            if r > 1e-10 {
                return Err(Error::Precondition(format!(
                    "force has relative divergence {r:e}"
                )));
            }
        }
        Ok(())
    }

    /// |f|, zero when there is no force.
    pub fn force_norm(&self) -> f64 {
        self.force.as_ref().map_or(0.0, l2_norm)
    }
}

/// Velocity, temperature and time of a reference or nudged solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub u: SpectralField,
    pub theta: SpectralField,
    pub t: f64,
}

/// The nudged solution (w, η) has the same shape as a reference state.
pub type NudgedState = FlowState;

impl FlowState {
    /// State at rest.
    pub fn zeros(grid: &Arc<Grid>, t: f64) -> Self {
        Self {
            u: SpectralField::zeros(grid, FieldKind::Vector),
            theta: SpectralField::zeros(grid, FieldKind::Scalar),
            t,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.theta.is_finite()
    }
}

/// Seeded initial condition: divergence-free, zero-mean velocity and
/// zero-mean temperature band-limited to lattice index ≤ resolution/8 with
/// amplitudes ∝ (1 + |m|²)^(−1), scaled so that |u| = `u_l2` and
/// |θ| = `theta_l2`.
pub fn initial_state(grid: &Arc<Grid>, seed: u64, u_l2: f64, theta_l2: f64) -> FlowState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = (grid.resolution().iter().min().copied().unwrap_or(8) / 8) as f64;
    let mut u = random_field(grid, FieldKind::Vector, &mut rng, band, 2.0);
    let mut theta = random_field(grid, FieldKind::Scalar, &mut rng, band, 2.0);
    rescale(&mut u, u_l2);
    rescale(&mut theta, theta_l2);
    FlowState { u, theta, t: 0.0 }
}

fn rescale(f: &mut SpectralField, target: f64) {
    let n = l2_norm(f);
    if n > 0.0 {
        f.scale(target / n);
    } else {
        f.scale(0.0);
    }
}
