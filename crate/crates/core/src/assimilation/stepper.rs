//! Crank–Nicolson / Adams–Bashforth-2 time stepping of the reference and
//! nudged systems.

use std::sync::Arc;

use num_complex::Complex64;

use super::model::{FlowState, Model, Params};
use crate::error::{Error, Result};
use crate::interpolants::{Interpolant, Observation};
use crate::spectral::{advection_terms, leray_in_place, FieldKind, Grid, SpectralField};

/// Largest advective Courant number accepted by a step.
pub const MAX_CFL: f64 = 0.5;

/// Largest μ·dt accepted for explicitly treated nudging.
pub const MAX_MU_DT: f64 = 0.5;

#[derive(Debug, Clone)]
struct Nudging {
    mu: f64,
    interpolant: Arc<Interpolant>,
    /// Retained modes of a modal interpolant (nudged implicitly).
    modal: Option<Vec<bool>>,
}

/// Explicit terms of the previous step, kept for Adams–Bashforth.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub velocity: SpectralField,
    pub temperature: SpectralField,
}

/// Multi-step integrator for one trajectory.
///
/// Linear dissipation (and modal nudging) is treated by Crank–Nicolson,
/// advection, buoyancy coupling and volume nudging by Adams–Bashforth-2 with
/// a forward-Euler first step.
#[derive(Debug, Clone)]
pub struct Stepper {
    model: Model,
    params: Params,
    dt: f64,
    nudging: Option<Nudging>,
    history: Option<History>,
}

impl Stepper {
    /// Integrator of the unobserved system.
    pub fn reference(grid: &Grid, model: Model, params: &Params, dt: f64) -> Result<Self> {
        params.validate(model, grid)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Precondition(format!("dt = {dt} must be positive")));
        }
        Ok(Self {
            model,
            params: params.clone(),
            dt,
            nudging: None,
            history: None,
        })
    }

    /// Integrator of the nudged system. With `mu == 0` the nudging term is
    /// skipped entirely and the result matches [`Stepper::reference`] bit for
    /// bit.
    pub fn nudged(
        grid: &Grid,
        model: Model,
        params: &Params,
        dt: f64,
        mu: f64,
        interpolant: Arc<Interpolant>,
    ) -> Result<Self> {
        let mut s = Self::reference(grid, model, params, dt)?;
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::Precondition(format!(
                "mu = {mu} must be nonnegative"
            )));
        }
        if **interpolant.grid() != *grid {
            return Err(Error::GridMismatch);
        }
        if mu == 0.0 {
            return Ok(s);
        }
        let modal = interpolant.modal_basis().map(|b| {
            let mut mask = vec![false; grid.modes()];
            for &i in b.indices() {
                mask[i] = true;
            }
            mask
        });
        if modal.is_none() && mu * dt > MAX_MU_DT {
            return Err(Error::Precondition(format!(
                "mu*dt = {} exceeds {MAX_MU_DT} for explicit nudging",
                mu * dt
            )));
        }
        s.nudging = Some(Nudging {
            mu,
            interpolant,
            modal,
        });
        Ok(s)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Nudging parameter in use (0 for the reference system).
    pub fn mu(&self) -> f64 {
        self.nudging.as_ref().map_or(0.0, |n| n.mu)
    }

    pub fn interpolant(&self) -> Option<&Arc<Interpolant>> {
        self.nudging.as_ref().map(|n| &n.interpolant)
    }

    pub fn history(&self) -> Option<&History> {
        self.history.as_ref()
    }

    /// Restores the multistep history, e.g. from a checkpoint.
    pub fn set_history(&mut self, history: Option<History>) {
        self.history = history;
    }

    /// Advances the unobserved system by one step.
    pub fn step(&mut self, s: &FlowState) -> Result<FlowState> {
        self.advance(s, None)
    }

    /// Advances the nudged system by one step.
    ///
    /// `target_now` and `target_next` are the reconstructed observations at
    /// the start and end of the step. Explicit nudging uses only the former;
    /// modal nudging averages both.
    pub fn step_nudged(
        &mut self,
        s: &FlowState,
        target_now: &SpectralField,
        target_next: &SpectralField,
    ) -> Result<FlowState> {
        self.advance(s, Some((target_now, target_next)))
    }

    fn advance(
        &mut self,
        s: &FlowState,
        targets: Option<(&SpectralField, &SpectralField)>,
    ) -> Result<FlowState> {
        let grid = s.grid().clone();
        let dt = self.dt;
        let boussinesq = self.model == Model::Boussinesq;
        let adv = advection_terms(&s.u, boussinesq.then_some(&s.theta));
        let cfl = adv
            .umax
            .iter()
            .zip(grid.extents().iter().zip(grid.resolution()))
            .map(|(&m, (&l, &n))| dt * m / (l / n as f64))
            .fold(0.0, f64::max);
        if cfl > MAX_CFL {
            return Err(Error::Stability {
                cfl,
                suggested_dt: MAX_CFL * dt / cfl,
            });
        }

        let d = grid.dim();
        let mut nu_t = adv.momentum;
        nu_t.scale(-1.0);
        let mut ntheta = SpectralField::zeros(&grid, FieldKind::Scalar);
        if boussinesq {
            let mut buoy = SpectralField::zeros(&grid, FieldKind::Vector);
            buoy.components_mut()[d - 1] = s.theta.component(0).to_vec();
            leray_in_place(&mut buoy);
            nu_t.axpy(1.0, &buoy)?;
            let heat = adv.heat.expect("requested for Boussinesq");
            let dst = &mut ntheta.components_mut()[0];
            for ((o, &h), &w) in dst
                .iter_mut()
                .zip(heat.component(0))
                .zip(s.u.component(d - 1))
            {
                *o = w - h;
            }
        } else if let Some(f) = &self.params.force {
            nu_t.axpy(1.0, f)?;
        }

        let mut implicit_target: Option<SpectralField> = None;
        if let (Some(n), Some((now, next))) = (&self.nudging, targets) {
            match &n.modal {
                Some(_) => {
                    let mut t = now.add(next)?;
                    t.scale(0.5 * n.mu);
                    implicit_target = Some(t);
                }
                None => {
                    let mut diff = now.sub(&n.interpolant.apply(&s.u)?)?;
                    leray_in_place(&mut diff);
                    nu_t.axpy(n.mu, &diff)?;
                }
            }
        }

        // The equations live on mean-zero fields; round-off in the mean would
        // otherwise feed the undamped buoyancy loop ū₂' = θ̄, θ̄' = ū₂.
        for comp in nu_t
            .components_mut()
            .iter_mut()
            .chain(ntheta.components_mut())
        {
            comp[0] = Complex64::default();
        }

        let (eu, et) = match &self.history {
            Some(h) => (ab2(&nu_t, &h.velocity)?, ab2(&ntheta, &h.temperature)?),
            None => (nu_t.clone(), ntheta.clone()),
        };

        let lam = grid.lambdas();
        let nu = self.params.nu;
        let modal = self
            .nudging
            .as_ref()
            .filter(|_| targets.is_some())
            .and_then(|n| n.modal.as_ref().map(|m| (n.mu, m)));
        let mut u = s.u.clone();
        for (c, comp) in u.components_mut().iter_mut().enumerate() {
            let e = eu.component(c);
            let f = implicit_target.as_ref().map(|t| t.component(c));
            for idx in 0..comp.len() {
                let mut l = -nu * lam[idx];
                let mut rhs = e[idx];
                if let Some((mu, mask)) = modal {
                    if mask[idx] {
                        l -= mu;
                        rhs += f.expect("modal target")[idx];
                    }
                }
                comp[idx] = cn(comp[idx], l, rhs, dt);
            }
        }
        leray_in_place(&mut u);

        let mut theta = s.theta.clone();
        if boussinesq {
            let kappa = self.params.kappa;
            let e = et.component(0);
            for (idx, v) in theta.components_mut()[0].iter_mut().enumerate() {
                *v = cn(*v, -kappa * lam[idx], e[idx], dt);
            }
        }

        let out = FlowState {
            u,
            theta,
            t: s.t + dt,
        };
        if !out.is_finite() {
            return Err(Error::Divergence {
                last_valid_time: s.t,
            });
        }
        self.history = Some(History {
            velocity: nu_t,
            temperature: ntheta,
        });
        Ok(out)
    }
}

#[inline]
fn cn(x: Complex64, l: f64, rhs: Complex64, dt: f64) -> Complex64 {
    (x * (1.0 + 0.5 * dt * l) + rhs * dt) / (1.0 - 0.5 * dt * l)
}

fn ab2(now: &SpectralField, prev: &SpectralField) -> Result<SpectralField> {
    let mut e = now.scaled(1.5);
    e.axpy(-0.5, prev)?;
    Ok(e)
}

/// One step of the unobserved system from a state without multistep history
/// (forward Euler on the explicit terms). Use [`Stepper`] for trajectories.
pub fn step_reference(s: &FlowState, model: Model, p: &Params, dt: f64) -> Result<FlowState> {
    Stepper::reference(s.grid(), model, p, dt)?.step(s)
}

/// One step of the nudged system holding `obs` constant over the step.
///
/// The observation must be stamped within one step of the state time and
/// match the configured interpolant.
pub fn step_nudged(
    s: &FlowState,
    obs: &Observation,
    cfg: &super::NudgingConfig,
    p: &Params,
    dt: f64,
) -> Result<FlowState> {
    if (obs.time - s.t).abs() > dt * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "observation at t = {} is more than dt from the state at t = {}",
            obs.time, s.t
        )));
    }
    let target = cfg.interpolant.reconstruct(obs)?;
    if obs.components != s.grid().dim() {
        return Err(Error::Shape("velocity observation required".into()));
    }
    let mu = cfg
        .mu
        .ok_or_else(|| Error::Precondition("a single nudged step needs an explicit mu".into()))?;
    let mut st = Stepper::nudged(s.grid(), cfg.model, p, dt, mu, cfg.interpolant.clone())?;
    st.step_nudged(s, &target, &target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assimilation::initial_state;
    use crate::spectral::{l2_norm, to_spectral, Samples};

    fn grid() -> Arc<Grid> {
        Arc::new(Grid::torus(&[1.0, 1.0], &[16, 16]).unwrap())
    }

    #[test]
    fn rest_stays_at_rest() {
        let g = grid();
        let s = FlowState::zeros(&g, 0.0);
        let p = Params::new(0.1, 0.1);
        let mut st = Stepper::reference(&g, Model::Boussinesq, &p, 1e-2).unwrap();
        let mut x = s.clone();
        for _ in 0..5 {
            x = st.step(&x).unwrap();
        }
        assert_eq!(x.u, s.u);
        assert_eq!(x.theta, s.theta);
        assert!((x.t - 0.05).abs() < 1e-15);
    }

    #[test]
    fn single_mode_viscous_decay() {
        // A shear mode u = (sin 2πy, 0) is an exact steady solution of the
        // Euler part, so only diffusion acts (NSE without force).
        let g = grid();
        let nu = 0.05;
        let dt = 1e-3;
        let s = Samples::from_fn(&g, FieldKind::Vector, |x| {
            [(2.0 * std::f64::consts::PI * x[1]).sin(), 0.0, 0.0]
        });
        let u = to_spectral(&s, &g).unwrap();
        let mut state = FlowState {
            u,
            theta: SpectralField::zeros(&g, FieldKind::Scalar),
            t: 0.0,
        };
        let lam = (2.0 * std::f64::consts::PI).powi(2);
        let p = Params::new(nu, 1.0);
        let mut st = Stepper::reference(&g, Model::NavierStokes, &p, dt).unwrap();
        let a0 = l2_norm(&state.u);
        state = st.step(&state).unwrap();
        let ratio = l2_norm(&state.u) / a0;
        let exact = (-nu * lam * dt).exp();
        assert!((ratio - exact).abs() < 10.0 * (nu * lam * dt).powi(3));
    }

    #[test]
    fn cfl_violation_suggests_smaller_dt() {
        let g = grid();
        let mut s = initial_state(&g, 1, 50.0, 0.0);
        s.theta.scale(0.0);
        let p = Params::new(0.01, 0.01);
        match step_reference(&s, Model::Boussinesq, &p, 0.1) {
            Err(Error::Stability { cfl, suggested_dt }) => {
                assert!(cfl > 0.5);
                assert!((suggested_dt - 0.05 / cfl).abs() < 1e-15);
            }
            other => panic!("expected stability error, got {other:?}"),
        }
    }

    #[test]
    fn explicit_nudging_limits_mu_dt() {
        let g = grid();
        let ip = Arc::new(Interpolant::volume(
            &g,
            crate::interpolants::Partition::new(&g, &[4, 4]).unwrap(),
        ));
        let p = Params::new(0.1, 0.1);
        assert!(Stepper::nudged(&g, Model::Boussinesq, &p, 0.1, 6.0, ip.clone()).is_err());
        assert!(Stepper::nudged(&g, Model::Boussinesq, &p, 0.1, 5.0, ip).is_ok());
    }
}
