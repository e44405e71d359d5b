use serde::{Deserialize, Serialize};

use super::norms::sup_unit_window;
use crate::assimilation::{
    decay_rate, resolve_mu, FlowState, NudgingConfig, ObservationStream, Params, StreamAssimilation,
};
use crate::error::{Error, Result};
use crate::spectral::{h1_norm, l2_norm};

/// Relative headroom granted to the measured side of every bound.
pub const LIPSCHITZ_TOLERANCE: f64 = 0.05;

/// Measured and bounding sides of the Lipschitz estimates of the map from
/// observations to nudged solutions, for w̄ = w₁ − w₂ and v̄ = v₁ − v₂.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub mu: f64,
    pub sup_vbar_sq: f64,
    /// sup_t |w̄(t)|² against 8 sup|v̄|².
    pub sup_wbar_sq: f64,
    pub bound_wbar_sq: f64,
    /// sup_s ∫_s^{s+1} ‖w̄‖² against (4μ/ν) sup|v̄|².
    pub sup_window_wbar: f64,
    pub bound_window: f64,
    /// sup_t |η̄(t)|² against 4μ/(κλ₁) sup|v̄|² (Boussinesq only).
    pub sup_etabar_sq: f64,
    pub bound_etabar_sq: Option<f64>,
    /// P-norm distance of the two nudged states at the final time.
    pub terminal_p_gap: f64,
    pub tolerance: f64,
    pub l2_verdict: bool,
    pub window_verdict: bool,
    pub eta_verdict: Option<bool>,
}

impl LipschitzReport {
    pub fn passes(&self) -> bool {
        self.l2_verdict && self.window_verdict
    }

    /// bound / measured of the L² estimate (infinite when w̄ ≡ 0).
    pub fn l2_margin(&self) -> f64 {
        margin(self.bound_wbar_sq, self.sup_wbar_sq)
    }

    pub fn window_margin(&self) -> f64 {
        margin(self.bound_window, self.sup_window_wbar)
    }
}

fn margin(bound: f64, measured: f64) -> f64 {
    if measured == 0.0 {
        f64::INFINITY
    } else {
        bound / measured
    }
}

fn same_schedule(a: &ObservationStream, b: &ObservationStream) -> bool {
    a.len() == b.len()
        && a.records()
            .iter()
            .zip(b.records())
            .all(|(x, y)| (x.time - y.time).abs() <= 1e-9 * (1.0 + x.time.abs()))
}

fn steps_over(stream: &ObservationStream, dt: f64) -> usize {
    (stream.span() / dt + 1e-9).floor() as usize
}

/// Nudges with both streams in lockstep and compares w̄ with v̄.
///
/// μ is `cfg.mu` or the default of the first stream's admissible interval;
/// unless `cfg.override_condition` is set, both streams must pass the
/// condition and μ must be admissible for both.
pub fn lipschitz_test(
    v1: &ObservationStream,
    v2: &ObservationStream,
    cfg: &NudgingConfig,
    p: &Params,
) -> Result<LipschitzReport> {
    let ip = v1.interpolant();
    if v1.spec() != v2.spec() || ip.grid() != v2.interpolant().grid() {
        return Err(Error::ObservationMismatch {
            expected: format!("{:?}", ip.kind()),
            found: format!("{:?}", v2.interpolant().kind()),
        });
    }
    if !same_schedule(v1, v2) {
        return Err(Error::Precondition(
            "streams have different timestamps".into(),
        ));
    }
    if v1.is_empty() {
        return Err(Error::Empty("observation stream has no records".into()));
    }
    let grid = ip.grid().clone();
    let (mu, _) = resolve_mu(v1, cfg, p, &grid, None)?;
    let (_, r2) = resolve_mu(v2, cfg, p, &grid, None)?;
    if !cfg.override_condition && !r2.mu_range.contains(mu) {
        return Err(Error::Precondition(format!(
            "mu = {mu:e} is not admissible for the second stream"
        )));
    }

    let mut sup_vbar_sq: f64 = 0.0;
    for (a, b) in v1.records().iter().zip(v2.records()) {
        let d = ip.reconstruct(a)?.sub(&ip.reconstruct(b)?)?;
        sup_vbar_sq = sup_vbar_sq.max(l2_norm(&d).powi(2));
    }

    let mut run1 = StreamAssimilation::new(v1, p, cfg.model, cfg.dt, mu)?;
    let mut run2 = StreamAssimilation::new(v2, p, cfg.model, cfg.dt, mu)?;
    let steps = steps_over(v1, cfg.dt);
    let every = cfg.record_every.max(1);
    let (mut t, mut h1sq) = (Vec::new(), Vec::new());
    let (mut sup_w, mut sup_eta): (f64, f64) = (0.0, 0.0);
    let mut gap = 0.0;
    for n in 0..=steps {
        if n % every == 0 || n == steps {
            let (a, b) = (run1.state(), run2.state());
            let du = a.u.sub(&b.u)?;
            let w2 = l2_norm(&du).powi(2);
            let e2 = l2_norm(&a.theta.sub(&b.theta)?).powi(2);
            sup_w = sup_w.max(w2);
            sup_eta = sup_eta.max(e2);
            t.push(a.t);
            h1sq.push(h1_norm(&du).powi(2));
            gap = (w2 + e2).sqrt();
        }
        if n < steps {
            run1.advance()?;
            run2.advance()?;
        }
    }

    let bound_wbar_sq = 8.0 * sup_vbar_sq;
    let bound_window = 4.0 * mu / p.nu * sup_vbar_sq;
    let sup_window_wbar = sup_unit_window(&t, &h1sq);
    let bound_etabar_sq = match cfg.model {
        crate::assimilation::Model::Boussinesq => {
            Some(4.0 * mu / (p.kappa * grid.lambda1()) * sup_vbar_sq)
        }
        crate::assimilation::Model::NavierStokes => None,
    };
    let ok = |m: f64, b: f64| m <= b * (1.0 + LIPSCHITZ_TOLERANCE);
    Ok(LipschitzReport {
        mu,
        sup_vbar_sq,
        sup_wbar_sq: sup_w,
        bound_wbar_sq,
        sup_window_wbar,
        bound_window,
        sup_etabar_sq: sup_eta,
        bound_etabar_sq,
        terminal_p_gap: gap,
        tolerance: LIPSCHITZ_TOLERANCE,
        l2_verdict: ok(sup_w, bound_wbar_sq),
        window_verdict: ok(sup_window_wbar, bound_window),
        eta_verdict: bound_etabar_sq.map(|b| ok(sup_eta, b)),
    })
}

/// Comparison of W(τ_σ v) with τ_σ W(v) after the transient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub sigma: f64,
    pub mu: f64,
    /// Predicted decay rate α; the transient lasts 5/α.
    pub alpha: f64,
    pub transient: f64,
    /// max over compared times of ‖W(τ_σ v) − τ_σ W(v)‖_P divided by the
    /// largest ‖τ_σ W(v)‖_P over the same times.
    pub max_relative_deviation: f64,
    pub compared: usize,
    pub tolerance: f64,
    pub pass: bool,
}

fn p_dist(a: &FlowState, b: &FlowState) -> Result<f64> {
    let du = l2_norm(&a.u.sub(&b.u)?);
    let dt = l2_norm(&a.theta.sub(&b.theta)?);
    Ok((du * du + dt * dt).sqrt())
}

fn p_norm(a: &FlowState) -> f64 {
    (l2_norm(&a.u).powi(2) + l2_norm(&a.theta).powi(2)).sqrt()
}

/// Runs the nudged system on `v` and on `v` shifted by `sigma` and compares
/// them after a transient of 5/α, with 5% relative tolerance. `sigma` must
/// be a record time of `v` and a multiple of `cfg.dt`.
pub fn shift_equivariance_test(
    v: &ObservationStream,
    sigma: f64,
    cfg: &NudgingConfig,
    p: &Params,
) -> Result<ShiftReport> {
    if v.is_empty() {
        return Err(Error::Empty("observation stream has no records".into()));
    }
    let t0 = v.records()[0].time;
    let tol = 1e-9 * (1.0 + sigma.abs());
    if !(sigma >= 0.0)
        || !v
            .records()
            .iter()
            .any(|r| (r.time - t0 - sigma).abs() <= tol)
    {
        return Err(Error::Precondition(format!(
            "shift {sigma} is not a record time of the stream"
        )));
    }
    let k = (sigma / cfg.dt).round() as usize;
    if (k as f64 * cfg.dt - sigma).abs() > tol {
        return Err(Error::Precondition(format!(
            "shift {sigma} is not a multiple of dt = {}",
            cfg.dt
        )));
    }
    let grid = v.interpolant().grid().clone();
    let (mu, _) = resolve_mu(v, cfg, p, &grid, None)?;
    let alpha = decay_rate(mu, p, grid.lambda1(), cfg.model);
    let transient = 5.0 / alpha;

    let shifted = v.shifted(sigma);
    let mut base = StreamAssimilation::new(v, p, cfg.model, cfg.dt, mu)?;
    for _ in 0..k {
        base.advance()?;
    }
    let mut moved = StreamAssimilation::new(&shifted, p, cfg.model, cfg.dt, mu)?;
    let steps = steps_over(&shifted, cfg.dt);
    let every = cfg.record_every.max(1);
    let (mut max_dev, mut max_norm): (f64, f64) = (0.0, 0.0);
    let mut compared = 0;
    for n in 0..=steps {
        let t = moved.state().t;
        if (n % every == 0 || n == steps) && t >= transient - 1e-12 {
            max_dev = max_dev.max(p_dist(moved.state(), base.state())?);
            max_norm = max_norm.max(p_norm(base.state()));
            compared += 1;
        }
        if n < steps {
            moved.advance()?;
            base.advance()?;
        }
    }
    if compared == 0 {
        return Err(Error::Precondition(format!(
            "shifted stream spans {} but the transient lasts {transient}",
            shifted.span()
        )));
    }
    let rel = if max_dev == 0.0 {
        0.0
    } else {
        max_dev / max_norm
    };
    let tolerance = 0.05;
    Ok(ShiftReport {
        sigma,
        mu,
        alpha,
        transient,
        max_relative_deviation: rel,
        compared,
        tolerance,
        pass: rel <= tolerance,
    })
}
