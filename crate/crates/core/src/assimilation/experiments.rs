//! Twin experiments: a reference run generates observations, nudged runs
//! assimilate them, and the errors and energy budgets are recorded.

use super::conditions::{check_condition, ConditionExtras, ConditionReport};
use super::model::{FlowState, Model, Params};
use super::stepper::Stepper;
use super::stream::ObservationStream;
use super::NudgingConfig;
use crate::analysis::{trapezoid_step, ErrorSeries};
use crate::error::{Error, Result};
use crate::interpolants::Interpolant;
use crate::spectral::{h1_norm, inner, l2_norm, lp_norm, Grid, SpectralField};

/// Error and regularity channels of a twin experiment.
pub const ERROR_CHANNELS: [&str; 6] = [
    "err_u_l2",
    "err_u_h1",
    "err_theta_l2",
    "err_energy",
    "w_h1",
    "eta_l4",
];

/// Energy-budget integrands of the reference system: 2ν‖u‖², 2(θe, u),
/// 2κ‖θ‖², 2(u·e, θ).
pub const REFERENCE_INTEGRANDS: [&str; 4] = ["diss_u", "work_u", "diss_theta", "work_theta"];

/// Energy-budget integrands of the nudged system; `work_w` includes the
/// nudging term 2μ(v − I_h w, w).
pub const NUDGED_INTEGRANDS: [&str; 4] = ["diss_w", "work_w", "diss_eta", "work_eta"];

/// Builds an [`ErrorSeries`] row by row and keeps running trapezoid
/// integrals `int_<name>` of the integrand channels.
#[derive(Debug, Clone)]
pub struct Recorder {
    series: ErrorSeries,
    n_base: usize,
    acc: Vec<f64>,
    last: Option<(f64, Vec<f64>)>,
}

impl Recorder {
    pub fn new(base: &[&str], integrands: &[&str]) -> Self {
        let mut names: Vec<String> = base.iter().map(|s| s.to_string()).collect();
        names.extend(integrands.iter().map(|s| s.to_string()));
        names.extend(integrands.iter().map(|s| format!("int_{s}")));
        Self {
            series: ErrorSeries::new(&names),
            n_base: base.len(),
            acc: vec![0.0; integrands.len()],
            last: None,
        }
    }

    pub fn record(&mut self, t: f64, base: &[f64], integrands: &[f64]) -> Result<()> {
        if base.len() != self.n_base || integrands.len() != self.acc.len() {
            return Err(Error::Shape("recorder row has the wrong width".into()));
        }
        if let Some((t0, prev)) = &self.last {
            for ((a, &y0), &y1) in self.acc.iter_mut().zip(prev).zip(integrands) {
                *a += trapezoid_step(*t0, t, y0, y1);
            }
        }
        let mut row = base.to_vec();
        row.extend_from_slice(integrands);
        row.extend_from_slice(&self.acc);
        self.series.push(t, &row)?;
        self.last = Some((t, integrands.to_vec()));
        Ok(())
    }

    pub fn series(&self) -> &ErrorSeries {
        &self.series
    }

    pub fn finish(self) -> ErrorSeries {
        self.series
    }
}

/// Vertical component (last axis) of a vector field as a scalar field.
fn vertical(u: &SpectralField) -> SpectralField {
    let grid = u.grid();
    let mut out = SpectralField::zeros(grid, crate::spectral::FieldKind::Scalar);
    out.components_mut()[0] = u.component(grid.dim() - 1).to_vec();
    out
}

/// Reference energy integrands [2ν‖u‖², 2(θe, u) or 2(f, u), 2κ‖θ‖², 2(u·e, θ)].
pub fn energy_channels(s: &FlowState, p: &Params, model: Model) -> Result<[f64; 4]> {
    let diss_u = 2.0 * p.nu * h1_norm(&s.u).powi(2);
    Ok(match model {
        Model::Boussinesq => {
            let coupling = 2.0 * inner(&s.theta, &vertical(&s.u))?;
            [
                diss_u,
                coupling,
                2.0 * p.kappa * h1_norm(&s.theta).powi(2),
                coupling,
            ]
        }
        Model::NavierStokes => {
            let work = match &p.force {
                Some(f) => 2.0 * inner(f, &s.u)?,
                None => 0.0,
            };
            [diss_u, work, 0.0, 0.0]
        }
    })
}

/// Nudged energy integrands; `target` is the reconstructed observation at
/// the state's time.
fn nudged_channels(
    s: &FlowState,
    target: &SpectralField,
    mu: f64,
    ip: &Interpolant,
    p: &Params,
    model: Model,
) -> Result<[f64; 4]> {
    let mut ch = energy_channels(s, p, model)?;
    if mu > 0.0 {
        let diff = target.sub(&ip.apply(&s.u)?)?;
        ch[1] += 2.0 * mu * inner(&diff, &s.u)?;
    }
    Ok(ch)
}

fn steps_for(t_end: f64, dt: f64) -> Result<usize> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Precondition(format!(
            "T = {t_end} must be nonnegative"
        )));
    }
    Ok((t_end / dt).round() as usize)
}

/// Runs the reference system and collects its (possibly perturbed)
/// velocity observations every `cfg.observe_every` steps. Returns the
/// stream, the measured M₀ = sup|u| and the final state.
pub fn observe_reference(
    ref0: &FlowState,
    cfg: &NudgingConfig,
    params: &Params,
    t_end: f64,
) -> Result<(ObservationStream, f64, FlowState)> {
    let grid = ref0.grid().clone();
    let ip = &cfg.interpolant;
    let steps = steps_for(t_end, cfg.dt)?;
    let every = cfg.observe_every.max(1);
    let mut stepper = Stepper::reference(&grid, cfg.model, params, cfg.dt)?;
    let mut stream = ObservationStream::new(ip.clone(), params.c_interp);
    let mut s = ref0.clone();
    let mut m0 = l2_norm(&s.u);
    for n in 0..=steps {
        if n % every == 0 {
            let mut obs = ip.observe_at(&s.u, s.t)?;
            if let Some(pert) = &cfg.perturbation {
                pert.apply(ip, &mut obs)?;
            }
            stream.push(obs)?;
        }
        if n < steps {
            s = stepper.step(&s)?;
            m0 = m0.max(l2_norm(&s.u));
        }
    }
    Ok((stream, m0, s))
}

/// Nudged system driven by a recorded stream (zero-order hold between
/// records), started from rest at t = 0.
pub struct StreamAssimilation<'a> {
    stream: &'a ObservationStream,
    stepper: Stepper,
    state: FlowState,
    target: SpectralField,
}

impl<'a> StreamAssimilation<'a> {
    pub fn new(
        stream: &'a ObservationStream,
        params: &Params,
        model: Model,
        dt: f64,
        mu: f64,
    ) -> Result<Self> {
        let ip = stream.interpolant().clone();
        let grid = ip.grid().clone();
        let stepper = Stepper::nudged(&grid, model, params, dt, mu, ip)?;
        let state = FlowState::zeros(&grid, 0.0);
        let target = target_at(stream, 0.0)?;
        Ok(Self {
            stream,
            stepper,
            state,
            target,
        })
    }

    pub fn state(&self) -> &FlowState {
        &self.state
    }

    /// Reconstructed observation at the current time.
    pub fn target(&self) -> &SpectralField {
        &self.target
    }

    pub fn mu(&self) -> f64 {
        self.stepper.mu()
    }

    pub fn advance(&mut self) -> Result<()> {
        let next = target_at(self.stream, self.state.t + self.stepper.dt())?;
        self.state = self.stepper.step_nudged(&self.state, &self.target, &next)?;
        self.target = next;
        Ok(())
    }
}

fn target_at(stream: &ObservationStream, t: f64) -> Result<SpectralField> {
    let obs = stream
        .at(t)
        .ok_or_else(|| Error::Empty("observation stream has no records".into()))?;
    stream.interpolant().reconstruct(obs)
}

/// Nudged trajectory of a stream, recording `[w_l2sq, w_h1, eta_l2sq]` and
/// the nudged energy integrands every `record_every` steps.
pub fn run_stream_assimilation(
    stream: &ObservationStream,
    params: &Params,
    model: Model,
    dt: f64,
    mu: f64,
    t_end: f64,
    record_every: usize,
) -> Result<(ErrorSeries, FlowState)> {
    let steps = steps_for(t_end, dt)?;
    let every = record_every.max(1);
    let mut run = StreamAssimilation::new(stream, params, model, dt, mu)?;
    let mut rec = Recorder::new(&["w_l2sq", "w_h1", "eta_l2sq"], &NUDGED_INTEGRANDS);
    let ip = stream.interpolant();
    for n in 0..=steps {
        if n % every == 0 || n == steps {
            let s = run.state();
            let ch = nudged_channels(s, run.target(), mu, ip, params, model)?;
            rec.record(
                s.t,
                &[
                    l2_norm(&s.u).powi(2),
                    h1_norm(&s.u),
                    l2_norm(&s.theta).powi(2),
                ],
                &ch,
            )?;
        }
        if n < steps {
            run.advance()?;
        }
    }
    Ok((rec.finish(), run.state().clone()))
}

/// Result of a synchronization run.
#[derive(Debug, Clone)]
pub struct SyncOutcome {
    pub series: ErrorSeries,
    pub report: ConditionReport,
    pub mu: f64,
    pub m0: f64,
    pub reference: FlowState,
    pub nudged: FlowState,
    pub stream: ObservationStream,
    /// sup_t ‖w(t)‖ over the recorded times.
    pub sup_w_h1: f64,
    /// Whether sup‖w‖ ≤ 1.05·M_h; `None` when the condition failed.
    pub velocity_bound_holds: Option<bool>,
}

/// μ for a run on `stream`: the configured value, else the default of the
/// admissible interval. Fails when the condition does not hold and the
/// configuration does not override it.
pub(crate) fn resolve_mu(
    stream: &ObservationStream,
    cfg: &NudgingConfig,
    params: &Params,
    grid: &Grid,
    m0: Option<f64>,
) -> Result<(f64, ConditionReport)> {
    let extras = ConditionExtras {
        m0,
        model: cfg.model,
        ..ConditionExtras::default()
    };
    let report = check_condition(
        stream,
        cfg.interpolant.h(),
        params,
        grid,
        cfg.variant,
        &extras,
    )?;
    if !report.condition_dai_satisfied && !cfg.override_condition {
        return Err(Error::Precondition(report.verdict_line()));
    }
    let mu = cfg.mu.or(report.mu).ok_or_else(|| {
        Error::Precondition(format!(
            "no admissible mu and none given: {}",
            report.verdict_line()
        ))
    })?;
    Ok((mu, report))
}

/// Twin experiment: observations of the reference trajectory from `ref0`
/// drive the nudged system started from rest.
///
/// The reference is integrated twice: once to collect the observation
/// stream (which fixes M_h, M₀ and the admissible μ) and once in lockstep
/// with the nudged system to record the errors.
pub fn run_sync_experiment(
    ref0: &FlowState,
    cfg: &NudgingConfig,
    params: &Params,
    t_end: f64,
) -> Result<SyncOutcome> {
    let grid = ref0.grid().clone();
    let (stream, m0, _) = observe_reference(ref0, cfg, params, t_end)?;
    let (mu, report) = resolve_mu(&stream, cfg, params, &grid, Some(m0))?;
    let steps = steps_for(t_end, cfg.dt)?;
    let every = cfg.record_every.max(1);
    let ip = cfg.interpolant.clone();
    let model = cfg.model;

    let mut reference = Stepper::reference(&grid, model, params, cfg.dt)?;
    let mut u = ref0.clone();
    let mut run = StreamAssimilation::new(&stream, params, model, cfg.dt, mu)?;
    let mut names: Vec<&str> = ERROR_CHANNELS.to_vec();
    names.extend(["u_l2sq", "theta_l2sq", "w_l2sq", "eta_l2sq"]);
    let mut integrands: Vec<&str> = REFERENCE_INTEGRANDS.to_vec();
    integrands.extend(NUDGED_INTEGRANDS);
    let mut rec = Recorder::new(&names, &integrands);
    let mut sup_w_h1: f64 = 0.0;

    for n in 0..=steps {
        if n % every == 0 || n == steps {
            let w = run.state();
            let du = w.u.sub(&u.u)?;
            let dth = w.theta.sub(&u.theta)?;
            let (eu, eth) = (l2_norm(&du), l2_norm(&dth));
            let w_h1 = h1_norm(&w.u);
            sup_w_h1 = sup_w_h1.max(w_h1);
            let base = [
                eu,
                h1_norm(&du),
                eth,
                eu * eu + eth * eth,
                w_h1,
                lp_norm(&w.theta, 4.0)?,
                l2_norm(&u.u).powi(2),
                l2_norm(&u.theta).powi(2),
                l2_norm(&w.u).powi(2),
                l2_norm(&w.theta).powi(2),
            ];
            let mut ch = energy_channels(&u, params, model)?.to_vec();
            ch.extend(nudged_channels(w, run.target(), mu, &ip, params, model)?);
            rec.record(u.t, &base, &ch)?;
        }
        if n < steps {
            u = reference.step(&u)?;
            run.advance()?;
        }
    }
    let velocity_bound_holds = report
        .condition_dai_satisfied
        .then(|| report.m_h_variant.map(|m| sup_w_h1 <= 1.05 * m))
        .flatten();
    Ok(SyncOutcome {
        series: rec.finish(),
        report,
        mu,
        m0,
        reference: u,
        nudged: run.state().clone(),
        stream,
        sup_w_h1,
        velocity_bound_holds,
    })
}

/// Result of an asymptotic-determination run.
#[derive(Debug, Clone)]
pub struct DeterminingReport {
    /// Channels `gap_p` (P₊ distance of the nudged state to reference a),
    /// `obs_gap` (|I_h u_a − I_h u_b|), `ref_gap` (P₊ distance between the
    /// references) and `delta` (envelope of the observation error).
    pub series: ErrorSeries,
    pub mu: f64,
    pub initial_gap: f64,
    pub terminal_gap: f64,
    pub terminal_obs_gap: f64,
    pub terminal_ref_gap: f64,
    pub report: ConditionReport,
}

impl DeterminingReport {
    pub fn terminal_ratio(&self) -> f64 {
        if self.initial_gap == 0.0 {
            0.0
        } else {
            self.terminal_gap / self.initial_gap
        }
    }
}

fn p_gap(a: &FlowState, b: &FlowState) -> Result<f64> {
    let du = l2_norm(&a.u.sub(&b.u)?);
    let dt = l2_norm(&a.theta.sub(&b.theta)?);
    Ok((du * du + dt * dt).sqrt())
}

/// Nudges toward v = I_h u_a + δ(t) (δ from `cfg.perturbation`) while also
/// integrating a second reference u_b, and records how the nudged solution
/// approaches (u_a, θ_a) together with the observation and reference gaps.
pub fn run_determining_experiment(
    ref_a: &FlowState,
    ref_b: &FlowState,
    cfg: &NudgingConfig,
    params: &Params,
    t_end: f64,
) -> Result<DeterminingReport> {
    let grid = ref_a.grid().clone();
    if **ref_b.grid() != *grid {
        return Err(Error::GridMismatch);
    }
    let (stream, m0, _) = observe_reference(ref_a, cfg, params, t_end)?;
    let (mu, report) = resolve_mu(&stream, cfg, params, &grid, Some(m0))?;
    let steps = steps_for(t_end, cfg.dt)?;
    let every = cfg.record_every.max(1);
    let ip = cfg.interpolant.clone();
    let mut sa = Stepper::reference(&grid, cfg.model, params, cfg.dt)?;
    let mut sb = Stepper::reference(&grid, cfg.model, params, cfg.dt)?;
    let (mut ua, mut ub) = (ref_a.clone(), ref_b.clone());
    let mut run = StreamAssimilation::new(&stream, params, cfg.model, cfg.dt, mu)?;
    let mut series = ErrorSeries::new(&["gap_p", "obs_gap", "ref_gap", "delta"]);
    let initial_gap = p_gap(run.state(), &ua)?;
    let mut last = [0.0; 3];
    for n in 0..=steps {
        if n % every == 0 || n == steps {
            let gap = p_gap(run.state(), &ua)?;
            let obs_gap = l2_norm(&ip.apply(&ua.u)?.sub(&ip.apply(&ub.u)?)?);
            let ref_gap = p_gap(&ua, &ub)?;
            let delta = cfg
                .perturbation
                .as_ref()
                .map_or(0.0, |p| p.envelope.at(ua.t).abs());
            series.push(ua.t, &[gap, obs_gap, ref_gap, delta])?;
            last = [gap, obs_gap, ref_gap];
        }
        if n < steps {
            ua = sa.step(&ua)?;
            ub = sb.step(&ub)?;
            run.advance()?;
        }
    }
    Ok(DeterminingReport {
        series,
        mu,
        initial_gap,
        terminal_gap: last[0],
        terminal_obs_gap: last[1],
        terminal_ref_gap: last[2],
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assimilation::{initial_state, H0Variant};
    use crate::spectral::Grid;
    use std::sync::Arc;

    #[test]
    fn recorder_accumulates_trapezoids() {
        let mut r = Recorder::new(&["a"], &["x"]);
        r.record(0.0, &[1.0], &[0.0]).unwrap();
        r.record(1.0, &[1.0], &[2.0]).unwrap();
        r.record(2.0, &[1.0], &[2.0]).unwrap();
        let s = r.finish();
        assert_eq!(s.channel("int_x").unwrap(), &[0.0, 1.0, 3.0]);
    }

    #[test]
    fn zero_reference_gives_zero_errors() {
        let g = Arc::new(Grid::torus(&[1.0, 1.0], &[16, 16]).unwrap());
        let ip = Arc::new(Interpolant::modal(&g, 8, 1.0).unwrap());
        let mut cfg = NudgingConfig::new(ip, Model::Boussinesq, 1e-2);
        cfg.mu = Some(5.0);
        cfg.override_condition = true;
        cfg.variant = H0Variant::Sync;
        let p = Params::new(0.1, 0.1);
        let out = run_sync_experiment(&FlowState::zeros(&g, 0.0), &cfg, &p, 0.2).unwrap();
        assert!(out
            .series
            .channel("err_energy")
            .unwrap()
            .iter()
            .all(|&e| e == 0.0));
        assert_eq!(out.report.m_h, 0.0);
    }

    #[test]
    fn mu_zero_nudging_matches_reference_bitwise() {
        let g = Arc::new(Grid::torus(&[1.0, 1.0], &[16, 16]).unwrap());
        let ip = Arc::new(Interpolant::modal(&g, 8, 1.0).unwrap());
        let p = Params::new(0.05, 0.05);
        let s0 = initial_state(&g, 9, 0.1, 0.1);
        let mut a = Stepper::reference(&g, Model::Boussinesq, &p, 1e-2).unwrap();
        let mut b = Stepper::nudged(&g, Model::Boussinesq, &p, 1e-2, 0.0, ip).unwrap();
        let target = SpectralField::zeros(&g, crate::spectral::FieldKind::Vector);
        let (mut x, mut y) = (s0.clone(), s0);
        for _ in 0..5 {
            x = a.step(&x).unwrap();
            y = b.step_nudged(&y, &target, &target).unwrap();
        }
        assert_eq!(x, y);
    }
}
