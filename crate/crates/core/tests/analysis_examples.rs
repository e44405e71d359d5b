//! Worked examples of the post-processing checks on small grids: energy
//! budgets of real runs, the Lipschitz and shift tests of the determining
//! map, and the sliding-window norm.

use std::sync::Arc;

use nudge_lab::analysis::{
    energy_residuals, lipschitz_test, shift_equivariance_test, sup_unit_window, ErrorSeries,
};
use nudge_lab::assimilation::{
    energy_channels, initial_state, observe_reference, run_stream_assimilation, Envelope,
    FlowState, Model, NudgingConfig, ObservationStream, Params, Perturbation, Recorder, Stepper,
    REFERENCE_INTEGRANDS,
};
use nudge_lab::interpolants::Interpolant;
use nudge_lab::io::DEFAULT_BOX;
use nudge_lab::spectral::{l2_norm, Grid};
use nudge_lab::Error;

const DT: f64 = 5e-3;

fn grid(n: usize) -> Arc<Grid> {
    Arc::new(Grid::torus(&[DEFAULT_BOX; 2], &[n, n]).unwrap())
}

fn params() -> Params {
    let mut p = Params::new(1e-2, 1e-2);
    p.c_interp = 200.0;
    p
}

fn modal(g: &Arc<Grid>, model: Model) -> NudgingConfig {
    let ip = Arc::new(Interpolant::modal(g, 8, 200.0).unwrap());
    NudgingConfig::new(ip, model, DT)
}

/// Reference run recording the energy channels every step.
fn reference_budget(s0: &FlowState, model: Model, p: &Params, dt: f64, t_end: f64) -> ErrorSeries {
    let mut stepper = Stepper::reference(s0.grid(), model, p, dt).unwrap();
    let mut rec = Recorder::new(&["u_l2sq", "theta_l2sq"], &REFERENCE_INTEGRANDS);
    let mut s = s0.clone();
    let steps = (t_end / dt).round() as usize;
    for n in 0..=steps {
        rec.record(
            s.t,
            &[l2_norm(&s.u).powi(2), l2_norm(&s.theta).powi(2)],
            &energy_channels(&s, p, model).unwrap(),
        )
        .unwrap();
        if n < steps {
            s = stepper.step(&s).unwrap();
        }
    }
    rec.finish()
}

fn worst(r: &nudge_lab::analysis::EnergyResiduals, name: &str) -> f64 {
    r.max_relative.iter().find(|(n, _)| n == name).unwrap().1
}

#[test]
fn flow_at_rest_has_zero_budget_residual() {
    let g = grid(16);
    let s = FlowState::zeros(&g, 0.0);
    let series = reference_budget(&s, Model::Boussinesq, &params(), DT, 0.5);
    let r = energy_residuals(&series, 1e-12).unwrap();
    assert!(r.flagged.is_empty());
    for (_, v) in &r.max_relative {
        assert_eq!(*v, 0.0);
    }
}

#[test]
fn viscous_decay_budget_converges_at_second_order() {
    // Unforced NSE from a small state: the budget is an equality up to the
    // time-integration error, which must shrink by about 4 when dt halves.
    let g = grid(16);
    let p = params();
    let s0 = initial_state(&g, 7, 1e-4, 0.0);
    let mut errs = Vec::new();
    for dt in [2e-2, 1e-2, 5e-3] {
        let series = reference_budget(&s0, Model::NavierStokes, &p, dt, 2.0);
        errs.push(worst(&energy_residuals(&series, 1.0).unwrap(), "res_u"));
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..5.5).contains(&ratio), "ratios {errs:?}");
    }
    assert!(errs[2] < 1e-3, "{errs:?}");
}

/// Worst nudged budget residual of a 1000-step stream run recorded every step.
fn nudged_residual(dt: f64) -> f64 {
    let g = grid(32);
    let p = params();
    let mut cfg = modal(&g, Model::Boussinesq);
    cfg.dt = dt;
    let t_end = 1000.0 * dt;
    let s0 = initial_state(&g, 3, 1e-4, 1e-4);
    let (stream, _, _) = observe_reference(&s0, &cfg, &p, t_end).unwrap();
    let (series, _) =
        run_stream_assimilation(&stream, &p, Model::Boussinesq, dt, 250.0, t_end, 1).unwrap();
    assert_eq!(series.len(), 1001);
    worst(&energy_residuals(&series, 5e-3).unwrap(), "res_w")
}

#[test]
fn nudged_budget_closes_when_relaxation_is_resolved() {
    // The nudged state starts at rest and relaxes onto the data on the time
    // scale 1/mu; with mu*dt = 1/16 the budget closes to 5e-3, and the
    // residual is second order in dt.
    let fine = nudged_residual(2.5e-4);
    let coarse = nudged_residual(5e-4);
    assert!(fine <= 5e-3, "res_w {fine:e}");
    let ratio = coarse / fine;
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

fn perturbed(
    g: &Arc<Grid>,
    cfg: &NudgingConfig,
    p: &Params,
    amplitude: f64,
    t_end: f64,
) -> ObservationStream {
    let mut c = cfg.clone();
    c.perturbation = Some(Perturbation::seeded(g, 11, Envelope::Constant { amplitude }).unwrap());
    observe_reference(&initial_state(g, 5, 1e-4, 1e-4), &c, p, t_end)
        .unwrap()
        .0
}

#[test]
fn identical_streams_give_zero_lipschitz_difference() {
    let g = grid(32);
    let p = params();
    let cfg = modal(&g, Model::Boussinesq);
    let v = perturbed(&g, &cfg, &p, 0.0, 1.0);
    let r = lipschitz_test(&v, &v, &cfg, &p).unwrap();
    assert_eq!(r.sup_vbar_sq, 0.0);
    assert_eq!(r.sup_wbar_sq, 0.0);
    assert_eq!(r.l2_margin(), f64::INFINITY);
    assert_eq!(r.window_margin(), f64::INFINITY);
    assert!(r.passes());
}

#[test]
fn constant_observation_offset_obeys_lipschitz_bounds_and_scales_linearly() {
    let g = grid(32);
    let p = params();
    let cfg = modal(&g, Model::Boussinesq);
    let base = perturbed(&g, &cfg, &p, 0.0, 3.0);
    let small = perturbed(&g, &cfg, &p, 1e-6, 3.0);
    let large = perturbed(&g, &cfg, &p, 2e-6, 3.0);
    let r1 = lipschitz_test(&base, &small, &cfg, &p).unwrap();
    let r2 = lipschitz_test(&base, &large, &cfg, &p).unwrap();
    for r in [&r1, &r2] {
        assert!(r.sup_vbar_sq > 0.0);
        assert!(r.sup_wbar_sq <= 8.0 * r.sup_vbar_sq, "{r:?}");
        assert!(r.passes(), "{r:?}");
        assert_eq!(r.eta_verdict, Some(true));
    }
    let scale = (r2.sup_wbar_sq / r1.sup_wbar_sq).sqrt();
    assert!((scale - 2.0).abs() <= 0.4, "scale {scale}");
}

#[test]
fn lipschitz_rejects_mismatched_streams() {
    let g = grid(32);
    let p = params();
    let cfg = modal(&g, Model::Boussinesq);
    let v = perturbed(&g, &cfg, &p, 0.0, 0.1);
    let other = Arc::new(Interpolant::modal(&g, 6, 200.0).unwrap());
    let mut c2 = cfg.clone();
    c2.interpolant = other;
    let w = observe_reference(&initial_state(&g, 5, 1e-4, 1e-4), &c2, &p, 0.1)
        .unwrap()
        .0;
    assert!(matches!(
        lipschitz_test(&v, &w, &cfg, &p),
        Err(Error::ObservationMismatch { .. })
    ));
}

#[test]
fn zero_shift_is_exactly_equivariant() {
    let g = grid(32);
    let p = params();
    let mut cfg = modal(&g, Model::Boussinesq);
    cfg.record_every = 20;
    let v = perturbed(&g, &cfg, &p, 0.0, 6.0);
    let r = shift_equivariance_test(&v, 0.0, &cfg, &p).unwrap();
    assert!(r.compared > 0);
    assert_eq!(r.max_relative_deviation, 0.0);
    assert!(r.pass);
}

#[test]
fn shift_by_several_decay_times_is_equivariant_after_transient() {
    let g = grid(32);
    let p = params();
    let mut cfg = modal(&g, Model::Boussinesq);
    cfg.record_every = 20;
    let v = perturbed(&g, &cfg, &p, 0.0, 15.0);
    let probe = shift_equivariance_test(&v, 0.0, &cfg, &p).unwrap();
    let sigma = ((10.0 / probe.alpha) / DT).round() * DT;
    let r = shift_equivariance_test(&v, sigma, &cfg, &p).unwrap();
    assert!(r.compared > 0);
    assert!(r.pass, "{r:?}");
}

#[test]
fn shift_must_land_on_a_record_time() {
    let g = grid(16);
    let p = params();
    let mut cfg = modal(&g, Model::Boussinesq);
    cfg.observe_every = 4;
    let v = perturbed(&g, &cfg, &p, 0.0, 0.5);
    assert!(matches!(
        shift_equivariance_test(&v, DT, &cfg, &p),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn sliding_window_sup_matches_brute_force() {
    let t: Vec<f64> = (0..=400).map(|i| i as f64 * 0.01).collect();
    let y: Vec<f64> = t
        .iter()
        .map(|&s| 1.0 + (3.0 * s).sin() + 0.5 * (7.0 * s).cos())
        .collect();
    let mut brute: f64 = 0.0;
    for i in 0..t.len() {
        let mut acc = 0.0;
        let mut j = i;
        while j + 1 < t.len() && t[j + 1] <= t[i] + 1.0 + 1e-12 {
            acc += 0.5 * (t[j + 1] - t[j]) * (y[j] + y[j + 1]);
            j += 1;
        }
        brute = brute.max(acc);
    }
    let fast = sup_unit_window(&t, &y);
    assert!((fast - brute).abs() <= 1e-12 * brute, "{fast} vs {brute}");
}
