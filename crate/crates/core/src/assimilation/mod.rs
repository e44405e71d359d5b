//! Time integration of the reference and nudged systems, observation
//! streams, and the parameter formulas that decide whether nudging is
//! guaranteed to work.

mod conditions;
mod experiments;
mod model;
mod stepper;
mod stream;

use std::sync::Arc;

use crate::interpolants::Interpolant;

pub use conditions::{
    attractor_mh, check_condition, compute_kh, compute_mh, decay_rate, h0_variant,
    holder_conjugate, mu_range, mu_range_variant, mu_range_weakened, temperature_bound,
    weakened_mh, ConditionExtras, ConditionReport, ConstantsUsed, H0Table, H0Variant, MuRange,
};
pub(crate) use experiments::resolve_mu;
pub use experiments::{
    energy_channels, observe_reference, run_determining_experiment, run_stream_assimilation,
    run_sync_experiment, DeterminingReport, Recorder, StreamAssimilation, SyncOutcome,
    ERROR_CHANNELS, NUDGED_INTEGRANDS, REFERENCE_INTEGRANDS,
};
pub use model::{initial_state, FlowState, Model, NudgedState, Params};
pub use stepper::{step_nudged, step_reference, History, Stepper, MAX_CFL, MAX_MU_DT};
pub use stream::{Envelope, ObservationStream, Perturbation};

/// Settings of a nudged run.
#[derive(Debug, Clone)]
pub struct NudgingConfig {
    /// Relaxation parameter; `None` selects the geometric mean of the
    /// admissible interval.
    pub mu: Option<f64>,
    pub interpolant: Arc<Interpolant>,
    pub model: Model,
    pub dt: f64,
    /// Observation cadence in solver steps (held constant in between).
    pub observe_every: usize,
    /// Recording cadence in solver steps.
    pub record_every: usize,
    /// Additive error on synthetic observations.
    pub perturbation: Option<Perturbation>,
    /// Run even when the admissibility condition fails.
    pub override_condition: bool,
    /// Variant whose condition gates the run.
    pub variant: H0Variant,
}

impl NudgingConfig {
    pub fn new(interpolant: Arc<Interpolant>, model: Model, dt: f64) -> Self {
        Self {
            mu: None,
            interpolant,
            model,
            dt,
            observe_every: 1,
            record_every: 10,
            perturbation: None,
            override_condition: false,
            variant: H0Variant::Sync,
        }
    }
}
