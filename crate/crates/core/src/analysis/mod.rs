//! Post-processing of recorded runs: decay fits, the Gronwall-type decay
//! lemma, energy budgets, Lipschitz and shift tests of the determining map,
//! and the space norms they are stated in.

mod determining;
mod energy;
mod fit;
mod gronwall;
mod norms;
mod series;

pub use determining::{
    lipschitz_test, shift_equivariance_test, LipschitzReport, ShiftReport, LIPSCHITZ_TOLERANCE,
};
pub use energy::{energy_residuals, Budget, EnergyResiduals, BUDGETS};
pub use fit::{
    fit_decay, fit_decay_samples, windowed_decay_check, DecayAssessment, DecayFit, WindowedDecay,
};
pub use gronwall::{gronwall_check, GronwallReport, MIN_SAMPLES_PER_DECAY_TIME};
pub use norms::{space_norms, space_norms_of, sup_unit_window, SpaceNorms};
pub use series::{cumulative_trapezoid, trapezoid, trapezoid_step, window_integrals, ErrorSeries};
