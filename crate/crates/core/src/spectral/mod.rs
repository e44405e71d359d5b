//! Spectral representation of fields on periodic boxes and the 2D channel.

mod fft;
mod field;
mod grid;
mod ops;

pub use field::{to_physical, to_spectral, Samples, SpectralField};
pub use grid::{FieldKind, Geometry, Grid, Parity};
pub(crate) use ops::{advection_terms, leray_in_place};
pub use ops::{
    apply_a, bilinear_b0, bilinear_b1, divergence, divergence_ratio, gradient, h1_norm, inner,
    inner_h1, l2_norm, leray_project, lp_norm, norms, random_field, Norms, Operator,
    SOLENOIDAL_TOL,
};
