//! Continuous data assimilation by nudging for Navier-Stokes and Boussinesq
//! flows.
//!
//! The crate is organised bottom-up: [`spectral`] holds grids, fields and the
//! operators of the equations; [`interpolants`] the coarse observation
//! operators; [`assimilation`] the time steppers and the observation-based
//! parameter formulas; [`analysis`] the post-processing checks; and [`io`]
//! file formats and the command implementations behind the `nudge-lab` binary.

pub mod analysis;
pub mod assimilation;
pub mod error;
pub mod interpolants;
pub mod io;
pub mod spectral;

pub use error::{Error, Result};
