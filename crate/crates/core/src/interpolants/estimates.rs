//! Empirical constants of the interpolant inequalities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{mollifier, Interpolant, InterpolantKind};
use crate::error::{Error, Result};
use crate::spectral::{h1_norm, l2_norm, random_field, FieldKind, SpectralField};

/// Largest observed ratios |I_h v|/|v| and |I_h v − v|/(h‖v‖).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Type1Constants {
    pub c_bound: f64,
    pub c_approx: f64,
    pub samples: usize,
}

/// Band limit (in lattice index units) used for sample fields: the 2/3-rule
/// cutoff of the coarsest axis.
fn band(ip: &Interpolant) -> f64 {
    let n = ip.grid().shape().iter().min().copied().unwrap_or(8);
    (n / 3) as f64
}

/// Samples `n_samples` seeded solenoidal fields with amplitude spectrum
/// (1 + |m|²)^(−1) and reports the largest type-I ratios.
pub fn estimate_type1_constants(
    ip: &Interpolant,
    n_samples: usize,
    seed: u64,
) -> Result<Type1Constants> {
    if n_samples < 10 {
        return Err(Error::Precondition(format!(
            "need at least 10 samples, got {n_samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Type1Constants {
        c_bound: 0.0,
        c_approx: 0.0,
        samples: 0,
    };
    for _ in 0..n_samples {
        let v = random_field(ip.grid(), FieldKind::Vector, &mut rng, band(ip), 2.0);
        let l2 = l2_norm(&v);
        let h1 = h1_norm(&v);
        if l2 == 0.0 || h1 == 0.0 {
            continue;
        }
        let iv = ip.apply(&v)?;
        out.c_bound = out.c_bound.max(l2_norm(&iv) / l2);
        out.c_approx = out.c_approx.max(l2_norm(&iv.sub(&v)?) / (ip.h() * h1));
        out.samples += 1;
    }
    if out.samples == 0 {
        return Err(Error::Sampling("every sample field was degenerate".into()));
    }
    Ok(out)
}

/// Result of the gradient bound check for the smoothed interpolant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientBoundReport {
    /// K_ρ² = Σᵢ ‖∂ᵢρ‖²_∞ of the unit kernel.
    pub k_rho_sq: f64,
    /// max ‖Ĩv‖² / (|Q| h⁻² K_ρ² Σ|v̄|²).
    pub max_ratio: f64,
    /// max ‖Ĩv‖² / (h K_ρ² Σ|v̄|²).
    pub max_ratio_h: f64,
    /// max ‖Ĩv‖ / ‖v‖.
    pub max_h1_ratio: f64,
    pub samples: usize,
}

/// ‖Ĩv‖² / (|Q| h⁻² K_ρ² Σ|v̄|²) for one field; 0 when all averages vanish.
pub fn gradient_ratio(ip: &Interpolant, v: &SpectralField) -> Result<f64> {
    let (ratio, _) = ratios(ip, v, mollifier::k_rho_squared(ip.grid().dim()))?;
    Ok(ratio)
}

fn ratios(ip: &Interpolant, v: &SpectralField, k_rho_sq: f64) -> Result<(f64, f64)> {
    let p = ip
        .partition()
        .ok_or_else(|| Error::Interpolant("smoothed volume interpolant required".into()))?;
    let obs = ip.observe(v)?;
    let sum: f64 = Interpolant::payload_energy(&obs);
    if sum == 0.0 {
        return Ok((0.0, 0.0));
    }
    let g = h1_norm(&ip.reconstruct(&obs)?).powi(2);
    let h = ip.h();
    Ok((
        g / (p.cell_volume() / (h * h) * k_rho_sq * sum),
        g / (h * k_rho_sq * sum),
    ))
}

/// Samples seeded white-spectrum solenoidal fields and reports the largest
/// gradient-bound ratios of the smoothed volume interpolant.
///
/// Rough fields are used because they make the cell averages nearly
/// independent, which is where the bound is tight.
pub fn smoothed_gradient_bound_check(
    ip: &Interpolant,
    n_samples: usize,
    seed: u64,
) -> Result<GradientBoundReport> {
    if ip.kind() != InterpolantKind::SmoothedVolume {
        return Err(Error::Interpolant(
            "smoothed volume interpolant required".into(),
        ));
    }
    let k_rho_sq = mollifier::k_rho_squared(ip.grid().dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GradientBoundReport {
        k_rho_sq,
        max_ratio: 0.0,
        max_ratio_h: 0.0,
        max_h1_ratio: 0.0,
        samples: 0,
    };
    for _ in 0..n_samples {
        let v = random_field(ip.grid(), FieldKind::Vector, &mut rng, band(ip), 0.0);
        let (r, rh) = ratios(ip, &v, k_rho_sq)?;
        out.max_ratio = out.max_ratio.max(r);
        out.max_ratio_h = out.max_ratio_h.max(rh);
        let h1 = h1_norm(&v);
        if h1 > 0.0 {
            out.max_h1_ratio = out.max_h1_ratio.max(h1_norm(&ip.apply(&v)?) / h1);
        }
        out.samples += 1;
    }
    Ok(out)
}
