//! The radial bump kernel ρ(r) = K₀ exp(−1/(1 − r²)) and its scaled copies.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

fn bump(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Adaptive Simpson quadrature of `f` over [a, b].
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!("dimension checked by caller"),
    }
}

/// Mass of the unnormalized bump over the unit ball of ℝᵈ.
fn raw_mass(d: usize) -> f64 {
    let radial = |r: f64| r.powi(d as i32 - 1) * bump(r);
    sphere_area(d) * integrate(&radial, 0.0, 1.0, 1e-16)
}

/// Normalization K₀ such that ρ has unit mass in d dimensions.
pub fn k0(d: usize) -> f64 {
    static CACHE: [OnceLock<f64>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    assert!((1..=3).contains(&d), "dimension {d} out of range");
    *CACHE[d - 1].get_or_init(|| 1.0 / raw_mass(d))
}

/// Unit kernel ρ(r) in d dimensions.
pub fn rho(r: f64, d: usize) -> f64 {
    k0(d) * bump(r)
}

/// Radial derivative ρ′(r) of the unit kernel.
pub fn rho_prime(r: f64, d: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let s = 1.0 - r * r;
    -rho(r, d) * 2.0 * r / (s * s)
}

/// Scaled kernel ρ_ε(r) = ε^{−d} ρ(r/ε).
pub fn mollifier_rho(r: f64, epsilon: f64, d: usize) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!(
            "epsilon = {epsilon} must be positive"
        )));
    }
    if !(1..=3).contains(&d) {
        return Err(Error::Domain(format!("dimension {d} out of range")));
    }
    Ok(epsilon.powi(-(d as i32)) * rho(r / epsilon, d))
}

/// K_ρ² = Σᵢ ‖∂ᵢρ‖²_∞ for the radial kernel, from a fine tabulation of ρ′.
///
/// For a radial profile each partial derivative attains max|ρ′| on its own
/// axis, so the sum is d·max|ρ′|².
pub fn k_rho_squared(d: usize) -> f64 {
    let n = 200_000;
    let max = (0..n)
        .map(|i| rho_prime(i as f64 / n as f64, d).abs())
        .fold(0.0, f64::max);
    d as f64 * max * max
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishes_outside_unit_ball() {
        for d in 1..=3 {
            assert_eq!(rho(1.0, d), 0.0);
            assert_eq!(rho(1.5, d), 0.0);
            assert_eq!(rho(-2.0, d), 0.0);
            assert_eq!(mollifier_rho(0.3, 0.1, d).unwrap(), 0.0);
        }
    }

    #[test]
    fn center_value() {
        for d in 1..=3 {
            assert!((rho(0.0, d) - k0(d) * (-1.0f64).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_mass_in_every_dimension() {
        // Independent check: composite midpoint rule on a fine radial grid.
        for d in 1..=3 {
            for eps in [1.0, 0.25, 0.01] {
                let n = 400_000;
                let dr = eps / n as f64;
                let mut s = 0.0;
                for i in 0..n {
                    let r = (i as f64 + 0.5) * dr;
                    s += r.powi(d as i32 - 1) * mollifier_rho(r, eps, d).unwrap() * dr;
                }
                s *= sphere_area(d);
                assert!((s - 1.0).abs() < 1e-10, "d = {d}, eps = {eps}: {s}");
            }
        }
    }

    #[test]
    fn rejects_non_positive_epsilon() {
        assert!(mollifier_rho(0.0, 0.0, 2).is_err());
        assert!(mollifier_rho(0.0, -1.0, 2).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-6;
        for r in [0.1, 0.4, 0.7, 0.9] {
            let fd = (rho(r + h, 2) - rho(r - h, 2)) / (2.0 * h);
            assert!((fd - rho_prime(r, 2)).abs() < 1e-6 * rho_prime(r, 2).abs().max(1.0));
        }
    }
}
