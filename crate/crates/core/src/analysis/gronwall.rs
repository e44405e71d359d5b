use serde::{Deserialize, Serialize};

use super::series::cumulative_trapezoid;
use crate::error::{Error, Result};

/// Executable form of the integral decay lemma: if y ≥ 0 satisfies
/// y(t) + μ∫ₛᵗ y ≤ y(s) for all s ≤ t, then
/// y(t) ≤ μ e^{−μ(t−1/μ)} ∫₀^{1/μ} y for t ≥ 1/μ, and
/// y(t) ≤ μ e^{−μt/2} ∫_{t/2−1/μ}^{t/2} y for t ≥ 2/μ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallReport {
    pub mu: f64,
    pub hypothesis_holds: bool,
    /// First sample pair (s, t) breaking the hypothesis.
    pub violation: Option<(f64, f64)>,
    /// Conclusion verdicts; `None` when the hypothesis failed.
    pub conclusion_holds: Option<bool>,
    pub corollary_holds: Option<bool>,
    /// min over t ≥ 1/μ of bound(t) − y(t).
    pub worst_margin: Option<f64>,
    pub worst_corollary_margin: Option<f64>,
}

/// Minimum samples per 1/μ for the quadrature to be meaningful.
pub const MIN_SAMPLES_PER_DECAY_TIME: f64 = 20.0;

/// Integral of the exponential through (0, a) and (h, b): the log-mean rule.
fn log_mean_integral(h: f64, a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.5 * h * (a + b);
    }
    let r = (a / b).ln();
    if r.abs() < 1e-8 {
        0.5 * h * (a + b)
    } else {
        h * (a - b) / r
    }
}

fn linear_at(t: &[f64], y: &[f64], x: f64) -> f64 {
    let j = t.partition_point(|&s| s <= x);
    if j == 0 {
        return y[0];
    }
    if j >= t.len() {
        return y[t.len() - 1];
    }
    let f = (x - t[j - 1]) / (t[j] - t[j - 1]);
    y[j - 1] + f * (y[j] - y[j - 1])
}

/// ∫ₐᵇ y by the trapezoid rule with linear interpolation at the ends.
fn integral(t: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let a = a.max(t[0]);
    if b <= a {
        return 0.0;
    }
    let mut ts = vec![a];
    let mut ys = vec![linear_at(t, y, a)];
    for (&s, &v) in t.iter().zip(y) {
        if s > a && s < b {
            ts.push(s);
            ys.push(v);
        }
    }
    ts.push(b);
    ys.push(linear_at(t, y, b));
    cumulative_trapezoid(&ts, &ys)
        .last()
        .copied()
        .unwrap_or(0.0)
}

/// Checks the hypothesis on every sample pair and, if it holds, the
/// conclusion and corollary at every sample time they cover.
///
/// Trapezoid integrals are compared with a tolerance equal to their
/// distance from the log-mean (piecewise exponential) quadrature, plus a
/// relative round-off allowance.
pub fn gronwall_check(t: &[f64], y: &[f64], mu: f64) -> Result<GronwallReport> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Domain(format!("mu = {mu} must be positive")));
    }
    let n = t.len();
    if n != y.len() {
        return Err(Error::Shape("time and value lengths differ".into()));
    }
    if n < 2 {
        return Err(Error::Empty("need at least two samples".into()));
    }
    if let Some(v) = y.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("y must be nonnegative, found {v}")));
    }
    let max_dt = t.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if !(max_dt > 0.0) || t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("timestamps must increase".into()));
    }
    if max_dt * mu * MIN_SAMPLES_PER_DECAY_TIME > 1.0 + 1e-9 {
        return Err(Error::Precondition(format!(
            "sampling step {max_dt} is coarser than 1/(20 mu)"
        )));
    }

    let cum = cumulative_trapezoid(t, y);
    let mut slack = vec![0.0; n];
    for i in 1..n {
        let h = t[i] - t[i - 1];
        let d = (0.5 * h * (y[i - 1] + y[i]) - log_mean_integral(h, y[i - 1], y[i])).abs();
        slack[i] = slack[i - 1] + d;
    }
    let ymax = y.iter().copied().fold(0.0, f64::max);
    let roundoff = 1e-12 * ymax.max(f64::MIN_POSITIVE);

    let mut violation = None;
    'outer: for i in 0..n {
        for j in i + 1..n {
            let lhs = y[j] + mu * (cum[j] - cum[i]);
            let tol = mu * (slack[j] - slack[i]) + roundoff;
            if lhs > y[i] + tol {
                violation = Some((t[i], t[j]));
                break 'outer;
            }
        }
    }
    if violation.is_some() {
        return Ok(GronwallReport {
            mu,
            hypothesis_holds: false,
            violation,
            conclusion_holds: None,
            corollary_holds: None,
            worst_margin: None,
            worst_corollary_margin: None,
        });
    }

    let tau = 1.0 / mu;
    let head = integral(t, y, t[0], t[0] + tau);
    let mut worst: Option<f64> = None;
    let mut worst_cor: Option<f64> = None;
    for (&s, &v) in t.iter().zip(y) {
        let rel = s - t[0];
        if rel >= tau - 1e-12 * tau {
            let bound = mu * (-mu * (rel - tau)).exp() * head;
            let m = bound - v;
            worst = Some(worst.map_or(m, |w: f64| w.min(m)));
        }
        if rel >= 2.0 * tau - 1e-12 * tau {
            let mid = t[0] + rel / 2.0;
            let bound = mu * (-mu * rel / 2.0).exp() * integral(t, y, mid - tau, mid);
            let m = bound - v;
            worst_cor = Some(worst_cor.map_or(m, |w: f64| w.min(m)));
        }
    }
    let ok = |m: Option<f64>| m.map(|m| m >= -roundoff);
    Ok(GronwallReport {
        mu,
        hypothesis_holds: true,
        violation: None,
        conclusion_holds: ok(worst).or(Some(true)),
        corollary_holds: ok(worst_cor).or(Some(true)),
        worst_margin: worst,
        worst_corollary_margin: worst_cor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn exponential_passes_with_nonnegative_margin() {
        let mu = 2.0;
        let t = grid(400, 0.01);
        let y: Vec<f64> = t.iter().map(|&s| 3.0 * (-mu * s).exp()).collect();
        let r = gronwall_check(&t, &y, mu).unwrap();
        assert!(r.hypothesis_holds);
        assert_eq!(r.conclusion_holds, Some(true));
        assert_eq!(r.corollary_holds, Some(true));
        assert!(r.worst_margin.unwrap() >= 0.0);
    }

    #[test]
    fn zero_passes_trivially() {
        let t = grid(50, 0.01);
        let r = gronwall_check(&t, &[0.0; 50], 5.0).unwrap();
        assert!(r.hypothesis_holds);
        assert_eq!(r.worst_margin, Some(0.0));
    }

    #[test]
    fn constant_violates_hypothesis() {
        let t = grid(50, 0.01);
        let r = gronwall_check(&t, &[1.0; 50], 1.0).unwrap();
        assert!(!r.hypothesis_holds);
        assert_eq!(r.violation, Some((0.0, 0.01)));
        assert_eq!(r.conclusion_holds, None);
    }

    #[test]
    fn coarse_sampling_and_negative_values_are_rejected() {
        let t = grid(10, 0.1);
        assert!(gronwall_check(&t, &[0.0; 10], 1.0).is_err());
        let mut y = vec![0.0; 10];
        y[3] = -1.0;
        assert!(gronwall_check(&t, &y, 0.1).is_err());
    }
}
