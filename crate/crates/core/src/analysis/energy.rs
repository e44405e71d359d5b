use super::series::ErrorSeries;
use crate::error::{Error, Result};

/// One energy budget |x(t)|² + ∫ diss = |x(0)|² + ∫ work, named by the
/// recorded channels it is assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub name: &'static str,
    pub energy: &'static str,
    pub dissipation: &'static str,
    pub work: &'static str,
    /// Whether the budget is an equality (nudged system) rather than an
    /// inequality (weak solutions of the unobserved system).
    pub equality: bool,
}

/// Budgets for the channels written by the experiment runners.
pub const BUDGETS: [Budget; 4] = [
    Budget {
        name: "res_u",
        energy: "u_l2sq",
        dissipation: "int_diss_u",
        work: "int_work_u",
        equality: false,
    },
    Budget {
        name: "res_theta",
        energy: "theta_l2sq",
        dissipation: "int_diss_theta",
        work: "int_work_theta",
        equality: false,
    },
    Budget {
        name: "res_w",
        energy: "w_l2sq",
        dissipation: "int_diss_w",
        work: "int_work_w",
        equality: true,
    },
    Budget {
        name: "res_eta",
        energy: "eta_l2sq",
        dissipation: "int_diss_eta",
        work: "int_work_eta",
        equality: true,
    },
];

/// Energy residuals LHS − RHS over time, one channel per budget found.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyResiduals {
    pub series: ErrorSeries,
    /// Largest |residual| of each budget relative to its energy scale
    /// max(|x(0)|², sup ∫ diss, sup ∫ work).
    pub max_relative: Vec<(String, f64)>,
    /// Budgets whose residual exceeds the tolerance in the forbidden
    /// direction (positive for inequalities, either sign for equalities).
    pub flagged: Vec<String>,
}

/// Recomputes every budget whose energy channel is present in `series`.
/// `rel_tol` bounds the acceptable time-integration error relative to each
/// budget's energy scale.
pub fn energy_residuals(series: &ErrorSeries, rel_tol: f64) -> Result<EnergyResiduals> {
    let mut out = ErrorSeries::new::<&str>(&[]);
    for &t in series.time() {
        out.push(t, &[])?;
    }
    let mut max_relative = Vec::new();
    let mut flagged = Vec::new();
    for b in BUDGETS.iter().filter(|b| series.has_channel(b.energy)) {
        let e = series.channel(b.energy)?;
        let d = series.channel(b.dissipation)?;
        let w = series.channel(b.work)?;
        let res: Vec<f64> = (0..e.len()).map(|i| e[i] + d[i] - e[0] - w[i]).collect();
        let scale = e
            .iter()
            .chain(d)
            .chain(w)
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let worst = res.iter().fold(0.0f64, |m, r| m.max(r.abs())) / scale;
        let bad = res.iter().any(|&r| {
            let excess = if b.equality { r.abs() } else { r };
            excess > rel_tol * scale
        });
        if bad {
            flagged.push(b.name.to_string());
        }
        max_relative.push((b.name.to_string(), worst));
        out.add_channel(b.name, res)?;
    }
    if max_relative.is_empty() {
        return Err(Error::MissingChannel(
            "no energy channel (u_l2sq, theta_l2sq, w_l2sq, eta_l2sq)".into(),
        ));
    }
    Ok(EnergyResiduals {
        series: out,
        max_relative,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_budget_has_zero_residual() {
        // |x|² = e^{−2t}: dissipation integrand 2e^{−2t}, no work.
        let mut s = ErrorSeries::new(&["w_l2sq", "int_diss_w", "int_work_w"]);
        for i in 0..50 {
            let t = i as f64 * 0.1;
            s.push(t, &[(-2.0 * t).exp(), 1.0 - (-2.0 * t).exp(), 0.0])
                .unwrap();
        }
        let r = energy_residuals(&s, 1e-12).unwrap();
        assert!(r.flagged.is_empty());
        assert!(r.max_relative[0].1 < 1e-15);
    }

    #[test]
    fn missing_accumulator_is_reported() {
        let mut s = ErrorSeries::new(&["u_l2sq", "int_diss_u"]);
        s.push(0.0, &[1.0, 0.0]).unwrap();
        assert!(
            matches!(energy_residuals(&s, 1e-3), Err(Error::MissingChannel(c)) if c == "int_work_u")
        );
        let empty = ErrorSeries::new(&["x"]);
        assert!(matches!(
            energy_residuals(&empty, 1e-3),
            Err(Error::MissingChannel(_))
        ));
    }

    #[test]
    fn inequality_tolerates_negative_residual() {
        let mut s = ErrorSeries::new(&["u_l2sq", "int_diss_u", "int_work_u"]);
        s.push(0.0, &[1.0, 0.0, 0.0]).unwrap();
        s.push(1.0, &[0.5, 0.1, 0.0]).unwrap();
        let r = energy_residuals(&s, 1e-6).unwrap();
        assert!(r.flagged.is_empty());
        assert!((r.series.channel("res_u").unwrap()[1] + 0.4).abs() < 1e-15);
    }
}
