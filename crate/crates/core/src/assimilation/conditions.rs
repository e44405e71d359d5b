//! Observation-based parameter selection: M_h, K_h, the h₀ formulas, the
//! admissible μ intervals and the decay rate α.

use serde::{Deserialize, Serialize};

use super::model::{Model, Params};
use super::stream::ObservationStream;
use crate::analysis::window_integrals;
use crate::error::{Error, Result};
use crate::interpolants::{InterpolantKind, Observation};
use crate::spectral::{h1_norm, Grid};

/// Which closed-form h₀ (and matching μ interval) to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum H0Variant {
    /// Existence of weak nudged solutions: h₀² = νκλ₁/(16c).
    Weak,
    /// Regularity of the nudged velocity.
    Strong,
    /// Synchronization, including the temperature bound S₂.
    Sync,
    /// Nudging on the weak attractor: h₀² = 1/(4cλ₁).
    Attractor,
    /// Data-only regularity criterion for the NSE.
    Criterion,
    /// Weakened condition in terms of K_h (ν⁸ in the force term).
    Weakened,
    /// Weakened regularity criterion (ν⁵ in the force term).
    CriterionWeakened,
}

impl H0Variant {
    pub const ALL: [H0Variant; 7] = [
        H0Variant::Weak,
        H0Variant::Strong,
        H0Variant::Sync,
        H0Variant::Attractor,
        H0Variant::Criterion,
        H0Variant::Weakened,
        H0Variant::CriterionWeakened,
    ];

    pub fn name(self) -> &'static str {
        match self {
            H0Variant::Weak => "weak",
            H0Variant::Strong => "strong",
            H0Variant::Sync => "sync",
            H0Variant::Attractor => "attractor",
            H0Variant::Criterion => "criterion",
            H0Variant::Weakened => "weakened",
            H0Variant::CriterionWeakened => "criterion_weakened",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }

    fn uses_kh(self) -> bool {
        matches!(self, H0Variant::Weakened | H0Variant::CriterionWeakened)
    }

    fn is_criterion(self) -> bool {
        matches!(self, H0Variant::Criterion | H0Variant::CriterionWeakened)
    }
}

/// Quantities some formulas need beyond ν, κ, c, C and λ₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionExtras {
    /// Bound M₀ ≥ sup_t |u(t)|; measured from the run when available.
    pub m0: Option<f64>,
    /// |f|; defaults to the norm of `Params::force`.
    pub force_norm: Option<f64>,
    /// Window length τ₀ of K_h.
    pub tau0: f64,
    /// Time exponent p of K_h (q is its Hölder conjugate).
    pub p: f64,
    /// Decides whether α includes the thermal rate κλ₁/2.
    pub model: Model,
}

impl Default for ConditionExtras {
    fn default() -> Self {
        Self {
            m0: None,
            force_norm: None,
            tau0: 1.0,
            p: 3.0,
            model: Model::Boussinesq,
        }
    }
}

/// Hölder conjugate of p.
pub fn holder_conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// Sup over records of Σλ_k|û_k|² (modal) or h·Σ_α|v̄_α|² (volume), the
/// observation functional before the factor 32·C.
fn mh_functional(stream: &ObservationStream) -> f64 {
    let ip = stream.interpolant();
    let per_record = |obs: &Observation| -> f64 {
        match ip.modal_basis() {
            Some(b) => {
                let n = b.len();
                obs.payload
                    .chunks(2 * n)
                    .map(|chunk| {
                        chunk
                            .chunks(2)
                            .zip(b.lambdas())
                            .map(|(z, &l)| l * (z[0] * z[0] + z[1] * z[1]))
                            .sum::<f64>()
                    })
                    .sum()
            }
            None => ip.h() * obs.payload.iter().map(|v| v * v).sum::<f64>(),
        }
    };
    stream.records().iter().map(per_record).fold(0.0, f64::max)
}

fn mh_from_functional(kind: InterpolantKind, functional: f64, c: f64) -> f64 {
    let factor = if kind == InterpolantKind::Modal {
        1.0
    } else {
        c * c
    };
    (32.0 * factor * functional).sqrt()
}

/// M_h of the stream (not squared), using the constant c recorded in its
/// descriptor for the volume variants.
pub fn compute_mh(stream: &ObservationStream) -> Result<f64> {
    if stream.is_empty() {
        return Err(Error::Empty("observation stream has no records".into()));
    }
    Ok(mh_from_functional(
        stream.spec().kind,
        mh_functional(stream),
        stream.spec().c_interp,
    ))
}

/// K_h = sup over windows of (∫_t^{t+τ₀} ‖I_h u‖^{2p} ds)^{1/2p}, windows
/// starting at every record time and fitting inside the stream.
pub fn compute_kh(stream: &ObservationStream, tau0: f64, p: f64) -> Result<f64> {
    if !(tau0 > 0.0) {
        return Err(Error::Domain(format!("tau0 = {tau0} must be positive")));
    }
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p = {p} must be at least 1")));
    }
    if stream.span() < tau0 * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "stream spans {} < tau0 = {tau0}",
            stream.span()
        )));
    }
    let ip = stream.interpolant();
    let t: Vec<f64> = stream.records().iter().map(|r| r.time).collect();
    let g = stream
        .records()
        .iter()
        .map(|r| Ok(h1_norm(&ip.reconstruct(r)?).powf(2.0 * p)))
        .collect::<Result<Vec<f64>>>()?;
    let sup = window_integrals(&t, &g, tau0, false)
        .into_iter()
        .map(|(_, v)| v)
        .fold(0.0, f64::max);
    Ok(sup.powf(1.0 / (2.0 * p)))
}

/// Temperature bound S_p = C p M₀ / ((2p − 1) λ₁)^{1/2p}.
pub fn temperature_bound(c_sob: f64, p: f64, m0: f64, lambda1: f64) -> f64 {
    c_sob * p * m0 / ((2.0 * p - 1.0) * lambda1).powf(1.0 / (2.0 * p))
}

fn force_norm(p: &Params, extras: &ConditionExtras) -> f64 {
    extras.force_norm.unwrap_or_else(|| p.force_norm())
}

/// h₀ of the named variant.
pub fn h0_variant(
    p: &Params,
    grid: &Grid,
    variant: H0Variant,
    extras: &ConditionExtras,
) -> Result<f64> {
    h0_with(p, grid.lambda1(), p.c_interp, p.c_sob, variant, extras)
}

fn h0_with(
    p: &Params,
    lambda1: f64,
    c: f64,
    c_sob: f64,
    variant: H0Variant,
    extras: &ConditionExtras,
) -> Result<f64> {
    let (nu, kappa, l1) = (p.nu, p.kappa, lambda1);
    let f = force_norm(p, extras);
    let inv_sq = match variant {
        H0Variant::Weak => 16.0 * c / (nu * kappa * l1),
        H0Variant::Strong => {
            4.0 * c / nu * f64::max(8.0 / (kappa * l1), 2.0 / kappa * (1.0 + 2.0 / (l1 * l1)))
        }
        H0Variant::Sync => {
            let m0 = extras
                .m0
                .ok_or_else(|| Error::MissingExtra("M0 (needed for S2)".into()))?;
            let s2 = temperature_bound(c_sob, 2.0, m0, l1);
            (32.0 * c / (nu * kappa * l1))
                .max(8.0 * c / (nu * kappa) * (1.0 + 2.0 / (l1 * l1)))
                .max(64.0 * c_sob * s2.powi(8) / (nu.powi(4) * kappa.powi(4)))
        }
        H0Variant::Attractor => 4.0 * c * l1,
        H0Variant::Criterion => {
            (1.0 / (4.0 * c * l1)).max(32.0 * c * f.powi(4) / (nu.powi(8) * l1 * l1))
        }
        H0Variant::Weakened => (4.0 * c * l1).max(1024.0 * c * f.powi(4) / (nu.powi(8) * l1 * l1)),
        H0Variant::CriterionWeakened => {
            (4.0 * c * l1).max(1024.0 * c * f.powi(4) / (nu.powi(5) * l1 * l1))
        }
    };
    Ok(inv_sq.powf(-0.5))
}

/// Bounds of an admissible μ interval, kept even when the interval is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuRange {
    pub lower: f64,
    pub upper: f64,
    pub h_within_h0: bool,
}

impl MuRange {
    pub fn is_empty(&self) -> bool {
        !(self.h_within_h0 && self.lower <= self.upper)
    }

    pub fn interval(&self) -> Option<[f64; 2]> {
        (!self.is_empty()).then_some([self.lower, self.upper])
    }

    /// Geometric mean of the interval.
    pub fn default_mu(&self) -> Option<f64> {
        self.interval().map(|[a, b]| (a * b).sqrt())
    }

    pub fn contains(&self, mu: f64) -> bool {
        !self.is_empty() && mu >= self.lower && mu <= self.upper
    }
}

/// Synchronization interval
/// max{ν/(4ch₀²), 16cM_h⁴/ν³} ≤ μ ≤ ν/(4ch²).
pub fn mu_range(m_h: f64, h: f64, h0: f64, p: &Params) -> MuRange {
    mu_range_for(H0Variant::Sync, m_h, h, h0, p, p.c_interp)
}

fn mu_range_for(variant: H0Variant, m_h: f64, h: f64, h0: f64, p: &Params, c: f64) -> MuRange {
    let nu = p.nu;
    let m4 = m_h.powi(4);
    let (lower, upper) = match variant {
        H0Variant::Weak => (nu / (2.0 * c * h0 * h0), nu / (2.0 * c * h * h)),
        H0Variant::Attractor => (
            (2.0 * c * m4 / nu.powi(3)).max(nu / (4.0 * c * h0 * h0)),
            nu / (4.0 * c * h * h),
        ),
        H0Variant::Criterion => (2.0 * c * m4 / nu.powi(3), nu / (16.0 * c * h * h)),
        _ => (
            (nu / (4.0 * c * h0 * h0)).max(16.0 * c * m4 / nu.powi(3)),
            nu / (4.0 * c * h * h),
        ),
    };
    MuRange {
        lower,
        upper,
        h_within_h0: h <= h0,
    }
}

/// The variant's μ interval for an arbitrary M_h (M_h-based variants only).
pub fn mu_range_variant(
    variant: H0Variant,
    m_h: f64,
    h: f64,
    h0: f64,
    p: &Params,
) -> Result<MuRange> {
    if variant.uses_kh() {
        return Err(Error::Precondition(format!(
            "variant {} is expressed through K_h; use mu_range_weakened",
            variant.name()
        )));
    }
    Ok(mu_range_for(variant, m_h, h, h0, p, p.c_interp))
}

/// Weakened interval
/// max{ν/(4ch₀²), (32CK_h⁴/q^{2/q})^{p/(p−2)}} ≤ μ ≤ ν/(4ch²).
pub fn mu_range_weakened(
    k_h: f64,
    h: f64,
    h0: f64,
    p_exp: f64,
    q: f64,
    params: &Params,
) -> Result<MuRange> {
    weakened_with(k_h, h, h0, p_exp, q, params, params.c_interp, params.c_sob)
}

#[allow(clippy::too_many_arguments)]
fn weakened_with(
    k_h: f64,
    h: f64,
    h0: f64,
    p_exp: f64,
    q: f64,
    params: &Params,
    c: f64,
    c_sob: f64,
) -> Result<MuRange> {
    if !(p_exp > 2.0) {
        return Err(Error::Domain(format!("p = {p_exp} must exceed 2")));
    }
    if ((1.0 / p_exp + 1.0 / q) - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "p = {p_exp} and q = {q} are not Hölder conjugates"
        )));
    }
    let nu = params.nu;
    let data = (32.0 * c_sob * k_h.powi(4) / q.powf(2.0 / q)).powf(p_exp / (p_exp - 2.0));
    Ok(MuRange {
        lower: (nu / (4.0 * c * h0 * h0)).max(data),
        upper: nu / (4.0 * c * h * h),
        h_within_h0: h <= h0,
    })
}

/// Bound on ‖w‖ under the weakened condition for a given μ.
#[allow(clippy::too_many_arguments)]
pub fn weakened_mh(
    k_h: f64,
    mu: f64,
    p_exp: f64,
    q: f64,
    tau0: f64,
    params: &Params,
    lambda1: f64,
    force_norm: f64,
) -> f64 {
    let nu = params.nu;
    let window = 2.0 / (1.0 - (-nu * lambda1 * p_exp * tau0 / 4.0).exp());
    (8.0 * force_norm * force_norm / (lambda1 * nu * nu)
        + 2.0 * params.c_sob * k_h * k_h * mu.powf(1.0 / p_exp) / q.powf(1.0 / q)
            * window.powf(1.0 / p_exp))
    .sqrt()
}

/// M_h of the attractor theorem, 8(|f|²/(ν²λ₁) + ρ²), not squared.
pub fn attractor_mh(force_norm: f64, rho: f64, nu: f64, lambda1: f64) -> f64 {
    (8.0 * (force_norm * force_norm / (nu * nu * lambda1) + rho * rho)).sqrt()
}

/// α = min{μ/4, κλ₁/2} (μ/4 for the NSE).
pub fn decay_rate(mu: f64, p: &Params, lambda1: f64, model: Model) -> f64 {
    match model {
        Model::Boussinesq => (mu / 4.0).min(p.kappa * lambda1 / 2.0),
        Model::NavierStokes => mu / 4.0,
    }
}

/// h₀ of every variant that can be evaluated with the given extras.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H0Table {
    pub weak: f64,
    pub strong: f64,
    pub sync: Option<f64>,
    pub attractor: f64,
    pub criterion: f64,
    pub weakened: f64,
    pub criterion_weakened: f64,
}

/// Constants that entered the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsUsed {
    pub c: f64,
    pub c_sob: f64,
    pub s2: Option<f64>,
    pub m0: Option<f64>,
    pub lambda1: f64,
    pub force_norm: f64,
}

/// Everything the data says about admissible nudging parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub variant: H0Variant,
    pub interpolant: InterpolantKind,
    pub records: usize,
    pub h: f64,
    /// Observation functional M_h (factor 32 inside the square).
    pub m_h: f64,
    /// The M_h entering the chosen variant: the same as `m_h` for the
    /// M_h-based variants, the attractor form from sup|v| for `attractor`,
    /// and the K_h-based bound at the selected μ for the weakened variants.
    pub m_h_variant: Option<f64>,
    pub k_h: Option<f64>,
    pub tau0: f64,
    pub p: f64,
    pub q: f64,
    pub h0: f64,
    pub h0_variants: H0Table,
    pub mu_range: MuRange,
    pub mu_interval: Option<[f64; 2]>,
    /// Selected μ (geometric mean of the interval).
    pub mu: Option<f64>,
    pub alpha: Option<f64>,
    pub condition_dai_satisfied: bool,
    /// Criterion variants only: whether the data certify regularity.
    pub regularity_verdict: Option<bool>,
    pub violated: Vec<String>,
    pub constants_used: ConstantsUsed,
    /// Largest c (others fixed, h fixed) for which the condition holds.
    pub max_c_passing: Option<f64>,
    /// Largest C (others fixed) for which the condition holds.
    pub max_c_sob_passing: Option<f64>,
}

/// Data-derived inputs of the condition, independent of c and C.
struct Inputs {
    kind: InterpolantKind,
    h: f64,
    functional: f64,
    k_h: Option<f64>,
    rho: f64,
    lambda1: f64,
    force: f64,
}

struct Evaluation {
    h0: f64,
    range: MuRange,
    m_h: f64,
    m_h_variant: Option<f64>,
    violated: Vec<String>,
}

fn evaluate(
    inputs: &Inputs,
    params: &Params,
    variant: H0Variant,
    extras: &ConditionExtras,
    c: f64,
    c_sob: f64,
) -> Result<Evaluation> {
    let h = inputs.h;
    let h0 = h0_with(params, inputs.lambda1, c, c_sob, variant, extras)?;
    let m_h = mh_from_functional(inputs.kind, inputs.functional, c);
    let nu = params.nu;
    let (range, m_var) = if variant.uses_kh() {
        let k = inputs
            .k_h
            .ok_or_else(|| Error::MissingExtra("K_h (stream shorter than tau0)".into()))?;
        let q = holder_conjugate(extras.p);
        let r = weakened_with(k, h, h0, extras.p, q, params, c, c_sob)?;
        let m = r.default_mu().map(|mu| {
            weakened_mh(
                k,
                mu,
                extras.p,
                q,
                extras.tau0,
                params,
                inputs.lambda1,
                inputs.force,
            )
        });
        (r, m)
    } else if variant == H0Variant::Attractor {
        let m = attractor_mh(inputs.force, inputs.rho, nu, inputs.lambda1);
        (mu_range_for(variant, m, h, h0, params, c), Some(m))
    } else {
        (mu_range_for(variant, m_h, h, h0, params, c), Some(m_h))
    };
    let mut violated = Vec::new();
    if !range.h_within_h0 {
        violated.push(format!("h = {h:e} > h0 = {h0:e}"));
    }
    if range.lower > range.upper {
        violated.push(format!(
            "mu_min = {:e} > mu_max = {:e}",
            range.lower, range.upper
        ));
    }
    Ok(Evaluation {
        h0,
        range,
        m_h,
        m_h_variant: m_var,
        violated,
    })
}

/// Scans a constant upward on a quarter-octave grid around `start` and
/// bisects the last passing step; `None` if no scanned value passes.
fn largest_passing(start: f64, passes: impl Fn(f64) -> bool) -> Option<f64> {
    let grid: Vec<f64> = (-120..=120)
        .map(|k| start * 2f64.powf(k as f64 / 4.0))
        .collect();
    let idx = grid.iter().rposition(|&x| passes(x))?;
    if idx + 1 == grid.len() {
        return Some(grid[idx]);
    }
    let (mut lo, mut hi) = (grid[idx], grid[idx + 1]);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Evaluates the chosen variant's condition on the stream.
///
/// An empty stream counts as M_h = 0. When `extras.m0` is absent, M₀ is
/// estimated by sup|I_h u| from the data.
pub fn check_condition(
    stream: &ObservationStream,
    h: f64,
    params: &Params,
    grid: &Grid,
    variant: H0Variant,
    extras: &ConditionExtras,
) -> Result<ConditionReport> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("h = {h} must be positive")));
    }
    if **stream.interpolant().grid() != *grid {
        return Err(Error::GridMismatch);
    }
    let q = holder_conjugate(extras.p);
    let k_h = if stream.span() >= extras.tau0 * (1.0 - 1e-12) && !stream.is_empty() {
        Some(compute_kh(stream, extras.tau0, extras.p)?)
    } else {
        None
    };
    let rho = stream.sup_l2()?;
    let mut extras = *extras;
    if extras.m0.is_none() {
        extras.m0 = Some(rho);
    }
    let inputs = Inputs {
        kind: stream.spec().kind,
        h,
        functional: mh_functional(stream),
        k_h,
        rho,
        lambda1: grid.lambda1(),
        force: force_norm(params, &extras),
    };
    let (c, c_sob) = (params.c_interp, params.c_sob);
    let ev = evaluate(&inputs, params, variant, &extras, c, c_sob)?;
    let satisfied = !ev.range.is_empty();
    let mu = ev.range.default_mu();
    let table_entry = |v| h0_with(params, inputs.lambda1, c, c_sob, v, &extras);
    let h0_variants = H0Table {
        weak: table_entry(H0Variant::Weak)?,
        strong: table_entry(H0Variant::Strong)?,
        sync: table_entry(H0Variant::Sync).ok(),
        attractor: table_entry(H0Variant::Attractor)?,
        criterion: table_entry(H0Variant::Criterion)?,
        weakened: table_entry(H0Variant::Weakened)?,
        criterion_weakened: table_entry(H0Variant::CriterionWeakened)?,
    };
    let passes = |cc: f64, cs: f64| {
        evaluate(&inputs, params, variant, &extras, cc, cs)
            .map(|e| !e.range.is_empty())
            .unwrap_or(false)
    };
    Ok(ConditionReport {
        variant,
        interpolant: inputs.kind,
        records: stream.len(),
        h,
        m_h: ev.m_h,
        m_h_variant: ev.m_h_variant,
        k_h,
        tau0: extras.tau0,
        p: extras.p,
        q,
        h0: ev.h0,
        h0_variants,
        mu_range: ev.range,
        mu_interval: ev.range.interval(),
        mu,
        alpha: mu.map(|m| decay_rate(m, params, inputs.lambda1, extras.model)),
        condition_dai_satisfied: satisfied,
        regularity_verdict: variant.is_criterion().then_some(satisfied),
        violated: ev.violated,
        constants_used: ConstantsUsed {
            c,
            c_sob,
            s2: extras
                .m0
                .map(|m0| temperature_bound(c_sob, 2.0, m0, inputs.lambda1)),
            m0: extras.m0,
            lambda1: inputs.lambda1,
            force_norm: inputs.force,
        },
        max_c_passing: largest_passing(c, |x| passes(x, c_sob)),
        max_c_sob_passing: largest_passing(c_sob, |x| passes(c, x)),
    })
}

impl ConditionReport {
    /// One-line human-readable verdict.
    pub fn verdict_line(&self) -> String {
        match self.mu_interval {
            Some([a, b]) => format!(
                "SATISFIED ({}): mu in [{a:.6e}, {b:.6e}], selected mu = {:.6e}, alpha = {:.6e}",
                self.variant.name(),
                self.mu.unwrap_or(f64::NAN),
                self.alpha.unwrap_or(f64::NAN)
            ),
            None => format!(
                "NOT SATISFIED ({}): {}",
                self.variant.name(),
                self.violated.join("; ")
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_params() -> Params {
        Params::new(1.0, 1.0)
    }

    fn unit_grid() -> Grid {
        // λ₁ = 1 needs a box of side 2π.
        Grid::torus(&[2.0 * std::f64::consts::PI; 2], &[8, 8]).unwrap()
    }

    #[test]
    fn weak_and_attractor_examples() {
        let g = unit_grid();
        assert!((g.lambda1() - 1.0).abs() < 1e-12);
        let e = ConditionExtras::default();
        let p = unit_params();
        assert!((h0_variant(&p, &g, H0Variant::Weak, &e).unwrap() - 0.25).abs() < 1e-15);
        assert!((h0_variant(&p, &g, H0Variant::Attractor, &e).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            h0_variant(&p, &g, H0Variant::Sync, &e),
            Err(Error::MissingExtra(_))
        ));
    }

    #[test]
    fn sync_interval_example() {
        let p = unit_params();
        let m_h = (1.0f64 / 64.0).powf(0.25);
        let r = mu_range(m_h, 0.5, 1.0, &p);
        let [a, b] = r.interval().unwrap();
        assert!((a - 0.25).abs() < 1e-15);
        assert!((b - 1.0).abs() < 1e-15);
        assert!((r.default_mu().unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_interval_at_h0() {
        let p = unit_params();
        let r = mu_range(0.0, 0.7, 0.7, &p);
        let [a, b] = r.interval().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn weakened_example_is_empty() {
        let p = unit_params();
        let r = mu_range_weakened(1.0, 0.5, 1.0, 3.0, 1.5, &p).unwrap();
        let expected = (32.0 / 1.5f64.powf(4.0 / 3.0)).powi(3);
        assert!((r.lower - expected).abs() < 1e-9 * expected);
        assert_eq!(r.upper, 1.0);
        assert!(r.is_empty());
        assert!(mu_range_weakened(1.0, 0.5, 1.0, 2.0, 2.0, &p).is_err());
        let zero = mu_range_weakened(0.0, 0.5, 1.0, 3.0, 1.5, &p).unwrap();
        assert_eq!(zero.lower, 0.25);
    }

    #[test]
    fn weakened_mh_grows_with_mu() {
        let p = unit_params();
        let a = weakened_mh(1.0, 1.0, 3.0, 1.5, 1.0, &p, 1.0, 0.0);
        let b = weakened_mh(1.0, 8.0, 3.0, 1.5, 1.0, &p, 1.0, 0.0);
        assert!((b * b / (a * a) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn largest_passing_finds_threshold() {
        let x = largest_passing(1.0, |c| c <= 3.7).unwrap();
        assert!((x - 3.7).abs() < 1e-9);
        assert!(largest_passing(1.0, |_| false).is_none());
    }
}
