//! Differential operators, projections, advection terms and norms.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::field::{
    comp_forward_real, comp_inverse_real, to_physical, to_spectral, Samples, SpectralField,
};
use super::grid::{FieldKind, Grid};
use crate::error::{Error, Result};

/// Relative divergence accepted for the advecting field of B₀ and B₁.
pub const SOLENOIDAL_TOL: f64 = 1e-10;

/// Which linear operator `apply_a` represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    /// Stokes operator on velocities.
    Velocity,
    /// Dirichlet Laplacian on temperature.
    Temperature,
}

/// Leray projection: removes the gradient part mode by mode.
pub fn leray_project(v: &SpectralField) -> Result<SpectralField> {
    v.require_vector()?;
    let mut out = v.clone();
    leray_in_place(&mut out);
    Ok(out)
}

pub(crate) fn leray_in_place(v: &mut SpectralField) {
    let grid = v.grid().clone();
    let d = grid.dim();
    let lam = grid.lambdas();
    let comps = v.components_mut();
    for idx in 0..grid.modes() {
        if lam[idx] == 0.0 {
            continue;
        }
        let mut dot = Complex64::default();
        for (a, comp) in comps.iter().enumerate().take(d) {
            dot += comp[idx] * grid.k_axis(a)[idx];
        }
        let s = dot / lam[idx];
        for (a, comp) in comps.iter_mut().enumerate().take(d) {
            comp[idx] -= s * grid.k_axis(a)[idx];
        }
    }
}

/// Multiplies each mode by its eigenvalue |k|².
///
/// Both operators share the eigenvalues of the lattice; the parity of the
/// stored field selects the basis.
pub fn apply_a(f: &SpectralField, _which: Operator) -> SpectralField {
    let mut out = f.clone();
    let lam = f.grid().lambdas().to_vec();
    for comp in out.components_mut() {
        for (v, &l) in comp.iter_mut().zip(&lam) {
            *v *= l;
        }
    }
    out
}

/// Spectral divergence of a vector field.
pub fn divergence(v: &SpectralField) -> Result<SpectralField> {
    v.require_vector()?;
    let grid = v.grid();
    let mut out = vec![Complex64::default(); grid.modes()];
    for (a, comp) in v.components().iter().enumerate() {
        let k = grid.k_axis(a);
        for (o, (&c, &ka)) in out.iter_mut().zip(comp.iter().zip(k)) {
            *o += Complex64::new(0.0, ka) * c;
        }
    }
    SpectralField::from_coeffs(grid, FieldKind::Scalar, vec![out])
}

/// Spectral gradient of a scalar field.
pub fn gradient(f: &SpectralField) -> Result<SpectralField> {
    f.require_scalar()?;
    let grid = f.grid();
    let c = f.component(0);
    let comps = (0..grid.dim())
        .map(|a| {
            c.iter()
                .zip(grid.k_axis(a))
                .map(|(&v, &k)| Complex64::new(0.0, k) * v)
                .collect()
        })
        .collect();
    SpectralField::from_coeffs(grid, FieldKind::Vector, comps)
}

/// |div v| / ‖v‖ computed in coefficient space (0 for the zero field).
pub fn divergence_ratio(v: &SpectralField) -> Result<f64> {
    let div = divergence(v)?;
    let num: f64 = div.component(0).iter().map(|c| c.norm_sqr()).sum();
    let den: f64 = weighted_sum(v, true);
    Ok(if den == 0.0 { 0.0 } else { (num / den).sqrt() })
}

fn check_solenoidal(u: &SpectralField) -> Result<()> {
    let r = divergence_ratio(u)?;
    if r > SOLENOIDAL_TOL {
        return Err(Error::Precondition(format!(
            "advecting field has relative divergence {r:e}"
        )));
    }
    Ok(())
}

/// Physical samples of the dealiased components of `u`.
fn dealiased_physical(u: &SpectralField) -> Vec<Vec<f64>> {
    let grid = u.grid();
    let keep = grid.dealias_mask();
    u.components()
        .iter()
        .map(|c| {
            let d: Vec<Complex64> = c
                .iter()
                .zip(keep)
                .map(|(&v, &k)| if k { v } else { Complex64::default() })
                .collect();
            comp_inverse_real(grid, &d)
        })
        .collect()
}

/// Dealiased coefficients of Σ_a u_a ∂_a v for one component of v.
fn advect_component(grid: &Grid, u_phys: &[Vec<f64>], comp_v: &[Complex64]) -> Vec<Complex64> {
    let keep = grid.dealias_mask();
    let mut acc = vec![0.0; grid.modes()];
    for (a, ua) in u_phys.iter().enumerate() {
        let k = grid.k_axis(a);
        let deriv: Vec<Complex64> = comp_v
            .iter()
            .zip(k)
            .zip(keep)
            .map(|((&c, &ka), &kp)| {
                if kp {
                    Complex64::new(-ka * c.im, ka * c.re)
                } else {
                    Complex64::default()
                }
            })
            .collect();
        let g = comp_inverse_real(grid, &deriv);
        for ((s, &x), &y) in acc.iter_mut().zip(ua).zip(&g) {
            *s += x * y;
        }
    }
    let mut out = comp_forward_real(grid, &acc);
    for (v, &k) in out.iter_mut().zip(keep) {
        if !k {
            *v = Complex64::default();
        }
    }
    out
}

/// Dealiased (u·∇)v for each component of v, without projection.
fn advect(u: &SpectralField, v: &SpectralField) -> SpectralField {
    let grid = u.grid().clone();
    let u_phys = dealiased_physical(u);
    let mut out = SpectralField::zeros(&grid, v.kind());
    for (comp_out, comp_v) in out.components_mut().iter_mut().zip(v.components()) {
        *comp_out = advect_component(&grid, &u_phys, comp_v);
    }
    out
}

/// Advection terms of one time step, sharing the velocity transforms.
pub(crate) struct Advection {
    /// P((u·∇)u).
    pub momentum: SpectralField,
    /// (u·∇)θ, when a temperature was supplied.
    pub heat: Option<SpectralField>,
    /// max |u_a| over the collocation points, per axis.
    pub umax: Vec<f64>,
}

/// B₀(u, u) and B₁(u, θ) without the solenoidality check; the caller
/// guarantees a divergence-free u.
pub(crate) fn advection_terms(u: &SpectralField, theta: Option<&SpectralField>) -> Advection {
    let grid = u.grid().clone();
    let u_phys = dealiased_physical(u);
    let umax = u_phys
        .iter()
        .map(|c| c.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .collect();
    let mut momentum = SpectralField::zeros(&grid, FieldKind::Vector);
    for (comp_out, comp_v) in momentum.components_mut().iter_mut().zip(u.components()) {
        *comp_out = advect_component(&grid, &u_phys, comp_v);
    }
    leray_in_place(&mut momentum);
    let heat = theta.map(|t| {
        let mut h = SpectralField::zeros(&grid, FieldKind::Scalar);
        h.components_mut()[0] = advect_component(&grid, &u_phys, t.component(0));
        h
    });
    Advection {
        momentum,
        heat,
        umax,
    }
}

/// Leray-projected, dealiased advection P((u·∇)v).
pub fn bilinear_b0(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    u.require_vector()?;
    v.require_vector()?;
    u.same_space(v)?;
    check_solenoidal(u)?;
    let mut out = advect(u, v);
    leray_in_place(&mut out);
    Ok(out)
}

/// Dealiased scalar advection (u·∇)θ.
pub fn bilinear_b1(u: &SpectralField, theta: &SpectralField) -> Result<SpectralField> {
    u.require_vector()?;
    theta.require_scalar()?;
    if *u.grid() != *theta.grid() {
        return Err(Error::GridMismatch);
    }
    check_solenoidal(u)?;
    Ok(advect(u, theta))
}

fn weighted_sum(f: &SpectralField, h1: bool) -> f64 {
    let lam = f.grid().lambdas();
    f.components()
        .iter()
        .map(|c| {
            c.iter()
                .zip(lam)
                .map(|(v, &l)| if h1 { l * v.norm_sqr() } else { v.norm_sqr() })
                .sum::<f64>()
        })
        .sum()
}

/// L² and H¹-seminorm of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub h1: f64,
}

pub fn norms(f: &SpectralField) -> Norms {
    let vol = f.grid().volume();
    Norms {
        l2: (vol * weighted_sum(f, false)).sqrt(),
        h1: (vol * weighted_sum(f, true)).sqrt(),
    }
}

pub fn l2_norm(f: &SpectralField) -> f64 {
    (f.grid().volume() * weighted_sum(f, false)).sqrt()
}

pub fn h1_norm(f: &SpectralField) -> f64 {
    (f.grid().volume() * weighted_sum(f, true)).sqrt()
}

/// L² inner product (f, g).
pub fn inner(f: &SpectralField, g: &SpectralField) -> Result<f64> {
    inner_weighted(f, g, false)
}

/// H¹ inner product ((f, g)) = (A f, g).
pub fn inner_h1(f: &SpectralField, g: &SpectralField) -> Result<f64> {
    inner_weighted(f, g, true)
}

fn inner_weighted(f: &SpectralField, g: &SpectralField, h1: bool) -> Result<f64> {
    if *f.grid() != *g.grid() {
        return Err(Error::GridMismatch);
    }
    if f.components().len() != g.components().len() {
        return Err(Error::Kind("component counts differ".into()));
    }
    let lam = f.grid().lambdas();
    let mut s = 0.0;
    for (a, b) in f.components().iter().zip(g.components()) {
        for ((x, y), &l) in a.iter().zip(b).zip(lam) {
            let p = x.re * y.re + x.im * y.im;
            s += if h1 { l * p } else { p };
        }
    }
    Ok(s * f.grid().volume())
}

/// L^p norm by collocation quadrature (`p = ∞` gives the max norm).
pub fn lp_norm(f: &SpectralField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p = {p} must be at least 1")));
    }
    let s = to_physical(f)?;
    Ok(lp_of_samples(&s, f.grid().cell_volume(), p))
}

pub(crate) fn lp_of_samples(s: &Samples, cell: f64, p: f64) -> f64 {
    let mag = s.magnitude();
    if p.is_infinite() {
        return mag.iter().cloned().fold(0.0, f64::max);
    }
    (mag.iter().map(|m| m.powf(p)).sum::<f64>() * cell).powf(1.0 / p)
}

/// Seeded random real field band-limited to lattice index norm `band`, with
/// amplitude spectrum (1 + |m|²)^(−decay/2), zero mean, solenoidal when a
/// vector, and dealiased.
pub fn random_field(
    grid: &Arc<Grid>,
    kind: FieldKind,
    rng: &mut impl Rng,
    band: f64,
    decay: f64,
) -> SpectralField {
    let mut noise = Samples::zeros(grid, kind);
    for comp in &mut noise.data {
        for v in comp.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
    }
    let mut f = to_spectral(&noise, grid).expect("samples built from the grid");
    let weights: Vec<f64> = (0..grid.modes())
        .map(|idx| {
            let m = grid.mode_ints(idx);
            let m2: f64 = m.iter().map(|&x| (x * x) as f64).sum();
            if idx == 0 || m2 > band * band || grid.is_nyquist(idx) {
                0.0
            } else {
                (1.0 + m2).powf(-decay / 2.0)
            }
        })
        .collect();
    for comp in f.components_mut() {
        for (v, &w) in comp.iter_mut().zip(&weights) {
            *v *= w;
        }
    }
    if kind == FieldKind::Vector {
        leray_in_place(&mut f);
    }
    f.dealias();
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid2() -> Arc<Grid> {
        Arc::new(Grid::torus(&[2.0 * PI, 2.0 * PI], &[32, 32]).unwrap())
    }

    #[test]
    fn gradient_is_annihilated() {
        let g = grid2();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = random_field(&g, FieldKind::Scalar, &mut rng, 8.0, 0.0);
        let grad = gradient(&phi).unwrap();
        let p = leray_project(&grad).unwrap();
        assert!(l2_norm(&p) <= 1e-12 * l2_norm(&grad));
    }

    #[test]
    fn scalar_input_is_a_type_error() {
        let g = grid2();
        let f = SpectralField::zeros(&g, FieldKind::Scalar);
        assert!(matches!(leray_project(&f), Err(Error::Kind(_))));
    }

    #[test]
    fn unit_mode_has_unit_norm_and_sqrt_lambda_ratio() {
        let g = Arc::new(Grid::torus(&[1.0, 1.0], &[16, 16]).unwrap());
        let mut f = SpectralField::zeros(&g, FieldKind::Scalar);
        let k = g.index_of(&[2, 1]).unwrap();
        f.components_mut()[0][k] = Complex64::new(1.0, 0.0);
        let n = norms(&f);
        assert!((n.l2 - 1.0).abs() < 1e-14);
        assert!((n.h1 / n.l2 - g.lambdas()[k].sqrt()).abs() < 1e-12);
    }

    #[test]
    fn plane_wave_advected_by_constant_flow() {
        let g = grid2();
        let (ux, uy) = (0.7, -0.3);
        let mut u = SpectralField::zeros(&g, FieldKind::Vector);
        u.components_mut()[0][0] = Complex64::new(ux, 0.0);
        u.components_mut()[1][0] = Complex64::new(uy, 0.0);
        let mut v = SpectralField::zeros(&g, FieldKind::Vector);
        // Solenoidal plane wave along k = (1, 2): amplitude ⟂ k.
        let k = g.index_of(&[1, 2]).unwrap();
        let kn = g.index_of(&[-1, -2]).unwrap();
        let a = Complex64::new(0.3, 0.4);
        v.components_mut()[0][k] = a * 2.0;
        v.components_mut()[1][k] = -a;
        v.components_mut()[0][kn] = (a * 2.0).conj();
        v.components_mut()[1][kn] = (-a).conj();
        let b = bilinear_b0(&u, &v).unwrap();
        for idx in [k, kn] {
            let kv = g.kvec(idx);
            let phase = Complex64::new(0.0, kv[0] * ux + kv[1] * uy);
            for c in 0..2 {
                let expect = phase * v.component(c)[idx];
                assert!((b.component(c)[idx] - expect).norm() < 1e-12);
            }
        }
        let total: f64 = b.components().iter().flatten().map(|c| c.norm()).sum();
        let at_k: f64 = [k, kn]
            .iter()
            .map(|&i| b.component(0)[i].norm() + b.component(1)[i].norm())
            .sum();
        assert!((total - at_k).abs() < 1e-12);
    }

    #[test]
    fn non_solenoidal_advector_rejected() {
        let g = grid2();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = random_field(&g, FieldKind::Scalar, &mut rng, 8.0, 0.0);
        let grad = gradient(&phi).unwrap();
        assert!(matches!(
            bilinear_b0(&grad, &grad),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn lp_rejects_small_p() {
        let g = grid2();
        let f = SpectralField::zeros(&g, FieldKind::Scalar);
        assert!(matches!(lp_norm(&f, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn l4_norm_of_sine_product() {
        // ∫∫ sin⁴x sin⁴y over [0,2π]² = (3π/4)².
        let g = grid2();
        let s = Samples::from_fn(&g, FieldKind::Scalar, |x| {
            [x[0].sin() * x[1].sin(), 0.0, 0.0]
        });
        let f = to_spectral(&s, &g).unwrap();
        let l4 = lp_norm(&f, 4.0).unwrap();
        let exact = (3.0 * PI / 4.0).powi(2).powf(0.25);
        assert!((l4 - exact).abs() < 1e-12);
    }
}
