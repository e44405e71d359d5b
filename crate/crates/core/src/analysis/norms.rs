use serde::{Deserialize, Serialize};

use super::series::{window_integrals, ErrorSeries};
use crate::error::{Error, Result};

/// Norms of a recorded trajectory over its sampled time span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceNorms {
    /// sup_s |v(s)|.
    pub x_norm: f64,
    /// sup_s ∫_s^{s+1} ‖v‖², windows clipped at the end of the record.
    pub z_norm: f64,
    /// sup_s (|u(s)|² + |θ(s)|²)^{1/2}.
    pub p_norm: f64,
}

/// Largest unit-window integral of `y`, windows clipped at the last sample.
pub fn sup_unit_window(t: &[f64], y: &[f64]) -> f64 {
    window_integrals(t, y, 1.0, true)
        .into_iter()
        .fold(0.0, |m, (_, v)| m.max(v))
}

/// `x`: samples of |v|; `z`: samples of ‖v‖²; `p_sq`: samples of
/// |u|² + |θ|².
pub fn space_norms(t: &[f64], x: &[f64], z: &[f64], p_sq: &[f64]) -> Result<SpaceNorms> {
    if t.is_empty() {
        return Err(Error::Empty("space norms of an empty record".into()));
    }
    if [x.len(), z.len(), p_sq.len()].iter().any(|&l| l != t.len()) {
        return Err(Error::Shape(
            "norm samples must match the timestamps".into(),
        ));
    }
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, a| m.max(*a));
    Ok(SpaceNorms {
        x_norm: sup(x),
        z_norm: sup_unit_window(t, z),
        p_norm: sup(p_sq).sqrt(),
    })
}

/// [`space_norms`] from named channels of a series.
pub fn space_norms_of(
    series: &ErrorSeries,
    x_channel: &str,
    z_channel: &str,
    p_sq_channels: &[&str],
) -> Result<SpaceNorms> {
    let mut p = vec![0.0; series.len()];
    for name in p_sq_channels {
        for (a, b) in p.iter_mut().zip(series.channel(name)?) {
            *a += b;
        }
    }
    space_norms(
        series.time(),
        series.channel(x_channel)?,
        series.channel(z_channel)?,
        &p,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_record() {
        let t: Vec<f64> = (0..31).map(|i| i as f64 * 0.1).collect();
        let n = space_norms(&t, &vec![2.0; 31], &vec![5.0; 31], &vec![9.0; 31]).unwrap();
        assert_eq!(n.x_norm, 2.0);
        assert!((n.z_norm - 5.0).abs() < 1e-12);
        assert_eq!(n.p_norm, 3.0);
    }

    #[test]
    fn empty_record_is_an_error() {
        assert!(matches!(
            space_norms(&[], &[], &[], &[]),
            Err(Error::Empty(_))
        ));
    }
}
