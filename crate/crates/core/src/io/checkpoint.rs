//! Binary checkpoints of a trajectory.
//!
//! Layout (all little-endian):
//!
//! | bytes | content |
//! |---|---|
//! | 4 | magic `NDGL` |
//! | 4 | format version (u32) |
//! | 1 | dimension |
//! | 1 | geometry tag (1 torus, 2 channel) |
//! | 1 | model tag (1 Boussinesq, 2 Navier-Stokes) |
//! | 1 | flags (bit 0: multistep history present) |
//! | 8·dim | extents (f64) |
//! | 4·dim | resolution (u32) |
//! | 8 | time (f64) |
//! | 8 | time step (f64) |
//! | 8 | completed steps (u64) |
//! | … | u components, then θ, then (if flagged) the history velocity and temperature; each component is `modes` pairs (re, im) of f64 |

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use super::wire::Reader;
use crate::assimilation::{FlowState, History, Model};
use crate::error::{Error, Result};
use crate::spectral::{FieldKind, Geometry, Grid, SpectralField};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"NDGL";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Largest grid a checkpoint may describe (points).
const MAX_POINTS: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub dt: f64,
    pub steps: u64,
    pub state: FlowState,
    pub history: Option<History>,
}

pub(crate) fn geometry_tag(g: Geometry) -> u8 {
    match g {
        Geometry::Torus => 1,
        Geometry::Channel => 2,
    }
}

pub(crate) fn geometry_from_tag(t: u8) -> Option<Geometry> {
    match t {
        1 => Some(Geometry::Torus),
        2 => Some(Geometry::Channel),
        _ => None,
    }
}

fn put_field(out: &mut Vec<u8>, f: &SpectralField) {
    for comp in f.components() {
        for c in comp {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
}

fn get_field(r: &mut Reader<'_>, grid: &Arc<Grid>, kind: FieldKind) -> Result<SpectralField> {
    let modes = grid.modes();
    let comps = (0..grid.components(kind))
        .map(|_| {
            (0..modes)
                .map(|_| Ok(Complex64::new(r.f64()?, r.f64()?)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    SpectralField::from_coeffs(grid, kind, comps)
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let grid = self.state.grid();
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.push(grid.dim() as u8);
        out.push(geometry_tag(grid.geometry()));
        out.push(self.model.tag());
        out.push(u8::from(self.history.is_some()));
        for &l in grid.extents() {
            out.extend_from_slice(&l.to_le_bytes());
        }
        for &n in grid.resolution() {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.state.t.to_le_bytes());
        out.extend_from_slice(&self.dt.to_le_bytes());
        out.extend_from_slice(&self.steps.to_le_bytes());
        put_field(&mut out, &self.state.u);
        put_field(&mut out, &self.state.theta);
        if let Some(h) = &self.history {
            put_field(&mut out, &h.velocity);
            put_field(&mut out, &h.temperature);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version == 0 || version > CHECKPOINT_VERSION {
            return Err(Error::Version {
                found: version,
                supported: CHECKPOINT_VERSION,
            });
        }
        let dim = r.u8()? as usize;
        if !(2..=3).contains(&dim) {
            return Err(Error::Format(format!("dimension {dim}")));
        }
        let geometry = geometry_from_tag(r.u8()?)
            .ok_or_else(|| Error::Format("unknown geometry tag".into()))?;
        let model =
            Model::from_tag(r.u8()?).ok_or_else(|| Error::Format("unknown model tag".into()))?;
        let flags = r.u8()?;
        if flags > 1 {
            return Err(Error::Format(format!("unknown flags {flags:#x}")));
        }
        let extents = (0..dim).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let resolution = (0..dim)
            .map(|_| r.u32().map(|n| n as usize))
            .collect::<Result<Vec<_>>>()?;
        let t = r.f64()?;
        let dt = r.f64()?;
        let steps = r.u64()?;
        if !t.is_finite() || !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Format("invalid time or step".into()));
        }

        // Size check before building the grid so a short file cannot
        // request a huge allocation.
        let points = resolution
            .iter()
            .try_fold(1usize, |a, &n| a.checked_mul(n))
            .filter(|&p| p <= MAX_POINTS)
            .ok_or_else(|| Error::Format("grid too large".into()))?;
        let modes = if geometry == Geometry::Channel {
            2 * points
        } else {
            points
        };
        let fields = if flags == 1 { 2 } else { 1 };
        let expected = 16 * modes * (dim + 1) * fields;
        if r.remaining() != expected {
            return Err(Error::Format(format!(
                "payload has {} bytes, header implies {expected}",
                r.remaining()
            )));
        }
        let grid = Arc::new(Grid::new(geometry, &extents, &resolution)?);
        let u = get_field(&mut r, &grid, FieldKind::Vector)?;
        let theta = get_field(&mut r, &grid, FieldKind::Scalar)?;
        let history = if flags == 1 {
            Some(History {
                velocity: get_field(&mut r, &grid, FieldKind::Vector)?,
                temperature: get_field(&mut r, &grid, FieldKind::Scalar)?,
            })
        } else {
            None
        };
        Ok(Self {
            model,
            dt,
            steps,
            state: FlowState { u, theta, t },
            history,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assimilation::initial_state;

    fn sample(history: bool) -> Checkpoint {
        let g = Arc::new(Grid::torus(&[1.0, 2.0], &[8, 16]).unwrap());
        let s = initial_state(&g, 4, 1.0, 0.5);
        let history = history.then(|| History {
            velocity: s.u.scaled(2.0),
            temperature: s.theta.scaled(-1.0),
        });
        Checkpoint {
            model: Model::Boussinesq,
            dt: 1e-3,
            steps: 17,
            state: FlowState { t: 0.125, ..s },
            history,
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        for h in [false, true] {
            let c = sample(h);
            assert_eq!(Checkpoint::decode(&c.encode()).unwrap(), c);
        }
    }

    #[test]
    fn rejects_future_versions_and_truncation() {
        let mut bytes = sample(false).encode();
        let good = bytes.clone();
        bytes[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(
            Checkpoint::decode(&bytes),
            Err(Error::Version {
                found: 2,
                supported: 1
            })
        ));
        assert!(matches!(
            Checkpoint::decode(&good[..good.len() - 1]),
            Err(Error::Format(_))
        ));
        assert!(matches!(Checkpoint::decode(b"NDGX"), Err(Error::Format(_))));
    }
}
