use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interpolants::{Interpolant, InterpolantSpec, Observation};
use crate::spectral::{l2_norm, random_field, FieldKind, SpectralField};

/// Time-ordered velocity observations produced by one interpolant.
#[derive(Debug, Clone)]
pub struct ObservationStream {
    interpolant: Arc<Interpolant>,
    spec: InterpolantSpec,
    records: Vec<Observation>,
}

impl ObservationStream {
    /// Empty stream; `c_interp` is recorded in the descriptor.
    pub fn new(interpolant: Arc<Interpolant>, c_interp: f64) -> Self {
        let spec = interpolant.spec(c_interp);
        Self {
            interpolant,
            spec,
            records: Vec::new(),
        }
    }

    /// Appends a record after checking kind, size and time order.
    pub fn push(&mut self, obs: Observation) -> Result<()> {
        if obs.kind != self.spec.kind {
            return Err(Error::ObservationMismatch {
                expected: self.spec.kind.to_string(),
                found: obs.kind.to_string(),
            });
        }
        let dim = self.interpolant.grid().dim();
        if obs.components != dim || obs.payload.len() != self.interpolant.payload_len(dim) {
            return Err(Error::Shape(format!(
                "record with {} components and {} values does not fit the interpolant",
                obs.components,
                obs.payload.len()
            )));
        }
        if let Some(last) = self.records.last() {
            if !(obs.time > last.time) {
                return Err(Error::Precondition(format!(
                    "timestamp {} does not follow {}",
                    obs.time, last.time
                )));
            }
        }
        if !obs.time.is_finite() || obs.payload.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite observation".into()));
        }
        self.records.push(obs);
        Ok(())
    }

    pub fn interpolant(&self) -> &Arc<Interpolant> {
        &self.interpolant
    }

    pub fn spec(&self) -> &InterpolantSpec {
        &self.spec
    }

    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Time between first and last record (0 for fewer than two).
    pub fn span(&self) -> f64 {
        match (self.records.first(), self.records.last()) {
            (Some(a), Some(b)) => b.time - a.time,
            _ => 0.0,
        }
    }

    /// Latest record stamped at or before `t` (zero-order hold), or the
    /// first record when `t` precedes the stream.
    pub fn at(&self, t: f64) -> Option<&Observation> {
        let tol = 1e-9 * (1.0 + t.abs());
        let n = self.records.partition_point(|r| r.time <= t + tol);
        self.records.get(n.saturating_sub(1))
    }

    /// τ_σ v: the records from time σ on, restamped to start at zero.
    pub fn shifted(&self, sigma: f64) -> Self {
        let tol = 1e-9 * (1.0 + sigma.abs());
        let records = self
            .records
            .iter()
            .filter(|r| r.time >= sigma - tol)
            .map(|r| Observation {
                time: r.time - sigma,
                ..r.clone()
            })
            .collect();
        Self {
            interpolant: self.interpolant.clone(),
            spec: self.spec.clone(),
            records,
        }
    }

    /// Sup over records of |reconstruct(v)|, the X-norm of the data.
    pub fn sup_l2(&self) -> Result<f64> {
        self.records.iter().try_fold(0.0f64, |m, r| {
            Ok(m.max(l2_norm(&self.interpolant.reconstruct(r)?)))
        })
    }
}

/// Time envelope of an observation perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    Constant { amplitude: f64 },
    Exponential { amplitude: f64, rate: f64 },
}

impl Envelope {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant { amplitude } => amplitude,
            Envelope::Exponential { amplitude, rate } => amplitude * (-rate * t).exp(),
        }
    }

    pub fn sup(&self) -> f64 {
        match *self {
            Envelope::Constant { amplitude } | Envelope::Exponential { amplitude, .. } => {
                amplitude.abs()
            }
        }
    }
}

/// Additive observation error δ(t) = a(t)·φ with a fixed solenoidal
/// pattern φ of unit L² norm.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub envelope: Envelope,
    pattern: SpectralField,
}

impl Perturbation {
    pub fn new(envelope: Envelope, pattern: SpectralField) -> Result<Self> {
        pattern.require_vector()?;
        let n = l2_norm(&pattern);
        if n == 0.0 {
            return Err(Error::Precondition("zero perturbation pattern".into()));
        }
        Ok(Self {
            envelope,
            pattern: pattern.scaled(1.0 / n),
        })
    }

    /// Seeded pattern with the spectrum of the initial conditions.
    pub fn seeded(
        grid: &Arc<crate::spectral::Grid>,
        seed: u64,
        envelope: Envelope,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let band = (grid.resolution().iter().min().copied().unwrap_or(8) / 8) as f64;
        Self::new(
            envelope,
            random_field(grid, FieldKind::Vector, &mut rng, band, 2.0),
        )
    }

    pub fn pattern(&self) -> &SpectralField {
        &self.pattern
    }

    /// Adds a(t)·observe(φ) to `obs` in place.
    pub fn apply(&self, ip: &Interpolant, obs: &mut Observation) -> Result<()> {
        let a = self.envelope.at(obs.time);
        if a == 0.0 {
            return Ok(());
        }
        let p = ip.observe(&self.pattern)?;
        for (v, d) in obs.payload.iter_mut().zip(p.payload) {
            *v += a * d;
        }
        Ok(())
    }
}
