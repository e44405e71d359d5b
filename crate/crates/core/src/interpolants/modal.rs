use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::{Geometry, Grid};

/// The first N nonzero lattice modes in ascending eigenvalue order.
///
/// Modes are grouped into symmetry orbits ({k, −k} on the torus, the four
/// reflections (±k₁, ±k₂) in the channel) so that the projection maps real
/// fields to real fields. Orbits are ordered by eigenvalue, ties broken by
/// the lexicographic order of their largest member; members of an orbit are
/// listed in lexicographic order. Only modes kept by the 2/3 rule are
/// candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalBasis {
    indices: Vec<usize>,
    lambdas: Vec<f64>,
}

fn orbits(grid: &Grid) -> Vec<(f64, Vec<i64>, Vec<usize>)> {
    let d = grid.dim();
    let mut groups: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for idx in 0..grid.modes() {
        if !grid.dealias_mask()[idx] || grid.lambdas()[idx] == 0.0 {
            continue;
        }
        let m = grid.mode_ints(idx)[..d].to_vec();
        let neg: Vec<i64> = m.iter().map(|x| -x).collect();
        let mut members = vec![m.clone(), neg];
        if grid.geometry() == Geometry::Channel {
            let mut flip = m.clone();
            flip[d - 1] = -flip[d - 1];
            let flip_neg: Vec<i64> = flip.iter().map(|x| -x).collect();
            members.push(flip);
            members.push(flip_neg);
        }
        let key = members.iter().max().cloned().expect("nonempty");
        groups.entry(key).or_default().push(idx);
    }
    let mut out: Vec<(f64, Vec<i64>, Vec<usize>)> = groups
        .into_iter()
        .map(|(key, mut members)| {
            members.sort_by_key(|&i| grid.mode_ints(i));
            (grid.lambdas()[members[0]], key, members)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    out
}

impl ModalBasis {
    pub fn new(grid: &Arc<Grid>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Interpolant("modal interpolant needs N >= 1".into()));
        }
        let mut basis = Self {
            indices: Vec::new(),
            lambdas: Vec::new(),
        };
        let mut prev = 0;
        for (lam, _, members) in orbits(grid) {
            if basis.indices.len() >= n {
                break;
            }
            prev = basis.indices.len();
            for idx in members {
                basis.indices.push(idx);
                basis.lambdas.push(lam);
            }
        }
        if basis.indices.len() < n {
            return Err(Error::Interpolant(format!(
                "N = {n} exceeds the {} retained modes",
                basis.indices.len()
            )));
        }
        if basis.indices.len() != n {
            return Err(Error::Interpolant(format!(
                "N = {n} splits a symmetry orbit; nearest valid counts are {} and {}",
                prev,
                basis.indices.len()
            )));
        }
        Ok(basis)
    }

    /// All orbits with eigenvalue at most `lambda_max` (at least one orbit).
    pub fn up_to(grid: &Arc<Grid>, lambda_max: f64) -> Result<Self> {
        let mut basis = Self {
            indices: Vec::new(),
            lambdas: Vec::new(),
        };
        for (lam, _, members) in orbits(grid) {
            if lam > lambda_max * (1.0 + 1e-12) {
                break;
            }
            for idx in members {
                basis.indices.push(idx);
                basis.lambdas.push(lam);
            }
        }
        if basis.indices.is_empty() {
            return Err(Error::Interpolant(format!(
                "no mode has eigenvalue below {lambda_max}"
            )));
        }
        Ok(basis)
    }

    /// Flat lattice indices of the retained modes, in basis order.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Eigenvalue of each retained mode.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Largest retained eigenvalue λ_N.
    pub fn lambda_n(&self) -> f64 {
        *self.lambdas.last().expect("basis is never empty")
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.indices.contains(&idx)
    }
}
