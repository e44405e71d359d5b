use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Geometry, Grid};

/// Axis-aligned congruent cells aligned with the collocation grid.
///
/// Cells are indexed row-major over their index tuple (last axis fastest).
/// In the channel the cells of the bottom and top layers form the boundary
/// set, whose shape functions are shrunk away from the walls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    cells: Vec<usize>,
    cell_size: Vec<f64>,
    points_per_cell: Vec<usize>,
    channel: bool,
}

impl Partition {
    /// `cells[i]` cells along axis i; each must divide the grid resolution.
    pub fn new(grid: &Grid, cells: &[usize]) -> Result<Self> {
        if cells.len() != grid.dim() {
            return Err(Error::Interpolant(format!(
                "{} cell counts for a {}D grid",
                cells.len(),
                grid.dim()
            )));
        }
        let mut points_per_cell = Vec::with_capacity(cells.len());
        for (&n, &r) in cells.iter().zip(grid.resolution()) {
            if n == 0 || r % n != 0 {
                return Err(Error::Interpolant(format!(
                    "{n} cells do not divide resolution {r}"
                )));
            }
            points_per_cell.push(r / n);
        }
        let cell_size = grid
            .extents()
            .iter()
            .zip(cells)
            .map(|(&l, &n)| l / n as f64)
            .collect();
        Ok(Self {
            cells: cells.to_vec(),
            cell_size,
            points_per_cell,
            channel: grid.geometry() == Geometry::Channel,
        })
    }

    /// Uniform partition with the same count on every axis and diameter `h`.
    pub fn for_h(grid: &Grid, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Interpolant(format!("h = {h} must be positive")));
        }
        let diag = grid.extents().iter().map(|l| l * l).sum::<f64>().sqrt();
        let n = (diag / h).round();
        if n < 1.0 || ((diag / n) - h).abs() > 1e-9 * h {
            return Err(Error::Interpolant(format!(
                "no uniform partition of this domain has cell diameter {h}"
            )));
        }
        Self::new(grid, &vec![n as usize; grid.dim()])
    }

    pub fn cells_per_axis(&self) -> &[usize] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Side lengths of one cell.
    pub fn cell_size(&self) -> &[f64] {
        &self.cell_size
    }

    /// Cell diameter.
    pub fn diameter(&self) -> f64 {
        self.cell_size.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size.iter().product()
    }

    pub fn points_per_cell(&self) -> usize {
        self.points_per_cell.iter().product()
    }

    /// Cell index tuple of a flat cell index.
    pub fn unravel(&self, alpha: usize) -> Vec<usize> {
        let mut out = vec![0; self.cells.len()];
        let mut rem = alpha;
        for axis in (0..self.cells.len()).rev() {
            out[axis] = rem % self.cells[axis];
            rem /= self.cells[axis];
        }
        out
    }

    /// Cell containing a collocation point.
    pub fn cell_of_point(&self, pos: &[usize]) -> usize {
        let mut alpha = 0;
        for axis in 0..self.cells.len() {
            alpha = alpha * self.cells[axis] + pos[axis] / self.points_per_cell[axis];
        }
        alpha
    }

    /// Lower and upper corner of a cell.
    pub fn bounds(&self, alpha: usize) -> (Vec<f64>, Vec<f64>) {
        let idx = self.unravel(alpha);
        let lo: Vec<f64> = idx
            .iter()
            .zip(&self.cell_size)
            .map(|(&i, &s)| i as f64 * s)
            .collect();
        let hi = lo.iter().zip(&self.cell_size).map(|(a, s)| a + s).collect();
        (lo, hi)
    }

    /// True for cells touching a channel wall.
    pub fn is_boundary(&self, alpha: usize) -> bool {
        if !self.channel {
            return false;
        }
        let d = self.cells.len();
        let v = self.unravel(alpha)[d - 1];
        v == 0 || v + 1 == self.cells[d - 1]
    }

    /// Cells touching a channel wall.
    pub fn boundary_set(&self) -> Vec<usize> {
        (0..self.len()).filter(|&a| self.is_boundary(a)).collect()
    }

    /// Whether point `x` lies in the (possibly wall-shrunk) support of cell
    /// `alpha`'s indicator. Cell faces are half-open so that the cells tile
    /// the domain.
    pub fn in_shape(&self, alpha: usize, x: &[f64], epsilon: f64) -> bool {
        let (lo, hi) = self.bounds(alpha);
        let d = self.cells.len();
        for axis in 0..d {
            let (mut a, mut b) = (lo[axis], hi[axis]);
            if axis == d - 1 && self.is_boundary(alpha) {
                let top = self.cell_size[axis] * self.cells[axis] as f64;
                if a == 0.0 {
                    a = epsilon;
                }
                if (b - top).abs() < 1e-12 * top {
                    b = top - epsilon;
                }
                if !(x[axis] > a && x[axis] < b) {
                    return false;
                }
            } else if !(x[axis] >= a && x[axis] < b) {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_tile_the_grid() {
        let g = Grid::torus(&[1.0, 2.0], &[16, 32]).unwrap();
        let p = Partition::new(&g, &[4, 8]).unwrap();
        let mut counts = vec![0; p.len()];
        for idx in 0..g.points() {
            counts[p.cell_of_point(&g.unravel_point(idx))] += 1;
        }
        assert!(counts.iter().all(|&c| c == p.points_per_cell()));
        assert!((p.diameter() - (0.0625f64 + 0.0625).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_divisor() {
        let g = Grid::torus(&[1.0, 1.0], &[16, 16]).unwrap();
        assert!(Partition::new(&g, &[3, 4]).is_err());
    }

    #[test]
    fn for_h_matches_diameter() {
        let g = Grid::torus(&[0.5f64.sqrt(), 0.5f64.sqrt()], &[64, 64]).unwrap();
        let p = Partition::for_h(&g, 0.125).unwrap();
        assert_eq!(p.cells_per_axis(), &[8, 8]);
        assert!(Partition::for_h(&g, 0.3).is_err());
    }

    #[test]
    fn channel_boundary_layers() {
        let g = Grid::channel(1.0, [16, 16]).unwrap();
        let p = Partition::new(&g, &[4, 4]).unwrap();
        assert_eq!(p.boundary_set().len(), 8);
        let torus = Grid::torus(&[1.0, 1.0], &[16, 16]).unwrap();
        assert!(Partition::new(&torus, &[4, 4])
            .unwrap()
            .boundary_set()
            .is_empty());
    }
}
