//! Multidimensional complex FFTs assembled from rustfft line transforms.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// Lines handed to one rayon task when an axis is contiguous.
const LINES_PER_TASK: usize = 32;

#[derive(Clone)]
pub(crate) struct FftNd {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl FftNd {
    pub(crate) fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self {
            shape: shape.to_vec(),
            forward,
            inverse,
        }
    }

    /// Unnormalized transform over every axis, in place.
    ///
    /// Each line is transformed independently, so the result does not depend
    /// on how rayon schedules the work.
    pub(crate) fn process(&self, data: &mut [Complex64], inverse: bool) {
        debug_assert_eq!(data.len(), self.shape.iter().product::<usize>());
        for axis in (0..self.shape.len()).rev() {
            let len = self.shape[axis];
            let stride: usize = self.shape[axis + 1..].iter().product();
            let fft = if inverse {
                &self.inverse[axis]
            } else {
                &self.forward[axis]
            };
            if stride == 1 {
                run_lines(fft.as_ref(), data, len);
            } else {
                let block = len * stride;
                for blk in data.chunks_mut(block) {
                    let mut t = vec![Complex64::default(); block];
                    t.par_chunks_mut(len).enumerate().for_each(|(i, line)| {
                        for (j, slot) in line.iter_mut().enumerate() {
                            *slot = blk[j * stride + i];
                        }
                    });
                    run_lines(fft.as_ref(), &mut t, len);
                    blk.par_chunks_mut(stride).enumerate().for_each(|(j, row)| {
                        for (i, slot) in row.iter_mut().enumerate() {
                            *slot = t[i * len + j];
                        }
                    });
                }
            }
        }
    }
}

fn run_lines(fft: &dyn Fft<f64>, data: &mut [Complex64], len: usize) {
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(len * LINES_PER_TASK).for_each(|chunk| {
        let mut scratch = vec![Complex64::default(); scratch_len];
        fft.process_with_scratch(chunk, &mut scratch);
    });
}
