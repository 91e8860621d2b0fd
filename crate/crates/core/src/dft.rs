//! Discrete Fourier transforms on `Z_n^d` (d = 1, 2) in the unitary convention.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

/// Planned transforms for one grid.
#[derive(Clone)]
pub struct Dft {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Dft {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// In-place `sum_j f(j) e^{-2 pi i m.j/n}` without normalization.
    pub fn forward_raw(&self, data: &mut [Complex64]) {
        self.apply(data, &self.forward);
    }

    /// In-place `sum_m F(m) e^{2 pi i m.j/n}` without normalization.
    pub fn inverse_raw(&self, data: &mut [Complex64]) {
        self.apply(data, &self.inverse);
    }

    /// Unitary forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward_raw(data);
        self.scale(data);
    }

    /// Unitary inverse transform.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse_raw(data);
        self.scale(data);
    }

    fn scale(&self, data: &mut [Complex64]) {
        let s = 1.0 / (self.grid.len() as f64).sqrt();
        data.iter_mut().for_each(|v| *v *= s);
    }

    fn apply(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n();
        debug_assert_eq!(data.len(), self.grid.len());
        match self.grid.d() {
            1 => fft.process(data),
            _ => {
                // rows (last axis) are contiguous
                fft.process(data);
                let mut column = vec![Complex64::new(0.0, 0.0); n];
                for c in 0..n {
                    for r in 0..n {
                        column[r] = data[r * n + c];
                    }
                    fft.process(&mut column);
                    for r in 0..n {
                        data[r * n + c] = column[r];
                    }
                }
            }
        }
    }
}
