use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::dft::Dft;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// A complex vector on the periodic grid, the finite stand-in for `f in L^2(R^d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    grid: Grid,
    values: Vec<Complex64>,
}

impl Signal {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Unit impulse at the flat sample index `at`.
    pub fn impulse(grid: Grid, at: usize) -> Self {
        let mut s = Self::zeros(grid);
        s.values[at] = Complex64::new(1.0, 0.0);
        s
    }

    /// Samples `f` at the continuum positions of the grid.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|k| f(&grid.position(k))).collect();
        Self { grid, values }
    }

    /// Samples `f` scaled by `h^{d/2}`, so that the Euclidean norm of the samples
    /// approximates the `L^2` norm of `f`.
    pub fn sample_l2(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let scale = grid.step().powf(grid.d() as f64 / 2.0);
        let mut s = Self::from_fn(grid, f);
        s.values.iter_mut().for_each(|v| *v *= scale);
        s
    }

    /// Entries with real and imaginary parts uniform in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(grid: Grid, rng: &mut R) -> Self {
        let values = (0..grid.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
            .collect();
        Self { grid, values }
    }

    pub fn from_dvector(grid: Grid, v: &DVector<Complex64>) -> Result<Self> {
        Self::new(grid, v.iter().copied().collect())
    }

    pub fn to_dvector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.values)
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `<self, other> = sum_j self(j) conj(other(j))`.
    pub fn inner(&self, other: &Signal) -> Complex64 {
        debug_assert_eq!(self.grid, other.grid);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.norm_sqr() == 0.0)
    }

    pub fn normalized(&self) -> Result<Self> {
        let nrm = self.norm();
        if nrm == 0.0 {
            return Err(Error::ZeroWindow);
        }
        Ok(self.scaled(Complex64::new(1.0 / nrm, 0.0)))
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * a).collect(),
        }
    }

    pub fn add(&self, other: &Signal) -> Self {
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Signal) -> Self {
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Signal) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Unitary DFT (sample index order, not symmetric order).
    pub fn dft(&self) -> Self {
        let mut v = self.values.clone();
        Dft::new(self.grid).forward(&mut v);
        Self {
            grid: self.grid,
            values: v,
        }
    }

    pub fn idft(&self) -> Self {
        let mut v = self.values.clone();
        Dft::new(self.grid).inverse(&mut v);
        Self {
            grid: self.grid,
            values: v,
        }
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        if &self.grid != grid {
            return Err(Error::GridMismatch(format!(
                "signal lives on {}, expected {}",
                self.grid, grid
            )));
        }
        Ok(())
    }
}
