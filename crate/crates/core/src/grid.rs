//! The finite periodic model of `R^d`.
//!
//! A grid has `n` points per axis with step `h = 1/sqrt(n)`, so both the time
//! span and the frequency span are `sqrt(n)` wide. Index `j` sits at the
//! continuum coordinate `x_j = j*h` with `j` wrapped to `(-n/2, n/2]`; the same
//! convention is used for frequencies.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when deciding whether a coordinate sits on the grid.
pub const REPRESENTABLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    d: usize,
}

impl Grid {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidGrid(format!("n = {n}, need n >= 8")));
        }
        if d != 1 && d != 2 {
            return Err(Error::InvalidGrid(format!(
                "d = {d}, only d = 1 and d = 2 are supported"
            )));
        }
        Ok(Self { n, d })
    }

    pub fn one_dim(n: usize) -> Result<Self> {
        Self::new(n, 1)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    /// Sampling step `h = 1/sqrt(n)`.
    #[inline]
    pub fn step(&self) -> f64 {
        1.0 / (self.n as f64).sqrt()
    }

    /// Width of the time (and frequency) torus, `sqrt(n)`.
    #[inline]
    pub fn width(&self) -> f64 {
        (self.n as f64).sqrt()
    }

    /// Number of samples, `n^d`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Wraps an integer index to the symmetric range `(-n/2, n/2]`.
    #[inline]
    pub fn wrap_index(&self, j: i64) -> i64 {
        let n = self.n as i64;
        let mut r = j.rem_euclid(n);
        if r > n / 2 {
            r -= n;
        }
        r
    }

    /// Reduces an integer index to `0..n`.
    #[inline]
    pub fn reduce_index(&self, j: i64) -> usize {
        j.rem_euclid(self.n as i64) as usize
    }

    /// Continuum coordinate of the (per-axis) index `j`.
    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        self.wrap_index(j as i64) as f64 * self.step()
    }

    /// Wraps a continuum coordinate to `(-sqrt(n)/2, sqrt(n)/2]`.
    #[inline]
    pub fn wrap_coord(&self, x: f64) -> f64 {
        let w = self.width();
        let half = 0.5 * w;
        let mut r = (x + half).rem_euclid(w) - half;
        // rem_euclid maps the upper edge to the lower one; keep the half-open convention.
        if r <= -half + 1e-12 * w {
            r += w;
        }
        r
    }

    /// Grid index (as an unreduced integer) of a continuum coordinate, or an
    /// error with the nearest representable value.
    pub fn steps_of(&self, x: f64) -> Result<i64> {
        let h = self.step();
        let k = (x / h).round();
        let err = (x / h - k).abs();
        if err > REPRESENTABLE_TOL * (1.0 + k.abs()) {
            return Err(Error::NotGridRepresentable {
                value: x,
                step: h,
                nearest: k * h,
                rounding_error: (x - k * h).abs(),
            });
        }
        Ok(k as i64)
    }

    /// Flat sample index of a per-axis multi-index (row-major, axis 0 slowest).
    #[inline]
    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &j| acc * self.n + j)
    }

    /// Per-axis multi-index of a flat sample index.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.d];
        for slot in out.iter_mut().rev() {
            *slot = flat % self.n;
            flat /= self.n;
        }
        out
    }

    /// Continuum position of a flat sample index.
    pub fn position(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .into_iter()
            .map(|j| self.coord(j))
            .collect()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z_{}^{}", self.n, self.d)
    }
}

/// A point `z = (x, eta)` of phase space in continuum units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub eta: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, eta: Vec<f64>) -> Self {
        debug_assert_eq!(x.len(), eta.len());
        Self { x, eta }
    }

    /// One-dimensional point `(x, eta)`.
    pub fn new1(x: f64, eta: f64) -> Self {
        Self {
            x: vec![x],
            eta: vec![eta],
        }
    }

    pub fn zero(d: usize) -> Self {
        Self {
            x: vec![0.0; d],
            eta: vec![0.0; d],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Coordinates as one vector `(x_1..x_d, eta_1..eta_d)`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.x.iter().chain(self.eta.iter()).copied().collect()
    }

    pub fn from_slice(v: &[f64]) -> Self {
        let d = v.len() / 2;
        Self {
            x: v[..d].to_vec(),
            eta: v[d..].to_vec(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            x: self.x.iter().zip(&other.x).map(|(a, b)| a + b).collect(),
            eta: self
                .eta
                .iter()
                .zip(&other.eta)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            x: self.x.iter().zip(&other.x).map(|(a, b)| a - b).collect(),
            eta: self
                .eta
                .iter()
                .zip(&other.eta)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            x: self.x.iter().map(|a| -a).collect(),
            eta: self.eta.iter().map(|a| -a).collect(),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.x.iter().chain(&self.eta).map(|a| a * a).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Canonical representative on the phase-space torus of `grid`.
    pub fn wrapped(&self, grid: &Grid) -> Self {
        Self {
            x: self.x.iter().map(|&a| grid.wrap_coord(a)).collect(),
            eta: self.eta.iter().map(|&a| grid.wrap_coord(a)).collect(),
        }
    }

    /// Torus norm: Euclidean norm of the wrapped point.
    pub fn torus_norm(&self, grid: &Grid) -> f64 {
        self.wrapped(grid).norm()
    }

    /// Torus distance between two points.
    pub fn torus_distance(&self, other: &Self, grid: &Grid) -> f64 {
        self.sub(other).torus_norm(grid)
    }
}

/// Japanese bracket `<r> = sqrt(1 + r^2)`.
#[inline]
pub fn bracket(r: f64) -> f64 {
    (1.0 + r * r).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_high_dimensional_grids() {
        assert!(Grid::new(4, 1).is_err());
        assert!(Grid::new(16, 3).is_err());
        assert!(Grid::new(8, 2).is_ok());
    }

    #[test]
    fn coordinates_are_symmetric() {
        let g = Grid::one_dim(8).unwrap();
        let h = g.step();
        let xs: Vec<f64> = (0..8).map(|j| g.coord(j) / h).collect();
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0, 4.0, -3.0, -2.0, -1.0]);
    }

    #[test]
    fn wrap_coord_is_half_open() {
        let g = Grid::one_dim(64).unwrap();
        assert!((g.wrap_coord(4.0) - 4.0).abs() < 1e-12);
        assert!((g.wrap_coord(-4.0) - 4.0).abs() < 1e-12);
        assert!((g.wrap_coord(9.0) - 1.0).abs() < 1e-12);
        assert!((g.wrap_coord(-5.5) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn steps_reject_off_grid_values() {
        let g = Grid::one_dim(64).unwrap();
        assert_eq!(g.steps_of(0.375).unwrap(), 3);
        match g.steps_of(0.3) {
            Err(Error::NotGridRepresentable { nearest, .. }) => {
                assert!((nearest - 0.25).abs() < 1e-12)
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn flatten_round_trips() {
        let g = Grid::new(8, 2).unwrap();
        for flat in 0..g.len() {
            assert_eq!(g.flatten(&g.unflatten(flat)), flat);
        }
    }

    #[test]
    fn torus_distance_uses_shortest_wrap() {
        let g = Grid::one_dim(64).unwrap();
        let a = PhasePoint::new1(3.5, 0.0);
        let b = PhasePoint::new1(-3.5, 0.0);
        assert!((a.torus_distance(&b, &g) - 1.0).abs() < 1e-12);
    }
}
