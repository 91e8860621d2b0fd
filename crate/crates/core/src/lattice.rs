//! Lattices `Lambda = A Z^{2d}` on the phase-space torus.
//!
//! The generator is given in grid units (integer steps). Coordinates are
//! ordered `(x_1..x_d, eta_1..eta_d)`; columns of `A` are the generators.

use std::collections::{HashMap, HashSet, VecDeque};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{Grid, PhasePoint};

#[derive(Debug, Clone)]
pub struct Lattice {
    grid: Grid,
    generator: DMatrix<i64>,
    /// Reduced grid indices `0..n` per phase-space coordinate.
    indices: Vec<Vec<usize>>,
    points: Vec<PhasePoint>,
    lookup: HashMap<Vec<usize>, usize>,
}

impl Lattice {
    /// Enumerates `A Z^{2d}` modulo the torus. `a` is `2d x 2d` in grid units and
    /// must have integer entries.
    pub fn new(a: &DMatrix<f64>, grid: Grid) -> Result<Self> {
        let dim = 2 * grid.d();
        if a.nrows() != dim || a.ncols() != dim {
            return Err(Error::SingularGenerator { expected: dim });
        }
        let mut generator = DMatrix::<i64>::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                let v = a[(r, c)];
                let k = v.round();
                if (v - k).abs() > 1e-9 * (1.0 + k.abs()) {
                    return Err(Error::IncommensurateGenerator {
                        row: r,
                        col: c,
                        value: v,
                        nearest: k,
                    });
                }
                generator[(r, c)] = k as i64;
            }
        }
        if generator.map(|v| v as f64).determinant().abs() < 0.5 {
            return Err(Error::SingularGenerator { expected: dim });
        }

        let n = grid.n();
        let reduce =
            |v: &[i64]| -> Vec<usize> { v.iter().map(|&c| grid.reduce_index(c)).collect() };
        let cols: Vec<Vec<i64>> = (0..dim)
            .map(|c| generator.column(c).iter().copied().collect())
            .collect();

        // Subgroup closure of the generators in Z_n^{2d}.
        let origin = vec![0usize; dim];
        let mut seen: HashSet<Vec<usize>> = HashSet::from([origin.clone()]);
        let mut queue = VecDeque::from([origin]);
        while let Some(p) = queue.pop_front() {
            for col in &cols {
                for sign in [1i64, -1] {
                    let q: Vec<i64> = p
                        .iter()
                        .zip(col)
                        .map(|(&a, &b)| a as i64 + sign * b)
                        .collect();
                    let q = reduce(&q);
                    if seen.insert(q.clone()) {
                        queue.push_back(q);
                    }
                }
            }
        }

        let mut indices: Vec<Vec<usize>> = seen.into_iter().collect();
        let wrapped = |idx: &Vec<usize>| -> Vec<i64> {
            idx.iter().map(|&j| grid.wrap_index(j as i64)).collect()
        };
        indices.sort_by_key(wrapped);
        let points = indices
            .iter()
            .map(|idx| {
                let c: Vec<f64> = idx.iter().map(|&j| grid.coord(j)).collect();
                PhasePoint::from_slice(&c)
            })
            .collect();
        let lookup = indices
            .iter()
            .enumerate()
            .map(|(i, idx)| (idx.clone(), i))
            .collect();
        debug_assert!(n > 0);
        Ok(Self {
            grid,
            generator,
            indices,
            points,
            lookup,
        })
    }

    /// Separable lattice `diag(a, .., a, b, .., b)` in grid units.
    pub fn separable(grid: Grid, a: usize, b: usize) -> Result<Self> {
        let d = grid.d();
        let diag: Vec<f64> = (0..2 * d)
            .map(|i| if i < d { a as f64 } else { b as f64 })
            .collect();
        Self::new(&DMatrix::from_diagonal(&DVector::from_vec(diag)), grid)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &PhasePoint {
        &self.points[i]
    }

    /// Reduced grid indices `(time.., frequency..)` of point `i`.
    pub fn indices(&self, i: usize) -> &[usize] {
        &self.indices[i]
    }

    /// Generator in grid units.
    pub fn generator(&self) -> &DMatrix<i64> {
        &self.generator
    }

    /// Generator in continuum units, `A h`.
    pub fn generator_continuum(&self) -> DMatrix<f64> {
        self.generator.map(|v| v as f64 * self.grid.step())
    }

    /// Spectral norm of the continuum generator.
    pub fn generator_norm(&self) -> f64 {
        self.generator_continuum().singular_values().max()
    }

    /// `|det A|` in continuum units: the area (volume) of a fundamental cell.
    pub fn cell_volume(&self) -> f64 {
        self.generator_continuum().determinant().abs()
    }

    /// Number of points divided by the signal dimension `n^d`.
    pub fn redundancy(&self) -> f64 {
        self.len() as f64 / self.grid.len() as f64
    }

    /// Index of the lattice point at `z` (after torus wrap), if `z` is a
    /// grid point belonging to the lattice.
    pub fn index_of(&self, z: &PhasePoint) -> Option<usize> {
        let key: Option<Vec<usize>> = z
            .to_vec()
            .iter()
            .map(|&c| {
                self.grid
                    .steps_of(c)
                    .ok()
                    .map(|k| self.grid.reduce_index(k))
            })
            .collect();
        key.and_then(|k| self.lookup.get(&k).copied())
    }

    /// `A floor(A^{-1} z)` in continuum units (not wrapped).
    pub fn floor_to_lattice(&self, z: &PhasePoint) -> PhasePoint {
        let a = self.generator_continuum();
        let inv = a.clone().try_inverse().expect("generator is invertible");
        let coords = &inv * DVector::from_vec(z.to_vec());
        // A point sitting on the lattice must floor to itself despite roundoff.
        let k = coords.map(|c| (c + 1e-9).floor());
        PhasePoint::from_slice((a * k).as_slice())
    }
}
