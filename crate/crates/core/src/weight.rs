//! Phase-space weights: polynomial `v_s`, tabulated custom weights, and the
//! sub-exponential family used to exhibit the polynomial-growth restriction.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{Grid, PhasePoint};

#[derive(Debug, Clone)]
pub enum Weight {
    /// `v_s(z) = (1 + |z|^2)^{s/2}`.
    Polynomial { s: f64 },
    /// `e^{a |z|^b}`, `0 < b < 1`. Not moderate in the sense needed for
    /// transport through canonical maps.
    SubExponential { a: f64, b: f64 },
    /// Positive values on the phase-space grid, indexed by
    /// `(time flat index) * n^d + (frequency flat index)`.
    Table { grid: Grid, values: Arc<Vec<f64>> },
}

impl Weight {
    pub fn polynomial(s: f64) -> Result<Self> {
        if !(s >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weight exponent must be >= 0, got {s}"
            )));
        }
        Ok(Weight::Polynomial { s })
    }

    /// `m = 1`.
    pub fn unit() -> Self {
        Weight::Polynomial { s: 0.0 }
    }

    /// Tabulated weight. The values must be positive and moderate with respect
    /// to `v`; moderateness is checked by sampling `samples` random pairs and
    /// the best constant found is returned alongside the weight.
    pub fn table<R: Rng + ?Sized>(
        grid: Grid,
        values: Vec<f64>,
        v: &Weight,
        samples: usize,
        rng: &mut R,
    ) -> Result<(Self, f64)> {
        let expected = grid.len() * grid.len();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|&&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weight table entries must be positive and finite, found {bad}"
            )));
        }
        let w = Weight::Table {
            grid,
            values: Arc::new(values),
        };
        let mut c_best: f64 = 0.0;
        let len = grid.len();
        for _ in 0..samples {
            let a = (rng.gen_range(0..len), rng.gen_range(0..len));
            let b = (rng.gen_range(0..len), rng.gen_range(0..len));
            let za = table_point(&grid, a.0, a.1);
            let zb = table_point(&grid, b.0, b.1);
            let sum = za.add(&zb).wrapped(&grid);
            let ratio = w.eval(&sum) / (v.eval(&za) * w.eval(&zb));
            c_best = c_best.max(ratio);
        }
        if !c_best.is_finite() {
            return Err(Error::InvalidArgument(
                "weight table is not moderate".into(),
            ));
        }
        Ok((w, c_best))
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self, Weight::Polynomial { .. })
    }

    /// Weight value at `z`. Table weights look up the nearest grid point of the
    /// wrapped `z`.
    pub fn eval(&self, z: &PhasePoint) -> f64 {
        match self {
            Weight::Polynomial { s } => {
                if *s == 0.0 {
                    1.0
                } else {
                    (1.0 + z.norm_sq()).powf(0.5 * s)
                }
            }
            Weight::SubExponential { a, b } => (a * z.norm().powf(*b)).exp(),
            Weight::Table { grid, values } => {
                let zw = z.wrapped(grid);
                let h = grid.step();
                let t: Vec<usize> =
                    zw.x.iter()
                        .map(|&c| grid.reduce_index((c / h).round() as i64))
                        .collect();
                let f: Vec<usize> = zw
                    .eta
                    .iter()
                    .map(|&c| grid.reduce_index((c / h).round() as i64))
                    .collect();
                values[grid.flatten(&t) * grid.len() + grid.flatten(&f)]
            }
        }
    }
}

fn table_point(grid: &Grid, t: usize, f: usize) -> PhasePoint {
    PhasePoint::new(grid.position(t), grid.position(f))
}

/// Evaluates `w` at `z` (free-function form).
pub fn weight_eval(w: &Weight, z: &PhasePoint) -> f64 {
    w.eval(z)
}
