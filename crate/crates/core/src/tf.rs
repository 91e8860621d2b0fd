//! Time-frequency shifts, the commutation phase and the short-time Fourier
//! transform on the periodic grid.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dft::Dft;
use crate::error::{Error, Result};
use crate::grid::{Grid, PhasePoint};
use crate::signal::Signal;

/// Roots of unity `e^{2 pi i r / n}` for `r in 0..n`.
#[derive(Debug, Clone)]
pub struct Twiddles {
    n: usize,
    table: Vec<Complex64>,
}

impl Twiddles {
    pub fn new(n: usize) -> Self {
        let table = (0..n)
            .map(|r| Complex64::from_polar(1.0, 2.0 * PI * r as f64 / n as f64))
            .collect();
        Self { n, table }
    }

    /// `e^{2 pi i r / n}` for any integer `r`.
    #[inline]
    pub fn at(&self, r: i64) -> Complex64 {
        self.table[r.rem_euclid(self.n as i64) as usize]
    }
}

fn steps(grid: &Grid, v: &[f64]) -> Result<Vec<i64>> {
    if v.len() != grid.d() {
        return Err(Error::LengthMismatch {
            expected: grid.d(),
            got: v.len(),
        });
    }
    v.iter().map(|&c| grid.steps_of(c)).collect()
}

/// `pi(lambda) f` with `lambda` given in grid steps: `M_{m h} T_{k h} f`.
pub fn shift_by_steps(f: &Signal, t_steps: &[i64], f_steps: &[i64], tw: &Twiddles) -> Signal {
    let grid = *f.grid();
    let n = grid.n() as i64;
    let src = f.values();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    match grid.d() {
        1 => {
            let (k, m) = (t_steps[0], f_steps[0]);
            for (j, o) in out.iter_mut().enumerate() {
                let from = (j as i64 - k).rem_euclid(n) as usize;
                *o = tw.at(m * j as i64) * src[from];
            }
        }
        _ => {
            for (flat, o) in out.iter_mut().enumerate() {
                let idx = grid.unflatten(flat);
                let mut from = 0usize;
                let mut phase = 0i64;
                for axis in 0..grid.d() {
                    let j = idx[axis] as i64;
                    from = from * grid.n() + (j - t_steps[axis]).rem_euclid(n) as usize;
                    phase += f_steps[axis] * j;
                }
                *o = tw.at(phase) * src[from];
            }
        }
    }
    Signal::new(grid, out).expect("length preserved")
}

/// `T_x f(t) = f(t - x)`.
pub fn translate(f: &Signal, x: &[f64]) -> Result<Signal> {
    let grid = *f.grid();
    let k = steps(&grid, x)?;
    Ok(shift_by_steps(
        f,
        &k,
        &vec![0; grid.d()],
        &Twiddles::new(grid.n()),
    ))
}

/// `M_eta f(t) = e^{2 pi i eta.t} f(t)`.
pub fn modulate(f: &Signal, eta: &[f64]) -> Result<Signal> {
    let grid = *f.grid();
    let m = steps(&grid, eta)?;
    Ok(shift_by_steps(
        f,
        &vec![0; grid.d()],
        &m,
        &Twiddles::new(grid.n()),
    ))
}

/// `pi(lambda) f = M_eta T_x f`.
pub fn tf_shift(f: &Signal, lambda: &PhasePoint) -> Result<Signal> {
    let grid = *f.grid();
    let k = steps(&grid, &lambda.x)?;
    let m = steps(&grid, &lambda.eta)?;
    Ok(shift_by_steps(f, &k, &m, &Twiddles::new(grid.n())))
}

/// `pi(lambda)^{-1} f = e^{-2 pi i x.eta} pi(-lambda) f`.
pub fn tf_shift_inverse(f: &Signal, lambda: &PhasePoint) -> Result<Signal> {
    let shifted = tf_shift(f, &lambda.neg())?;
    let phase = commutation_phase(&lambda.x, &lambda.eta).conj();
    Ok(shifted.scaled(phase))
}

/// `e^{2 pi i x.eta}`, the factor in `M_eta T_x = e^{2 pi i x.eta} T_x M_eta`.
pub fn commutation_phase(x: &[f64], eta: &[f64]) -> Complex64 {
    let dot: f64 = x.iter().zip(eta).map(|(a, b)| a * b).sum();
    Complex64::from_polar(1.0, 2.0 * PI * dot)
}

/// Short-time Fourier transform `V_g f(x_k, eta_m) = <f, pi(x_k, eta_m) g>`
/// over all grid points. Rows are indexed by the flat time index `k`, columns
/// by the flat frequency index `m`.
pub fn stft(f: &Signal, g: &Signal) -> Result<DMatrix<Complex64>> {
    let grid = *f.grid();
    g.check_grid(&grid)?;
    if g.is_zero() {
        return Err(Error::ZeroWindow);
    }
    let len = grid.len();
    let dft = Dft::new(grid);
    let tw = Twiddles::new(grid.n());
    let zero = vec![0; grid.d()];
    let rows: Vec<Vec<Complex64>> = (0..len)
        .into_par_iter()
        .map(|k| {
            let shift: Vec<i64> = grid.unflatten(k).into_iter().map(|v| v as i64).collect();
            let tg = shift_by_steps(g, &shift, &zero, &tw);
            let mut prod: Vec<Complex64> = f
                .values()
                .iter()
                .zip(tg.values())
                .map(|(a, b)| a * b.conj())
                .collect();
            dft.forward_raw(&mut prod);
            prod
        })
        .collect();
    Ok(DMatrix::from_fn(len, len, |k, m| rows[k][m]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> Grid {
        Grid::one_dim(n).unwrap()
    }

    #[test]
    fn zero_shifts_are_identity() {
        let g = grid(16);
        let f = Signal::random(g, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(translate(&f, &[0.0]).unwrap(), f);
        assert_eq!(modulate(&f, &[0.0]).unwrap(), f);
        assert!(tf_shift(&f, &PhasePoint::zero(1)).unwrap().max_abs_diff(&f) < 1e-15);
    }

    #[test]
    fn impulse_moves_by_two_steps() {
        let g = grid(8);
        let h = g.step();
        let out = translate(&Signal::impulse(g, 0), &[2.0 * h]).unwrap();
        assert_eq!(out, Signal::impulse(g, 2));
    }

    #[test]
    fn translate_then_back_is_identity() {
        let g = grid(32);
        let h = g.step();
        let f = Signal::random(g, &mut ChaCha8Rng::seed_from_u64(2));
        let back = translate(&translate(&f, &[5.0 * h]).unwrap(), &[-5.0 * h]).unwrap();
        assert!(back.max_abs_diff(&f) < 1e-15);
    }

    #[test]
    fn off_grid_shift_is_rejected() {
        let g = grid(16);
        let f = Signal::impulse(g, 0);
        assert!(matches!(
            translate(&f, &[0.1]),
            Err(Error::NotGridRepresentable { .. })
        ));
        assert!(matches!(
            modulate(&f, &[0.1]),
            Err(Error::NotGridRepresentable { .. })
        ));
    }

    #[test]
    fn modulation_is_a_frequency_translation() {
        let g = grid(16);
        let h = g.step();
        let f = Signal::random(g, &mut ChaCha8Rng::seed_from_u64(3));
        let lhs = modulate(&f, &[3.0 * h]).unwrap().dft();
        let rhs = translate(&f.dft(), &[3.0 * h]).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        let m = modulate(&f, &[3.0 * h]).unwrap();
        for (a, b) in m.values().iter().zip(f.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn commutation_phase_values() {
        assert_eq!(commutation_phase(&[0.0], &[3.0]), Complex64::new(1.0, 0.0));
        let i = commutation_phase(&[0.5], &[0.5]);
        assert!((i - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn inverse_shift_matches_matrix_inverse() {
        // Build pi(lambda) as a dense matrix at n = 8 and compare its inverse
        // (its adjoint, since it is unitary) column by column.
        let g = grid(8);
        let h = g.step();
        let lambda = PhasePoint::new1(3.0 * h, 5.0 * h);
        let cols: Vec<Signal> = (0..8)
            .map(|k| tf_shift(&Signal::impulse(g, k), &lambda).unwrap())
            .collect();
        let mat = DMatrix::from_fn(8, 8, |r, c| cols[c].values()[r]);
        let inv = mat.adjoint();
        for k in 0..8 {
            let e = Signal::impulse(g, k);
            let got = tf_shift_inverse(&e, &lambda).unwrap();
            for r in 0..8 {
                assert!((got.values()[r] - inv[(r, k)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn stft_at_origin_is_squared_norm() {
        let g = grid(16);
        let w = Signal::random(g, &mut ChaCha8Rng::seed_from_u64(4));
        let v = stft(&w, &w).unwrap();
        assert!((v[(0, 0)] - Complex64::new(w.norm_sq(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn stft_rejects_zero_window() {
        let g = grid(16);
        let f = Signal::impulse(g, 0);
        assert_eq!(stft(&f, &Signal::zeros(g)).unwrap_err(), Error::ZeroWindow);
    }

    #[test]
    fn stft_matches_inner_products_in_two_dimensions() {
        let g = Grid::new(8, 2).unwrap();
        let h = g.step();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = Signal::random(g, &mut rng);
        let w = Signal::random(g, &mut rng);
        let v = stft(&f, &w).unwrap();
        for (k, m) in [(0usize, 0usize), (9, 17), (63, 5), (20, 40)] {
            let ki = g.unflatten(k);
            let mi = g.unflatten(m);
            let lambda = PhasePoint::new(
                ki.iter().map(|&j| j as f64 * h).collect(),
                mi.iter().map(|&j| j as f64 * h).collect(),
            );
            let direct = f.inner(&tf_shift(&w, &lambda).unwrap());
            assert!((direct - v[(k, m)]).norm() < 1e-10);
        }
    }
}
