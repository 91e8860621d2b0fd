//! Multiplier symbols of the dilation `f(x) -> f(s x)` for the Gaussian
//! `e^{-pi t^2}` on a separable lattice `alpha Z x beta Z`, in closed form and
//! by extraction on the grid.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fio::{FioOperator, SymbolTable};
use crate::frame::GaborFrameSpec;
use crate::grid::Grid;
use crate::lattice::Lattice;
use crate::multiplier::extract_symbols;
use crate::phase::BuiltinPhase;
use crate::signal::Signal;

fn floor_tol(v: f64) -> f64 {
    (v + 1e-9).floor()
}

/// `<D_s pi(mu) g, pi(z) g>` for `g(t) = e^{-pi t^2}`, `mu = (x0, xi0)`,
/// `z = (x2, xi2)`:
/// `(s^2+1)^{-1/2} exp(pi (b + i w)^2 / (s^2+1) - pi (x0^2 + x2^2))`
/// with `b = s x0 + x2` and `w = s xi0 - xi2`.
pub fn gaussian_dilation_inner(s: f64, x0: f64, xi0: f64, x2: f64, xi2: f64) -> Complex64 {
    let a = s * s + 1.0;
    let z = Complex64::new(s * x0 + x2, s * xi0 - xi2);
    ((z * z) * (PI / a) - PI * (x0 * x0 + x2 * x2)).exp() / a.sqrt()
}

/// `a_{(alpha k', beta l')}(alpha k, beta l)` including the unimodular factor
/// `c = e^{2 pi i alpha k' beta floor(s l)}`.
pub fn closed_form_symbol(
    s: f64,
    alpha: f64,
    beta: f64,
    k: i64,
    l: i64,
    kp: i64,
    lp: i64,
) -> Complex64 {
    let fk = floor_tol(k as f64 / s);
    let fl = floor_tol(s * l as f64);
    let x0 = alpha * k as f64;
    let xi0 = beta * l as f64;
    let x2 = alpha * (fk + kp as f64);
    let xi2 = beta * (fl + lp as f64);
    let c = Complex64::from_polar(1.0, 2.0 * PI * alpha * kp as f64 * beta * fl);
    c * gaussian_dilation_inner(s, x0, xi0, x2, xi2)
}

/// One compared entry.
#[derive(Debug, Clone)]
pub struct DilationRow {
    pub k: i64,
    pub l: i64,
    pub kp: i64,
    pub lp: i64,
    pub closed_form: Complex64,
    pub numeric: Complex64,
    pub abs_err: f64,
}

#[derive(Debug, Clone)]
pub struct DilationComparison {
    pub s: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rows: Vec<DilationRow>,
    /// Largest relative error over the entries whose closed-form magnitude
    /// is among the top `quantile` fraction.
    pub max_rel_error: f64,
    pub quantile: f64,
    /// `max | |c| - 1 |` over the extracted phase factors.
    pub c_deviation: f64,
}

/// Extracts the dilation symbols on `n` samples with lattice spacing
/// `steps * h` in both directions (so `alpha = beta = steps / sqrt(n)`), the
/// raw window `sqrt(h) e^{-pi x^2}` and shifts `|nu| <= nu_radius`, and
/// compares them with [`closed_form_symbol`].
pub fn dilation_comparison(
    s: f64,
    n: usize,
    steps: usize,
    nu_radius: f64,
    quantile: f64,
) -> Result<DilationComparison> {
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dilation factor must be positive, got {s}"
        )));
    }
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile must lie in (0, 1], got {quantile}"
        )));
    }
    let grid = Grid::one_dim(n)?;
    let lat = Arc::new(Lattice::separable(grid, steps, steps)?);
    let spacing = steps as f64 * grid.step();
    let g = Signal::sample_l2(grid, |x| Complex64::new((-PI * x[0] * x[0]).exp(), 0.0));
    let spec = GaborFrameSpec::with_window(g, lat.clone())?;
    let t = FioOperator::new(
        Arc::new(BuiltinPhase::Dilation { s }),
        SymbolTable::constant(grid, Complex64::new(1.0, 0.0)),
    )?;
    let table = extract_symbols(&t, &spec, t.canonical_map(), nu_radius)?;

    let to_int = |v: f64| (v / spacing).round() as i64;
    let mut rows = Vec::with_capacity(table.nu_set.len() * lat.len());
    for (i, nu) in table.nu_set.iter().enumerate() {
        let (kp, lp) = (to_int(nu.x[0]), to_int(nu.eta[0]));
        for (mu, p) in lat.points().iter().enumerate() {
            let (k, l) = (to_int(p.x[0]), to_int(p.eta[0]));
            let closed_form = closed_form_symbol(s, spacing, spacing, k, l, kp, lp);
            let numeric = table.a[(i, mu)];
            rows.push(DilationRow {
                k,
                l,
                kp,
                lp,
                closed_form,
                numeric,
                abs_err: (numeric - closed_form).norm(),
            });
        }
    }
    let c_deviation = table
        .c
        .iter()
        .map(|c| (c.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| {
        rows[b]
            .closed_form
            .norm()
            .total_cmp(&rows[a].closed_form.norm())
    });
    let keep = ((quantile * rows.len() as f64).floor() as usize).max(1);
    let max_rel_error = order[..keep]
        .iter()
        .map(|&i| rows[i].abs_err / rows[i].closed_form.norm())
        .fold(0.0, f64::max);
    Ok(DilationComparison {
        s,
        alpha: spacing,
        beta: spacing,
        rows,
        max_rel_error,
        quantile,
        c_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_dilation_modulus() {
        let (a, b) = (0.25, 0.5);
        for (kp, lp) in [(0, 0), (1, 0), (0, 2), (-3, 1)] {
            let v = closed_form_symbol(1.0, a, b, 7, -3, kp, lp).norm();
            let expected =
                (-PI * b * b * (lp * lp) as f64 / 2.0 - PI * a * a * (kp * kp) as f64 / 2.0).exp()
                    / 2f64.sqrt();
            assert!((v - expected).abs() < 1e-14, "{kp} {lp}");
        }
    }

    #[test]
    fn centered_entry_has_modulus_of_prefactor() {
        // s l integer, s | k and no shift: every exponent vanishes
        let v = closed_form_symbol(2.0, 0.25, 0.25, 4, 3, 0, 0);
        assert!((v.norm() - 1.0 / 5f64.sqrt()).abs() < 1e-15);
    }
}
