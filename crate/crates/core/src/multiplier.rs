//! Warped Gabor multipliers `M_a f = sum_lambda a_lambda <f, pi(lambda) g> pi(chi'(lambda)) g`,
//! the symbols `a_nu` of a Fourier integral operator and the truncated sums
//! `T_L = sum_{|nu| <= L} pi(nu) M_{a_nu}`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::canonical::{warp_table, CanonicalMap};
use crate::diagnostics::{loglog_fit, probe_max, spectral_norm, LogLogFit, NormMethod};
use crate::error::{Error, Result};
use crate::fio::FioOperator;
use crate::frame::{weighted_lp_norm, GaborFrameSpec};
use crate::grid::PhasePoint;
use crate::lattice::Lattice;
use crate::signal::Signal;
use crate::tf::{commutation_phase, shift_by_steps, Twiddles};
use crate::weight::Weight;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A multiplier with symbol `a` (lattice order) and warp `lambda -> chi'(lambda)`
/// stored as lattice indices.
#[derive(Debug, Clone)]
pub struct GaborMultiplier {
    spec: GaborFrameSpec,
    symbol: Vec<Complex64>,
    warp: Vec<usize>,
}

impl GaborMultiplier {
    pub fn new(spec: GaborFrameSpec, symbol: Vec<Complex64>, warp: Vec<usize>) -> Result<Self> {
        let k = spec.lattice().len();
        if symbol.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                got: symbol.len(),
            });
        }
        if warp.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                got: warp.len(),
            });
        }
        if let Some(&w) = warp.iter().find(|&&w| w >= k) {
            return Err(Error::InvalidArgument(format!(
                "warp index {w} outside the lattice ({k} points)"
            )));
        }
        if symbol
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::InvalidArgument(
                "multiplier symbol must be finite".into(),
            ));
        }
        Ok(Self { spec, symbol, warp })
    }

    /// Unwarped multiplier.
    pub fn identity_warp(spec: GaborFrameSpec, symbol: Vec<Complex64>) -> Result<Self> {
        let k = spec.lattice().len();
        Self::new(spec, symbol, (0..k).collect())
    }

    /// Warp `chi'` of a canonical transformation.
    pub fn warped(
        spec: GaborFrameSpec,
        symbol: Vec<Complex64>,
        cmap: &CanonicalMap,
    ) -> Result<Self> {
        let warp = warp_table(cmap, spec.lattice())?
            .into_iter()
            .map(|c| c.index)
            .collect();
        Self::new(spec, symbol, warp)
    }

    pub fn spec(&self) -> &GaborFrameSpec {
        &self.spec
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    pub fn warp(&self) -> &[usize] {
        &self.warp
    }

    /// Synthesis side `W`: column `lambda` is `a_lambda pi(chi'(lambda)) g`.
    fn synthesis_columns(&self) -> DMatrix<Complex64> {
        let atoms = self.spec.atoms();
        let mut w = DMatrix::zeros(atoms.nrows(), self.symbol.len());
        for (l, (&a, &t)) in self.symbol.iter().zip(&self.warp).enumerate() {
            w.set_column(l, &(atoms.column(t) * a));
        }
        w
    }

    pub fn apply(&self, f: &Signal) -> Result<Signal> {
        let c = self.spec.analysis(f)?;
        let atoms = self.spec.atoms();
        let mut out = DVector::zeros(atoms.nrows());
        for (l, (&a, &t)) in self.symbol.iter().zip(&self.warp).enumerate() {
            let coef = a * c[l];
            if coef != ZERO {
                out.axpy(coef, &atoms.column(t), Complex64::new(1.0, 0.0));
            }
        }
        Signal::from_dvector(*self.spec.grid(), &out)
    }

    /// `W Phi^H`.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        self.synthesis_columns() * self.spec.atoms().adjoint()
    }
}

pub fn apply_multiplier(m: &GaborMultiplier, f: &Signal) -> Result<Signal> {
    m.apply(f)
}

pub fn multiplier_matrix(m: &GaborMultiplier) -> DMatrix<Complex64> {
    m.matrix()
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplierNormReport {
    pub p: f64,
    /// Largest sampled `|M f|_{M^p_m} / |f|_{M^p_{(m o chi') / m~}}`.
    pub empirical_norm: f64,
    /// `sup_lambda |a_lambda| m~(lambda)`.
    pub symbol_norm: f64,
    pub ratio: f64,
    pub probes: usize,
}

/// Probe estimate of the norm of `M` from `M^p_{(m o chi')/m~}` to `M^p_m`,
/// compared with `|a|_{l^inf_{m~}}`. The estimate is a lower bound.
pub fn multiplier_norm_check(
    mult: &GaborMultiplier,
    p: f64,
    m: &Weight,
    m_tilde: &Weight,
    probes: usize,
    seed: u64,
) -> Result<MultiplierNormReport> {
    let spec = &mult.spec;
    let lat = spec.lattice();
    let grid = *spec.grid();
    let domain_w: Vec<f64> = lat
        .points()
        .iter()
        .zip(&mult.warp)
        .map(|(z, &t)| m.eval(lat.point(t)) / m_tilde.eval(z))
        .collect();
    let symbol_norm = mult
        .symbol
        .iter()
        .zip(lat.points())
        .map(|(a, z)| a.norm() * m_tilde.eval(z))
        .fold(0.0, f64::max);
    // validate p once so the probe closure can unwrap
    weighted_lp_norm(&[ZERO], &[1.0], p)?;
    let empirical_norm = probe_max(grid.len(), probes, seed, |v| {
        let f = Signal::from_dvector(grid, v).expect("probe length");
        let c = spec.analysis(&f).expect("probe grid");
        let den = weighted_lp_norm(c.as_slice(), &domain_w, p).expect("validated");
        if den == 0.0 {
            return 0.0;
        }
        let mf = mult.apply(&f).expect("probe grid");
        spec.gabor_mod_norm(&mf, p, m).expect("validated") / den
    });
    let ratio = if symbol_norm > 0.0 {
        empirical_norm / symbol_norm
    } else {
        0.0
    };
    Ok(MultiplierNormReport {
        p,
        empirical_norm,
        symbol_norm,
        ratio,
        probes,
    })
}

/// `a_nu(mu) = c_{nu,mu} <T pi(mu) g, pi(chi'(mu) + nu) g>` for every lattice
/// point `mu` and every `nu` in the extraction set.
#[derive(Debug, Clone)]
pub struct MultiplierSymbolTable {
    /// Lattice indices of the shifts `nu`, sorted by torus norm.
    pub nu_index: Vec<usize>,
    pub nu_set: Vec<PhasePoint>,
    /// Torus norm of each `nu`.
    pub nu_norm: Vec<f64>,
    /// `a[(i, mu)]` for shift `nu_set[i]`.
    pub a: DMatrix<Complex64>,
    /// `c[(i, mu)] = e^{2 pi i nu_x . chi'(mu)_eta}`.
    pub c: DMatrix<Complex64>,
    /// Lattice index of `chi'(mu)`.
    pub warp: Vec<usize>,
    /// Lattice index of `chi'(mu) + nu_set[i]`.
    pub target: DMatrix<usize>,
    pub radius: f64,
    lattice: Arc<Lattice>,
}

impl MultiplierSymbolTable {
    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    /// Radius that covers every lattice point.
    pub fn full_radius(lattice: &Lattice) -> f64 {
        let grid = lattice.grid();
        lattice
            .points()
            .iter()
            .map(|z| z.torus_norm(grid))
            .fold(0.0, f64::max)
    }

    /// `a_nu` as a multiplier.
    pub fn multiplier(&self, spec: &GaborFrameSpec, i: usize) -> Result<GaborMultiplier> {
        GaborMultiplier::new(
            spec.clone(),
            self.a.row(i).iter().copied().collect(),
            self.warp.clone(),
        )
    }

    /// `max_mu |a_nu(mu)|` per shift.
    pub fn sup_norms(&self) -> Vec<f64> {
        self.a
            .row_iter()
            .map(|r| r.iter().map(|v| v.norm()).fold(0.0, f64::max))
            .collect()
    }
}

pub fn extract_symbols(
    t: &FioOperator,
    spec: &GaborFrameSpec,
    cmap: &CanonicalMap,
    nu_radius: f64,
) -> Result<MultiplierSymbolTable> {
    let lat = spec.lattice().clone();
    let grid = *lat.grid();
    if !(nu_radius >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "extraction radius must be non-negative, got {nu_radius}"
        )));
    }
    let mut nus: Vec<(f64, usize)> = lat
        .points()
        .iter()
        .enumerate()
        .map(|(i, z)| (z.torus_norm(&grid), i))
        .filter(|(r, _)| *r <= nu_radius + 1e-12)
        .collect();
    nus.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let nu_index: Vec<usize> = nus.iter().map(|&(_, i)| i).collect();
    let nu_norm: Vec<f64> = nus.iter().map(|&(r, _)| r).collect();
    let nu_set: Vec<PhasePoint> = nu_index.iter().map(|&i| lat.point(i).clone()).collect();

    let warp: Vec<usize> = warp_table(cmap, &lat)?
        .into_iter()
        .map(|c| c.index)
        .collect();
    let k = lat.len();
    let rows = nu_set.len();
    let mut target = DMatrix::from_element(rows, k, 0usize);
    let mut c = DMatrix::from_element(rows, k, ZERO);
    for (i, nu) in nu_set.iter().enumerate() {
        for (mu, &w) in warp.iter().enumerate() {
            let chi = lat.point(w);
            let z = chi.add(nu).wrapped(&grid);
            target[(i, mu)] = lat.index_of(&z).ok_or_else(|| {
                Error::InvalidArgument(format!("shifted point {z:?} is not a lattice point"))
            })?;
            c[(i, mu)] = commutation_phase(&nu.x, &chi.eta);
        }
    }

    let atoms = spec.atoms();
    let ta = t.matrix()? * atoms;
    let cols: Vec<Vec<Complex64>> = (0..k)
        .into_par_iter()
        .map(|mu| {
            let col = ta.column(mu);
            (0..rows)
                .map(|i| c[(i, mu)] * atoms.column(target[(i, mu)]).dotc(&col))
                .collect()
        })
        .collect();
    let a = DMatrix::from_fn(rows, k, |i, mu| cols[mu][i]);
    Ok(MultiplierSymbolTable {
        nu_index,
        nu_set,
        nu_norm,
        a,
        c,
        warp,
        target,
        radius: nu_radius,
        lattice: lat,
    })
}

fn check_table(table: &MultiplierSymbolTable, spec: &GaborFrameSpec) -> Result<()> {
    if table.lattice.len() != spec.lattice().len() || table.lattice.grid() != spec.grid() {
        return Err(Error::GridMismatch(
            "symbol table and frame use different lattices".into(),
        ));
    }
    Ok(())
}

/// Column `mu` of `Z_rows = sum_{i in rows} pi(nu_i) W_{nu_i}`, summed in row
/// order.
fn assembled_column(
    table: &MultiplierSymbolTable,
    spec: &GaborFrameSpec,
    rows: std::ops::Range<usize>,
    mu: usize,
    tw: &Twiddles,
) -> DVector<Complex64> {
    let grid = *spec.grid();
    let atoms = spec.atoms();
    let lat = spec.lattice();
    let base = Signal::new(grid, atoms.column(table.warp[mu]).iter().copied().collect())
        .expect("column length");
    let mut out = DVector::zeros(grid.len());
    for i in rows {
        let a = table.a[(i, mu)];
        if a == ZERO {
            continue;
        }
        let steps: Vec<i64> = lat
            .indices(table.nu_index[i])
            .iter()
            .map(|&j| j as i64)
            .collect();
        let d = grid.d();
        let shifted = shift_by_steps(&base, &steps[..d], &steps[d..], tw);
        for (o, v) in out.iter_mut().zip(shifted.values()) {
            *o += a * v;
        }
    }
    out
}

fn rows_within(table: &MultiplierSymbolTable, l: f64) -> usize {
    table
        .nu_norm
        .iter()
        .take_while(|&&r| r <= l + 1e-12)
        .count()
}

/// Matrix of `sum_{|nu| <= L} pi(nu) M_{a_nu}`.
pub fn assemble_truncated(
    table: &MultiplierSymbolTable,
    spec: &GaborFrameSpec,
    l: f64,
) -> Result<DMatrix<Complex64>> {
    check_table(table, spec)?;
    if l > table.radius + 1e-12 {
        return Err(Error::ExtractionRadius {
            requested: l,
            radius: table.radius,
        });
    }
    let z = partial_sum(table, spec, 0..rows_within(table, l));
    Ok(z * spec.atoms().adjoint())
}

fn partial_sum(
    table: &MultiplierSymbolTable,
    spec: &GaborFrameSpec,
    rows: std::ops::Range<usize>,
) -> DMatrix<Complex64> {
    let tw = Twiddles::new(spec.grid().n());
    let k = spec.lattice().len();
    let cols: Vec<DVector<Complex64>> = (0..k)
        .into_par_iter()
        .map(|mu| assembled_column(table, spec, rows.clone(), mu, &tw))
        .collect();
    DMatrix::from_columns(&cols)
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationCurve {
    /// `(L, |T - T_L|)`.
    pub points: Vec<(f64, f64)>,
    pub method: NormMethod,
    /// Log-log fit over the points whose error is above the saturation floor.
    pub fit: Option<LogLogFit>,
    /// Points used in the fit.
    pub fitted: usize,
    /// Errors at or below this value count as exact reconstruction.
    pub floor: f64,
}

impl TruncationCurve {
    /// True if the error never grows by more than `slack`.
    pub fn is_non_increasing(&self, slack: f64) -> bool {
        self.points.windows(2).all(|w| w[1].1 <= w[0].1 + slack)
    }
}

/// Relative level below which a truncation error is treated as roundoff.
pub const SATURATION_RTOL: f64 = 1e-9;

/// Errors `|T - T_L|` for each `L` in `l_list` (sorted ascending). For `p = 2`
/// and `m = 1` the norm is the largest singular value; otherwise it is a
/// probe-sup of `|(T - T_L) f|_{M^p_m} / |f|_{M^p_{m o chi}}` and only a lower
/// bound.
#[allow(clippy::too_many_arguments)]
pub fn truncation_error_curve(
    t: &DMatrix<Complex64>,
    table: &MultiplierSymbolTable,
    spec: &GaborFrameSpec,
    l_list: &[f64],
    p: f64,
    m: &Weight,
    probes: usize,
    seed: u64,
) -> Result<TruncationCurve> {
    check_table(table, spec)?;
    if l_list.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 truncation radii, got {}",
            l_list.len()
        )));
    }
    let mut ls = l_list.to_vec();
    ls.sort_by(f64::total_cmp);
    if let Some(&l) = ls.iter().find(|&&l| l > table.radius + 1e-12) {
        return Err(Error::ExtractionRadius {
            requested: l,
            radius: table.radius,
        });
    }
    let grid = *spec.grid();
    if t.nrows() != grid.len() || t.ncols() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: t.nrows(),
        });
    }
    let euclidean = p == 2.0 && matches!(m, Weight::Polynomial { s } if *s == 0.0);
    let method = if euclidean {
        NormMethod::SingularValue
    } else {
        NormMethod::ProbeSup
    };
    let lat = spec.lattice();
    let domain_w: Vec<f64> = lat
        .points()
        .iter()
        .zip(&table.warp)
        .map(|(_, &w)| m.eval(lat.point(w)))
        .collect();
    weighted_lp_norm(&[ZERO], &[1.0], p)?;

    // cumulative sums over shells of increasing |nu|
    let phi_h = spec.atoms().adjoint();
    let mut z = DMatrix::zeros(grid.len(), lat.len());
    let mut done = 0;
    let mut points = Vec::with_capacity(ls.len());
    for &l in &ls {
        let upto = rows_within(table, l);
        if upto > done {
            z += partial_sum(table, spec, done..upto);
            done = upto;
        }
        let diff = t - &z * &phi_h;
        let err = if euclidean {
            spectral_norm(&diff).value
        } else {
            probe_max(grid.len(), probes, seed, |v| {
                let f = Signal::from_dvector(grid, v).expect("probe length");
                let c = spec.analysis(&f).expect("probe grid");
                let den = weighted_lp_norm(c.as_slice(), &domain_w, p).expect("validated");
                if den == 0.0 {
                    return 0.0;
                }
                let e = Signal::from_dvector(grid, &(&diff * v)).expect("probe length");
                spec.gabor_mod_norm(&e, p, m).expect("validated") / den
            })
        };
        points.push((l, err));
    }
    let scale = spectral_norm(t).value.max(f64::MIN_POSITIVE);
    let floor = SATURATION_RTOL * scale;
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(l, e)| *l > 0.0 && *e > floor)
        .copied()
        .collect();
    let fit = if usable.len() >= 3 {
        Some(loglog_fit(&usable)?)
    } else {
        None
    };
    Ok(TruncationCurve {
        points,
        method,
        fit,
        fitted: usable.len(),
        floor,
    })
}
