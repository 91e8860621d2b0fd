//! Fourier integral operators `Tf(x) = int e^{2 pi i Phi(x, eta)} sigma(x, eta) fhat(eta) deta`
//! on the periodic grid (d = 1), their Gabor matrices, and decay measurements.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use log::warn;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::CanonicalMap;
use crate::diagnostics::{loglog_fit, DecayReport};
use crate::error::{Error, Result};
use crate::frame::{GaborFrameSpec, DENSE_LIMIT};
use crate::grid::{bracket, Grid, PhasePoint};
use crate::lattice::Lattice;
use crate::phase::TamePhase;
use crate::signal::Signal;
use crate::weight::Weight;

/// Declared smoothness class of a symbol. Used only to state the expected
/// decay exponent; it never changes a computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothnessTag {
    Constant,
    /// Band-limited surrogate for `W^inf_{2N}`.
    Bandlimited {
        order: usize,
    },
    /// Surrogate for `M^inf_{1 (x) v_s}`.
    Weighted {
        s: f64,
    },
    Custom,
}

impl SmoothnessTag {
    /// Decay exponent claimed for the Gabor matrix, if any.
    pub fn claimed_exponent(&self) -> Option<f64> {
        match *self {
            SmoothnessTag::Bandlimited { order } => Some(2.0 * order as f64),
            SmoothnessTag::Weighted { s } => Some(s),
            SmoothnessTag::Constant | SmoothnessTag::Custom => None,
        }
    }
}

/// Relative strength of the non-constant part of the surrogate symbols.
pub const SURROGATE_AMPLITUDE: f64 = 0.5;

/// `sigma(x_j, eta_m)` stored row-major: entry `j * n + m`, both indices in
/// sample order.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    grid: Grid,
    values: Vec<Complex64>,
    tag: SmoothnessTag,
}

impl SymbolTable {
    pub fn constant(grid: Grid, value: Complex64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len() * grid.len()],
            tag: SmoothnessTag::Constant,
        }
    }

    pub fn custom(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        let expected = grid.len() * grid.len();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: values.len(),
            });
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::InvalidArgument(
                "symbol entries must be finite".into(),
            ));
        }
        Ok(Self {
            grid,
            values,
            tag: SmoothnessTag::Custom,
        })
    }

    /// `1 + sum c_pq e^{2 pi i (p j + q m)/n}` over `0 < max(|p|,|q|) <= B`
    /// with `B = floor(n / (4N))`: equal amplitudes with seeded random
    /// phases, scaled so the amplitudes sum to `SURROGATE_AMPLITUDE`.
    pub fn bandlimited(grid: Grid, order: usize, seed: u64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument(
                "band-limit order N must be at least 1".into(),
            ));
        }
        let band = (grid.n() / (4 * order)).max(1) as i64;
        let modes = Self::modes(grid, band, 0.0, seed);
        let mut s = Self::from_modes(grid, &modes)?;
        s.tag = SmoothnessTag::Bandlimited { order };
        Ok(s)
    }

    /// Same construction over all modes with amplitudes `<(p, q) h>^{-s}`.
    pub fn weighted(grid: Grid, s: f64, seed: u64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "symbol decay exponent must be positive, got {s}"
            )));
        }
        let band = (grid.n() / 2) as i64 - 1;
        let modes = Self::modes(grid, band, s, seed);
        let mut t = Self::from_modes(grid, &modes)?;
        t.tag = SmoothnessTag::Weighted { s };
        Ok(t)
    }

    fn modes(grid: Grid, band: i64, decay: f64, seed: u64) -> Vec<(i64, i64, Complex64)> {
        let h = grid.step();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes = Vec::new();
        for p in -band..=band {
            for q in -band..=band {
                if p == 0 && q == 0 {
                    continue;
                }
                let r = ((p * p + q * q) as f64).sqrt() * h;
                let amp = bracket(r).powf(-decay);
                let theta: f64 = rng.gen_range(0.0..2.0 * PI);
                modes.push((p, q, Complex64::from_polar(amp, theta)));
            }
        }
        let total: f64 = modes.iter().map(|m| m.2.norm()).sum();
        for m in &mut modes {
            m.2 *= SURROGATE_AMPLITUDE / total;
        }
        modes
    }

    fn from_modes(grid: Grid, modes: &[(i64, i64, Complex64)]) -> Result<Self> {
        if grid.d() != 1 {
            return Err(Error::Unsupported(
                "symbol surrogates are implemented for d = 1".into(),
            ));
        }
        let n = grid.n();
        let tw: Vec<Complex64> = (0..n)
            .map(|r| Complex64::from_polar(1.0, 2.0 * PI * r as f64 / n as f64))
            .collect();
        let values: Vec<Complex64> = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let (j, m) = ((idx / n) as i64, (idx % n) as i64);
                let mut v = Complex64::new(1.0, 0.0);
                for &(p, q, c) in modes {
                    v += c * tw[(p * j + q * m).rem_euclid(n as i64) as usize];
                }
                v
            })
            .collect();
        Ok(Self {
            grid,
            values,
            tag: SmoothnessTag::Custom,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn tag(&self) -> SmoothnessTag {
        self.tag
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, j: usize, m: usize) -> Complex64 {
        self.values[j * self.grid.n() + m]
    }
}

/// A Fourier integral operator with a tame phase and a tabulated symbol.
#[derive(Debug, Clone)]
pub struct FioOperator {
    grid: Grid,
    phase: Arc<dyn TamePhase>,
    symbol: SymbolTable,
    cmap: CanonicalMap,
    /// `e^{2 pi i Phi(x_j, eta_m)} sigma(x_j, eta_m) h`, row-major.
    kernel: Arc<Vec<Complex64>>,
}

impl FioOperator {
    pub fn new(phase: Arc<dyn TamePhase>, symbol: SymbolTable) -> Result<Self> {
        let grid = *symbol.grid();
        if grid.d() != 1 {
            return Err(Error::Unsupported(
                "Fourier integral operators are implemented for d = 1".into(),
            ));
        }
        let cmap = CanonicalMap::new(phase.clone())?;
        let n = grid.n();
        let h = grid.step();
        let kernel: Vec<Complex64> = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let (j, m) = (idx / n, idx % n);
                let ph =
                    Complex64::from_polar(h, 2.0 * PI * phase.eval(grid.coord(j), grid.coord(m)));
                ph * symbol.at(j, m)
            })
            .collect();
        Ok(Self {
            grid,
            phase,
            symbol,
            cmap,
            kernel: Arc::new(kernel),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn phase(&self) -> &Arc<dyn TamePhase> {
        &self.phase
    }

    pub fn symbol(&self) -> &SymbolTable {
        &self.symbol
    }

    pub fn canonical_map(&self) -> &CanonicalMap {
        &self.cmap
    }

    /// `Tf(x_j) = sum_m e^{2 pi i Phi(x_j, eta_m)} sigma(x_j, eta_m) fhat(eta_m) h`.
    pub fn apply(&self, f: &Signal) -> Result<Signal> {
        f.check_grid(&self.grid)?;
        let fhat = f.dft();
        let fh = fhat.values();
        let n = self.grid.n();
        let out: Vec<Complex64> = (0..n)
            .into_par_iter()
            .map(|j| {
                self.kernel[j * n..(j + 1) * n]
                    .iter()
                    .zip(fh)
                    .map(|(k, v)| k * v)
                    .sum()
            })
            .collect();
        Signal::new(self.grid, out)
    }

    /// Dense matrix of `T`; column `k` is `T e_k`.
    pub fn matrix(&self) -> Result<DMatrix<Complex64>> {
        let n = self.grid.n();
        if n > DENSE_LIMIT {
            return Err(Error::SizeGuard {
                dim: n,
                limit: DENSE_LIMIT,
            });
        }
        let k = DMatrix::from_row_slice(n, n, &self.kernel);
        let s = 1.0 / (n as f64).sqrt();
        let f = DMatrix::from_fn(n, n, |m, j| {
            Complex64::from_polar(s, -2.0 * PI * ((m * j) % n) as f64 / n as f64)
        });
        Ok(k * f)
    }
}

pub fn apply_fio(t: &FioOperator, f: &Signal) -> Result<Signal> {
    t.apply(f)
}

pub fn fio_matrix(t: &FioOperator) -> Result<DMatrix<Complex64>> {
    t.matrix()
}

/// `G(mu, lambda) = <T pi(mu) g, pi(lambda) g>`; rows are `mu`, columns
/// `lambda`, both in lattice order.
#[derive(Debug, Clone)]
pub struct GaborMatrix {
    pub lattice: Arc<Lattice>,
    pub window: Signal,
    pub entries: DMatrix<Complex64>,
}

/// Columns `T pi(lambda) g`.
pub fn transformed_atoms(t: &FioOperator, spec: &GaborFrameSpec) -> Result<DMatrix<Complex64>> {
    if spec.grid() != t.grid() {
        return Err(Error::GridMismatch(format!(
            "operator on {}, frame on {}",
            t.grid(),
            spec.grid()
        )));
    }
    Ok(t.matrix()? * spec.atoms())
}

pub fn gabor_matrix(t: &FioOperator, spec: &GaborFrameSpec) -> Result<GaborMatrix> {
    if let Ok(b) = spec.frame_bounds() {
        if !b.is_tight(1e-8) {
            warn!(
                "Gabor matrix requested for a non-Parseval frame (bounds {:.3e}, {:.3e})",
                b.lower, b.upper
            );
        }
    }
    let ta = transformed_atoms(t, spec)?;
    let entries = (spec.atoms().adjoint() * ta).transpose();
    Ok(GaborMatrix {
        lattice: spec.lattice().clone(),
        window: spec.window().clone(),
        entries,
    })
}

/// For each `mu`, the torus images of `chi(mu)`.
pub fn chi_images(cmap: &CanonicalMap, lattice: &Lattice) -> Result<Vec<Vec<PhasePoint>>> {
    let grid = *lattice.grid();
    lattice
        .points()
        .par_iter()
        .map(|mu| cmap.images(mu, &grid))
        .collect()
}

fn min_image_distance(images: &[PhasePoint], lambda: &PhasePoint, grid: &Grid) -> f64 {
    images
        .iter()
        .map(|z| z.torus_distance(lambda, grid))
        .fold(f64::INFINITY, f64::min)
}

/// Number of logarithmic distance bins in the decay fit.
pub const DECAY_BINS: usize = 32;
/// Smallest number of bins accepted for a fit.
pub const MIN_FIT_BINS: usize = 4;

/// Fits the decay envelope of `|G|` against `log <chi(mu) - lambda>` over
/// `r in [2, r_max/2]`, with `r_max` the bracket of the torus diameter and
/// distances measured to the nearest torus image of `chi(mu)`.
pub fn decay_envelope_fit(
    g: &GaborMatrix,
    cmap: &CanonicalMap,
    s_claim: f64,
    tolerance: f64,
) -> Result<DecayReport> {
    let lat = &g.lattice;
    let grid = *lat.grid();
    let images = chi_images(cmap, lat)?;
    let k = lat.len();
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(k * k);
    for (mu, imgs) in images.iter().enumerate() {
        for (l, lambda) in lat.points().iter().enumerate() {
            samples.push((
                bracket(min_image_distance(imgs, lambda, &grid)),
                g.entries[(mu, l)].norm(),
            ));
        }
    }
    // bracket of the torus diameter
    let r_max = bracket(0.5 * grid.width() * (2.0 * grid.d() as f64).sqrt());
    let lmax = r_max.ln();
    // per bin: (max |G|, smallest r)
    let mut bins: Vec<Option<(f64, f64)>> = vec![None; DECAY_BINS];
    for &(r, v) in &samples {
        let b = ((r.ln() / lmax) * DECAY_BINS as f64).floor().max(0.0) as usize;
        let slot = &mut bins[b.min(DECAY_BINS - 1)];
        *slot = Some(match *slot {
            Some((best, rmin)) => (best.max(v), rmin.min(r)),
            None => (v, r),
        });
    }
    // Envelope: the largest entry at distance >= r. Exact zeros of the Gram
    // matrix (e.g. at adjoint-lattice offsets) would otherwise punch holes
    // into the per-bin maxima.
    let mut tail = 0.0f64;
    let mut envelope: Vec<(f64, f64)> = Vec::new();
    for (v, r) in bins.iter().rev().flatten() {
        tail = tail.max(*v);
        envelope.push((*r, tail));
    }
    envelope.reverse();
    let pairs: Vec<(f64, f64)> = envelope
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|&(r, v)| (r.ln(), v.ln()))
        .collect();
    let usable: Vec<(f64, f64)> = envelope
        .iter()
        .filter(|(r, v)| *v > 0.0 && *r >= 2.0 && *r <= 0.5 * r_max)
        .copied()
        .collect();
    if usable.len() < MIN_FIT_BINS {
        return Err(Error::InsufficientRange {
            usable: usable.len(),
            required: MIN_FIT_BINS,
        });
    }
    let fit = loglog_fit(&usable)?;
    Ok(DecayReport::new(
        pairs,
        usable.len(),
        fit,
        s_claim,
        tolerance,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportReport {
    /// Per row: torus distance between the argmax column and the nearest image of `chi(mu)`.
    pub distances: Vec<f64>,
    pub bound: f64,
    pub max_distance: f64,
    pub fraction_within: f64,
}

/// Locates the largest entry of every row and measures how far it sits from
/// `chi(mu)`. The bound is `sqrt(2d) |A| + 1`.
pub fn transport_audit(g: &GaborMatrix, cmap: &CanonicalMap) -> Result<TransportReport> {
    let lat = &g.lattice;
    let grid = *lat.grid();
    let images = chi_images(cmap, lat)?;
    let bound = (2.0 * grid.d() as f64).sqrt() * lat.generator_norm() + 1.0;
    let distances: Vec<f64> = (0..lat.len())
        .map(|mu| {
            let row = g.entries.row(mu);
            let (arg, _) = row.iter().enumerate().fold((0, -1.0), |acc, (i, v)| {
                if v.norm() > acc.1 {
                    (i, v.norm())
                } else {
                    acc
                }
            });
            min_image_distance(&images[mu], lat.point(arg), &grid)
        })
        .collect();
    let within = distances.iter().filter(|&&d| d <= bound).count();
    let max_distance = distances.iter().copied().fold(0.0, f64::max);
    Ok(TransportReport {
        fraction_within: within as f64 / distances.len() as f64,
        distances,
        bound,
        max_distance,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    /// Cell centers `u` and the empirical envelope `H(u)`.
    pub cells: Vec<(PhasePoint, f64)>,
    /// `sum H(u) m(u) |det A|`.
    pub weighted_mass: f64,
    /// `sum H(u) |det A|`.
    pub mass: f64,
    pub max_envelope: f64,
}

/// Bins `|G(mu, lambda)|` by the displacement
/// `u = (x - dPhi/deta(x', eta), eta' - dPhi/dx(x', eta))`, where
/// `mu = (x, eta)` and `lambda = (x', eta')`, using lattice cells of size `A`.
pub fn envelope_function_audit(
    g: &GaborMatrix,
    phase: &dyn TamePhase,
    m: &Weight,
) -> Result<EnvelopeReport> {
    let lat = &g.lattice;
    let grid = *lat.grid();
    let a = lat.generator_continuum();
    let ainv = a
        .clone()
        .try_inverse()
        .ok_or(Error::SingularGenerator { expected: 2 })?;
    let mut cells: HashMap<(i64, i64), f64> = HashMap::new();
    for (mu_i, mu) in lat.points().iter().enumerate() {
        let (x, eta) = (mu.x[0], mu.eta[0]);
        for (l_i, lambda) in lat.points().iter().enumerate() {
            let (xp, etap) = (lambda.x[0], lambda.eta[0]);
            let u = PhasePoint::new1(x - phase.grad_eta(xp, eta), etap - phase.grad_x(xp, eta))
                .wrapped(&grid);
            let c = &ainv * DVector::from_vec(u.to_vec());
            let key = (c[0].round() as i64, c[1].round() as i64);
            let v = g.entries[(mu_i, l_i)].norm();
            let e = cells.entry(key).or_insert(0.0);
            *e = e.max(v);
        }
    }
    let area = lat.cell_volume();
    let mut keys: Vec<(i64, i64)> = cells.keys().copied().collect();
    keys.sort();
    let mut out = Vec::with_capacity(keys.len());
    let (mut mass, mut weighted_mass, mut max_envelope) = (0.0, 0.0, 0.0f64);
    for key in keys {
        let hval = cells[&key];
        let center = &a * DVector::from_vec(vec![key.0 as f64, key.1 as f64]);
        let u = PhasePoint::new1(center[0], center[1]);
        mass += hval * area;
        weighted_mass += hval * m.eval(&u) * area;
        max_envelope = max_envelope.max(hval);
        out.push((u, hval));
    }
    Ok(EnvelopeReport {
        cells: out,
        weighted_mass,
        mass,
        max_envelope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::BuiltinPhase;

    fn op(n: usize, p: BuiltinPhase) -> FioOperator {
        let grid = Grid::one_dim(n).unwrap();
        FioOperator::new(
            Arc::new(p),
            SymbolTable::constant(grid, Complex64::new(1.0, 0.0)),
        )
        .unwrap()
    }

    #[test]
    fn linear_phase_is_identity() {
        let t = op(32, BuiltinPhase::Linear);
        let f = Signal::random(*t.grid(), &mut ChaCha8Rng::seed_from_u64(0));
        assert!(t.apply(&f).unwrap().sub(&f).norm() < 1e-10 * f.norm());
        let m = t.matrix().unwrap();
        assert!((m - DMatrix::<Complex64>::identity(32, 32))
            .iter()
            .all(|v| v.norm() < 1e-10));
    }

    #[test]
    fn dilation_samples_at_double_index() {
        let t = op(64, BuiltinPhase::Dilation { s: 2.0 });
        let f = Signal::random(*t.grid(), &mut ChaCha8Rng::seed_from_u64(1));
        let tf = t.apply(&f).unwrap();
        for j in 0..64 {
            assert!((tf.values()[j] - f.values()[(2 * j) % 64]).norm() < 1e-10);
        }
    }

    #[test]
    fn matrix_agrees_with_apply() {
        let grid = Grid::one_dim(32).unwrap();
        let t = FioOperator::new(
            Arc::new(BuiltinPhase::Perturbed { eps: 0.2 }),
            SymbolTable::bandlimited(grid, 2, 3).unwrap(),
        )
        .unwrap();
        let m = t.matrix().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let f = Signal::random(grid, &mut rng);
            let a = t.apply(&f).unwrap();
            let b = &m * f.to_dvector();
            assert!(a
                .values()
                .iter()
                .zip(b.iter())
                .all(|(x, y)| (x - y).norm() < 1e-10));
        }
    }

    #[test]
    fn bandlimited_symbol_is_band_limited() {
        let grid = Grid::one_dim(32).unwrap();
        let s = SymbolTable::bandlimited(grid, 2, 0).unwrap();
        // 2-D DFT of the table vanishes outside |p|, |q| <= 4
        let n = 32usize;
        for (p, q) in [(5usize, 0usize), (0, 6), (10, 10), (16, 3)] {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                for m in 0..n {
                    acc += s.at(j, m)
                        * Complex64::from_polar(
                            1.0,
                            -2.0 * PI * ((p * j + q * m) % n) as f64 / n as f64,
                        );
                }
            }
            assert!(acc.norm() < 1e-9, "mode ({p},{q}) = {acc}");
        }
        assert_eq!(s.tag().claimed_exponent(), Some(4.0));
    }
}
