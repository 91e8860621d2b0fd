//! Gabor systems `{pi(lambda) g}` over a lattice: frame operator, bounds,
//! canonical tight and dual windows, analysis and synthesis.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, PhasePoint};
use crate::lattice::Lattice;
use crate::signal::Signal;
use crate::tf::{shift_by_steps, Twiddles};
use crate::weight::Weight;

/// Relative threshold below which the lower bound is treated as zero.
pub const NOT_A_FRAME_RTOL: f64 = 1e-10;

/// Largest signal dimension handled by the dense routines.
pub const DENSE_LIMIT: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
}

impl FrameBounds {
    pub fn is_frame(&self) -> bool {
        self.upper > 0.0 && self.lower >= NOT_A_FRAME_RTOL * self.upper
    }

    pub fn condition(&self) -> f64 {
        self.upper / self.lower
    }

    pub fn is_tight(&self, tol: f64) -> bool {
        (self.lower - 1.0).abs() <= tol && (self.upper - 1.0).abs() <= tol
    }
}

/// Columns `pi(z_k) g` for grid points given as per-coordinate steps.
fn atom_matrix(g: &Signal, steps: &[Vec<i64>]) -> DMatrix<Complex64> {
    let grid = *g.grid();
    let d = grid.d();
    let tw = Twiddles::new(grid.n());
    let cols: Vec<Signal> = steps
        .par_iter()
        .map(|s| shift_by_steps(g, &s[..d], &s[d..], &tw))
        .collect();
    DMatrix::from_fn(grid.len(), cols.len(), |r, c| cols[c].values()[r])
}

fn bounds_of(s: &DMatrix<Complex64>) -> (FrameBounds, SymmetricEigen<Complex64, nalgebra::Dyn>) {
    let eig = SymmetricEigen::new(s.clone());
    let lower = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    let upper = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    (FrameBounds { lower, upper }, eig)
}

fn check_dense(grid: &Grid) -> Result<()> {
    if grid.len() > DENSE_LIMIT {
        return Err(Error::SizeGuard {
            dim: grid.len(),
            limit: DENSE_LIMIT,
        });
    }
    Ok(())
}

/// A window together with a lattice. Expensive products (atoms, frame
/// operator, eigen-decomposition) are computed once on first use.
#[derive(Debug)]
pub struct GaborFrameSpec {
    window: Signal,
    lattice: Arc<Lattice>,
    atoms: OnceLock<DMatrix<Complex64>>,
    operator: OnceLock<DMatrix<Complex64>>,
    eigen: OnceLock<(FrameBounds, SymmetricEigen<Complex64, nalgebra::Dyn>)>,
}

impl Clone for GaborFrameSpec {
    fn clone(&self) -> Self {
        Self::build(self.window.clone(), self.lattice.clone())
    }
}

impl GaborFrameSpec {
    /// Normalizes `window` to unit norm.
    pub fn new(window: &Signal, lattice: Arc<Lattice>) -> Result<Self> {
        window.check_grid(lattice.grid())?;
        Ok(Self::build(window.normalized()?, lattice))
    }

    /// Keeps `window` as given (used for tightened windows and for raw
    /// continuum samples).
    pub fn with_window(window: Signal, lattice: Arc<Lattice>) -> Result<Self> {
        window.check_grid(lattice.grid())?;
        if window.is_zero() {
            return Err(Error::ZeroWindow);
        }
        Ok(Self::build(window, lattice))
    }

    fn build(window: Signal, lattice: Arc<Lattice>) -> Self {
        Self {
            window,
            lattice,
            atoms: OnceLock::new(),
            operator: OnceLock::new(),
            eigen: OnceLock::new(),
        }
    }

    pub fn window(&self) -> &Signal {
        &self.window
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn grid(&self) -> &Grid {
        self.lattice.grid()
    }

    /// Atom matrix: column `k` is `pi(lambda_k) g`.
    pub fn atoms(&self) -> &DMatrix<Complex64> {
        self.atoms.get_or_init(|| {
            let lat = &self.lattice;
            let steps: Vec<Vec<i64>> = (0..lat.len())
                .map(|k| lat.indices(k).iter().map(|&j| j as i64).collect())
                .collect();
            atom_matrix(&self.window, &steps)
        })
    }

    /// `pi(lambda_k) g` as a signal.
    pub fn atom(&self, k: usize) -> Signal {
        Signal::new(
            *self.grid(),
            self.atoms().column(k).iter().copied().collect(),
        )
        .expect("column length")
    }

    /// `S = sum_lambda <., pi(lambda) g> pi(lambda) g`.
    pub fn frame_operator(&self) -> Result<&DMatrix<Complex64>> {
        check_dense(self.grid())?;
        Ok(self.operator.get_or_init(|| {
            let phi = self.atoms();
            let s = phi * phi.adjoint();
            // symmetrize away roundoff
            (&s + s.adjoint()) * Complex64::new(0.5, 0.0)
        }))
    }

    fn eigen(&self) -> Result<&(FrameBounds, SymmetricEigen<Complex64, nalgebra::Dyn>)> {
        let s = self.frame_operator()?;
        Ok(self.eigen.get_or_init(|| bounds_of(s)))
    }

    /// Extremal eigenvalues of the frame operator.
    pub fn frame_bounds(&self) -> Result<FrameBounds> {
        Ok(self.eigen()?.0)
    }

    fn spectral_apply(&self, power: f64) -> Result<Signal> {
        let (bounds, eig) = self.eigen()?;
        if !bounds.is_frame() {
            return Err(Error::NotAFrame {
                lower: bounds.lower,
                upper: bounds.upper,
            });
        }
        let u = &eig.eigenvectors;
        let g = self.window.to_dvector();
        let mut coef = u.adjoint() * g;
        for (c, &lam) in coef.iter_mut().zip(eig.eigenvalues.iter()) {
            *c *= lam.powf(power);
        }
        Signal::from_dvector(*self.grid(), &(u * coef))
    }

    /// `S^{-1/2} g`, whose Gabor system over the same lattice is Parseval.
    pub fn canonical_tight_window(&self) -> Result<Signal> {
        self.spectral_apply(-0.5)
    }

    /// `S^{-1} g`.
    pub fn dual_window(&self) -> Result<Signal> {
        self.spectral_apply(-1.0)
    }

    /// Spec for the canonical tight window on the same lattice.
    pub fn tightened(&self) -> Result<GaborFrameSpec> {
        GaborFrameSpec::with_window(self.canonical_tight_window()?, self.lattice.clone())
    }

    /// Coefficients `<f, pi(lambda) g>` in lattice order.
    pub fn analysis(&self, f: &Signal) -> Result<DVector<Complex64>> {
        f.check_grid(self.grid())?;
        Ok(self.atoms().adjoint() * f.to_dvector())
    }

    /// `sum_lambda c_lambda pi(lambda) g`.
    pub fn synthesis(&self, c: &DVector<Complex64>) -> Result<Signal> {
        if c.len() != self.lattice.len() {
            return Err(Error::LengthMismatch {
                expected: self.lattice.len(),
                got: c.len(),
            });
        }
        Signal::from_dvector(*self.grid(), &(self.atoms() * c))
    }

    /// Weighted `l^p` norm of the Gabor coefficients of `f`, with the weight
    /// evaluated at the lattice points.
    pub fn gabor_mod_norm(&self, f: &Signal, p: f64, m: &Weight) -> Result<f64> {
        let c = self.analysis(f)?;
        let w: Vec<f64> = self.lattice.points().iter().map(|z| m.eval(z)).collect();
        weighted_lp_norm(c.as_slice(), &w, p)
    }
}

/// `(sum |c_k|^p w_k^p)^{1/p}`, or `max |c_k| w_k` for `p = inf`.
pub fn weighted_lp_norm(c: &[Complex64], w: &[f64], p: f64) -> Result<f64> {
    if c.len() != w.len() {
        return Err(Error::LengthMismatch {
            expected: c.len(),
            got: w.len(),
        });
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "p must lie in [1, inf], got {p}"
        )));
    }
    if p.is_infinite() {
        return Ok(c
            .iter()
            .zip(w)
            .map(|(a, b)| a.norm() * b)
            .fold(0.0, f64::max));
    }
    // scale by the largest term to avoid overflow for large p
    let scale = c
        .iter()
        .zip(w)
        .map(|(a, b)| a.norm() * b)
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = c
        .iter()
        .zip(w)
        .map(|(a, b)| (a.norm() * b / scale).powf(p))
        .sum();
    Ok(scale * s.powf(1.0 / p))
}

/// Frame bounds of a warped Gabor system.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WarpedFrameReport {
    pub bounds: FrameBounds,
    /// Number of atoms (images counted with multiplicity).
    pub atoms: usize,
    /// Largest distance between a warped point and its grid rounding.
    pub max_rounding: f64,
}

/// Frame bounds of `{pi(round(z)) g : z in warp(lambda), lambda in Lambda}`.
/// `warp` may return several images per point (multivalued maps on the
/// torus); each image contributes one atom.
pub fn warped_frame_check<F>(g: &Signal, lattice: &Lattice, warp: F) -> Result<WarpedFrameReport>
where
    F: Fn(&PhasePoint) -> Result<Vec<PhasePoint>> + Sync,
{
    let grid = *lattice.grid();
    g.check_grid(&grid)?;
    check_dense(&grid)?;
    let h = grid.step();
    let images: Vec<Vec<PhasePoint>> = lattice
        .points()
        .par_iter()
        .map(&warp)
        .collect::<Result<_>>()?;
    let mut steps = Vec::new();
    let mut max_rounding: f64 = 0.0;
    for z in images.into_iter().flatten() {
        let raw = z.to_vec();
        let s: Vec<i64> = raw.iter().map(|&c| (c / h).round() as i64).collect();
        let disp: f64 = raw
            .iter()
            .zip(&s)
            .map(|(&c, &k)| (c - k as f64 * h).powi(2))
            .sum::<f64>()
            .sqrt();
        max_rounding = max_rounding.max(disp);
        steps.push(s);
    }
    let phi = atom_matrix(g, &steps);
    let s = &phi * phi.adjoint();
    let s = (&s + s.adjoint()) * Complex64::new(0.5, 0.0);
    let (bounds, _) = bounds_of(&s);
    Ok(WarpedFrameReport {
        bounds,
        atoms: steps.len(),
        max_rounding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::window::gaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(n: usize, a: usize, b: usize) -> GaborFrameSpec {
        let grid = Grid::one_dim(n).unwrap();
        let lat = Arc::new(Lattice::separable(grid, a, b).unwrap());
        GaborFrameSpec::new(&gaussian(grid, 1.0).unwrap(), lat).unwrap()
    }

    #[test]
    fn single_point_lattice_gives_rank_one_projector() {
        let sp = spec(16, 16, 16);
        let s = sp.frame_operator().unwrap();
        let g = sp.window().to_dvector();
        let expected = &g * g.adjoint();
        assert!((s - expected).iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn redundancy_four_gaussian_is_a_frame() {
        let sp = spec(64, 4, 4);
        let b = sp.frame_bounds().unwrap();
        assert!(b.is_frame());
        assert!(b.lower > 0.0 && b.condition().is_finite());
    }

    #[test]
    fn undersampled_lattice_is_not_a_frame() {
        let sp = spec(64, 16, 16);
        let b = sp.frame_bounds().unwrap();
        assert!(b.lower < 1e-10 * b.upper);
        assert!(!b.is_frame());
        assert!(matches!(
            sp.canonical_tight_window(),
            Err(Error::NotAFrame { .. })
        ));
    }

    #[test]
    fn tight_window_norm_is_inverse_redundancy() {
        let sp = spec(64, 4, 4);
        let gt = sp.canonical_tight_window().unwrap();
        assert!((gt.norm_sq() - 0.25).abs() < 1e-8);
        let t = sp.tightened().unwrap();
        assert!(t.frame_bounds().unwrap().is_tight(1e-8));
        // tightening an already tight window is a no-op
        let again = t.canonical_tight_window().unwrap();
        assert!(again.max_abs_diff(&gt) < 1e-8);
    }

    #[test]
    fn dual_window_reconstructs() {
        let sp = spec(32, 4, 2);
        let gamma = sp.dual_window().unwrap();
        let dual = GaborFrameSpec::with_window(gamma, sp.lattice().clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..5 {
            let f = Signal::random(*sp.grid(), &mut rng);
            let rec = dual.synthesis(&sp.analysis(&f).unwrap()).unwrap();
            assert!(rec.sub(&f).norm() < 1e-8 * f.norm());
            let mixed = sp.synthesis(&dual.analysis(&f).unwrap()).unwrap();
            assert!(mixed.sub(&f).norm() < 1e-8 * f.norm());
        }
    }

    #[test]
    fn weighted_lp_norm_cases() {
        let c = vec![Complex64::new(3.0, 4.0), Complex64::new(0.0, 1.0)];
        assert!((weighted_lp_norm(&c, &[1.0, 1.0], 2.0).unwrap() - 26f64.sqrt()).abs() < 1e-14);
        assert!((weighted_lp_norm(&c, &[1.0, 2.0], 1.0).unwrap() - 7.0).abs() < 1e-14);
        assert!((weighted_lp_norm(&c, &[1.0, 10.0], f64::INFINITY).unwrap() - 10.0).abs() < 1e-14);
        assert!(weighted_lp_norm(&c, &[1.0, 1.0], 0.5).is_err());
    }

    #[test]
    fn identity_warp_reproduces_frame_bounds() {
        let sp = spec(32, 4, 4);
        let r = warped_frame_check(sp.window(), sp.lattice(), |z| Ok(vec![z.clone()])).unwrap();
        let b = sp.frame_bounds().unwrap();
        assert!((r.bounds.lower - b.lower).abs() < 1e-12);
        assert!((r.bounds.upper - b.upper).abs() < 1e-12);
        assert_eq!(r.max_rounding, 0.0);
    }
}
