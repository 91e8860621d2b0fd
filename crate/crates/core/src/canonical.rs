//! The canonical transformation `chi(y, eta) = (x, xi)` generated by a tame
//! phase through `y = dPhi/deta (x, eta)`, `xi = dPhi/dx (x, eta)`, and its
//! lattice rounding `chi'`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, PhasePoint};
use crate::lattice::Lattice;
use crate::phase::TamePhase;
use crate::weight::Weight;

pub const DEFAULT_NEWTON_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 50;

#[derive(Debug, Clone)]
pub struct CanonicalMap {
    phase: Arc<dyn TamePhase>,
    newton_tol: f64,
    max_iter: usize,
    lipschitz_estimate: f64,
}

/// Damped Newton for `r(u) = 0` given `r` and `r'`. Steps are halved while
/// they increase the residual.
fn damped_newton(
    r: impl Fn(f64) -> f64,
    dr: impl Fn(f64) -> f64,
    u0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut u = u0;
    let mut res = r(u);
    let mut trace = vec![res.abs()];
    for _ in 0..max_iter {
        if res.abs() <= tol {
            return Ok(u);
        }
        let slope = dr(u);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let step = -res / slope;
        let mut t = 1.0;
        let mut next = u + step;
        let mut next_res = r(next);
        let mut halvings = 0;
        while next_res.abs() > res.abs() && halvings < 30 {
            t *= 0.5;
            next = u + t * step;
            next_res = r(next);
            halvings += 1;
        }
        if next_res.abs() >= res.abs() && res.abs() <= 10.0 * tol {
            // stalled at roundoff level
            return Ok(u);
        }
        u = next;
        res = next_res;
        trace.push(res.abs());
    }
    if res.abs() <= tol {
        return Ok(u);
    }
    Err(Error::NewtonDivergence {
        iterations: trace.len() - 1,
        residuals: trace,
    })
}

impl CanonicalMap {
    pub fn new(phase: Arc<dyn TamePhase>) -> Result<Self> {
        Self::with_tolerance(phase, DEFAULT_NEWTON_TOL, DEFAULT_MAX_ITER)
    }

    pub fn with_tolerance(
        phase: Arc<dyn TamePhase>,
        newton_tol: f64,
        max_iter: usize,
    ) -> Result<Self> {
        if !(newton_tol > 0.0) || max_iter == 0 {
            return Err(Error::InvalidArgument(
                "Newton tolerance and iteration cap must be positive".into(),
            ));
        }
        let mut cm = Self {
            phase,
            newton_tol,
            max_iter,
            lipschitz_estimate: f64::NAN,
        };
        cm.lipschitz_estimate = cm.estimate_lipschitz(2.0, 12)?;
        Ok(cm)
    }

    pub fn phase(&self) -> &Arc<dyn TamePhase> {
        &self.phase
    }

    pub fn newton_tol(&self) -> f64 {
        self.newton_tol
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }

    /// Sampled Lipschitz constant of `chi` and `chi^{-1}` on `[-2, 2]^2`.
    pub fn lipschitz_estimate(&self) -> f64 {
        self.lipschitz_estimate
    }

    fn solve_x(&self, y: f64, eta: f64, x0: f64) -> Result<f64> {
        let p = &self.phase;
        damped_newton(
            |x| p.grad_eta(x, eta) - y,
            |x| p.mixed_hessian(x, eta),
            x0,
            self.newton_tol,
            self.max_iter,
        )
    }

    /// `chi(y, eta)` in raw continuum coordinates (no torus wrap).
    pub fn apply(&self, z: &PhasePoint) -> Result<PhasePoint> {
        let (y, eta) = (z.x[0], z.eta[0]);
        let x = self.solve_x(y, eta, y)?;
        Ok(PhasePoint::new1(x, self.phase.grad_x(x, eta)))
    }

    /// `chi^{-1}(x, xi)`.
    pub fn inverse(&self, z: &PhasePoint) -> Result<PhasePoint> {
        let (x, xi) = (z.x[0], z.eta[0]);
        let p = &self.phase;
        let eta = damped_newton(
            |e| p.grad_x(x, e) - xi,
            |e| p.mixed_hessian(x, e),
            xi,
            self.newton_tol,
            self.max_iter,
        )?;
        Ok(PhasePoint::new1(p.grad_eta(x, eta), eta))
    }

    /// All torus images of `z`: every `x` in the fundamental domain with
    /// `dPhi/deta (x, eta) = y` modulo the torus width, with `xi` wrapped.
    /// The canonical image (`apply`, wrapped) is always included first.
    pub fn images(&self, z: &PhasePoint, grid: &Grid) -> Result<Vec<PhasePoint>> {
        let (y, eta) = (z.x[0], z.eta[0]);
        let w = grid.width();
        let half = 0.5 * w;
        let p = &self.phase;
        let mut out = vec![self.apply(z)?.wrapped(grid)];

        let g_lo = p.grad_eta(-half, eta);
        let g_hi = p.grad_eta(half, eta);
        let increasing = g_hi >= g_lo;
        let (lo, hi) = if increasing {
            (g_lo, g_hi)
        } else {
            (g_hi, g_lo)
        };
        let k_min = ((lo - y) / w).ceil() as i64;
        let k_max = ((hi - y) / w).floor() as i64;
        for k in k_min..=k_max {
            let target = y + k as f64 * w;
            let t = (target - lo) / (hi - lo).max(f64::MIN_POSITIVE);
            let guess = if increasing {
                -half + t * w
            } else {
                half - t * w
            };
            let x = match self.solve_x(target, eta, guess) {
                Ok(x) => x,
                Err(_) => match bisect(
                    |x| p.grad_eta(x, eta) - target,
                    -half,
                    half,
                    self.newton_tol,
                ) {
                    Some(x) => x,
                    None => continue,
                },
            };
            let img = PhasePoint::new1(x, p.grad_x(x, eta)).wrapped(grid);
            if out.iter().all(|q| q.torus_distance(&img, grid) > 1e-9) {
                out.push(img);
            }
        }
        Ok(out)
    }

    /// Sampled Lipschitz constant over a `k x k` grid on `[-hw, hw]^2` using
    /// nearest-neighbour pairs, for both `chi` and `chi^{-1}`.
    pub fn estimate_lipschitz(&self, hw: f64, k: usize) -> Result<f64> {
        let step = 2.0 * hw / (k - 1) as f64;
        let mut best: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                let z = PhasePoint::new1(-hw + i as f64 * step, -hw + j as f64 * step);
                for dz in [
                    PhasePoint::new1(step, 0.0),
                    PhasePoint::new1(0.0, step),
                    PhasePoint::new1(step, step),
                ] {
                    let z2 = z.add(&dz);
                    let r = dz.norm();
                    best = best
                        .max(self.apply(&z2)?.sub(&self.apply(&z)?).norm() / r)
                        .max(self.inverse(&z2)?.sub(&self.inverse(&z)?).norm() / r);
                }
            }
        }
        Ok(best)
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let (mut fa, fb) = (f(a), f(b));
    if fa * fb > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm.abs() <= tol || (b - a) < 1e-15 {
            return Some(m);
        }
        if fa * fm <= 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Some(0.5 * (a + b))
}

/// `chi` free-function form.
pub fn canonical_map(cm: &CanonicalMap, z: &PhasePoint) -> Result<PhasePoint> {
    cm.apply(z)
}

/// `chi^{-1}` free-function form.
pub fn canonical_map_inverse(cm: &CanonicalMap, z: &PhasePoint) -> Result<PhasePoint> {
    cm.inverse(z)
}

#[derive(Debug, Clone, Serialize)]
pub struct SymplecticReport {
    pub samples: usize,
    /// `max |(D chi)^T J D chi - J|` over samples.
    pub max_deviation: f64,
}

/// Finite-difference check that `D chi` preserves the symplectic form.
pub fn symplectic_audit(
    cm: &CanonicalMap,
    samples: &[PhasePoint],
    step: f64,
) -> Result<SymplecticReport> {
    let mut worst: f64 = 0.0;
    for z in samples {
        let dy = cm
            .apply(&z.add(&PhasePoint::new1(step, 0.0)))?
            .sub(&cm.apply(&z.sub(&PhasePoint::new1(step, 0.0)))?);
        let de = cm
            .apply(&z.add(&PhasePoint::new1(0.0, step)))?
            .sub(&cm.apply(&z.sub(&PhasePoint::new1(0.0, step)))?);
        // columns of the Jacobian
        let (a, c) = (dy.x[0] / (2.0 * step), dy.eta[0] / (2.0 * step));
        let (b, d) = (de.x[0] / (2.0 * step), de.eta[0] / (2.0 * step));
        // D^T J D for D = [[a, b], [c, d]] and J = [[0, 1], [-1, 0]]
        let det = a * d - b * c;
        worst = worst.max((det - 1.0).abs());
    }
    Ok(SymplecticReport {
        samples: samples.len(),
        max_deviation: worst,
    })
}

/// `chi'(lambda) = A floor(A^{-1} chi(lambda))` for one lattice point.
#[derive(Debug, Clone, Serialize)]
pub struct ChiPrime {
    /// Index of `chi'(lambda)` in the lattice.
    pub index: usize,
    /// `chi'(lambda)` wrapped to the torus.
    pub point: PhasePoint,
    /// Raw `chi(lambda)`.
    pub image: PhasePoint,
    /// `|chi(lambda) - chi'(lambda)|` before wrapping.
    pub displacement: f64,
}

pub fn chi_prime(cm: &CanonicalMap, lattice: &Lattice, lambda: &PhasePoint) -> Result<ChiPrime> {
    let image = cm.apply(lambda)?;
    let raw = lattice.floor_to_lattice(&image);
    let displacement = image.sub(&raw).norm();
    let point = raw.wrapped(lattice.grid());
    let index = lattice.index_of(&point).ok_or_else(|| {
        Error::InvalidArgument(format!("rounded image {point:?} is not a lattice point"))
    })?;
    Ok(ChiPrime {
        index,
        point: lattice.point(index).clone(),
        image,
        displacement,
    })
}

/// `chi'` for every lattice point, in lattice order.
pub fn warp_table(cm: &CanonicalMap, lattice: &Lattice) -> Result<Vec<ChiPrime>> {
    lattice
        .points()
        .par_iter()
        .map(|p| chi_prime(cm, lattice, p))
        .collect()
}

/// Largest number of lattice points sharing one `chi'` value.
pub fn preimage_multiplicity(table: &[ChiPrime], lattice_len: usize) -> usize {
    let mut counts = vec![0usize; lattice_len];
    for c in table {
        counts[c.index] += 1;
    }
    counts.into_iter().max().unwrap_or(0)
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportAudit {
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// False for weights outside the polynomial class.
    pub supported: bool,
    pub note: String,
}

/// Range of `v(chi(z)) / v(z)` over `samples`.
pub fn weight_transport_audit(
    cm: &CanonicalMap,
    w: &Weight,
    samples: &[PhasePoint],
) -> Result<TransportAudit> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for z in samples {
        let r = w.eval(&cm.apply(z)?) / w.eval(z);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let (supported, note) = match w {
        Weight::Polynomial { .. } => (true, String::new()),
        Weight::SubExponential { .. } => (
            false,
            "super-polynomial weights are not preserved by canonical transformations".to_string(),
        ),
        Weight::Table { .. } => (
            false,
            "transport audit requires a polynomial weight".to_string(),
        ),
    };
    Ok(TransportAudit {
        ratio_min: lo,
        ratio_max: hi,
        supported,
        note,
    })
}

/// `K = max max(r, 1/r)` for `r = (1 + |chi(z)|) / (1 + |z|)`.
pub fn growth_equivalence(cm: &CanonicalMap, samples: &[PhasePoint]) -> Result<f64> {
    let mut k: f64 = 1.0;
    for z in samples {
        let r = (1.0 + cm.apply(z)?.norm()) / (1.0 + z.norm());
        k = k.max(r).max(1.0 / r);
    }
    Ok(k)
}
