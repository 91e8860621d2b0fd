//! Regression, operator norms, weight audits and JSON reports.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::PhasePoint;
use crate::weight::Weight;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn loglog_fit(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(p) = points.iter().find(|(x, y)| !(*x > 0.0) || !(*y > 0.0)) {
        return Err(Error::DegenerateFit(format!(
            "non-positive coordinate in {p:?}"
        )));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Least-squares line through already-logarithmic data.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LogLogFit> {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx < 1e-24 * (1.0 + mx * mx) {
        return Err(Error::DegenerateFit("abscissae have no spread".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    Ok(LogLogFit {
        slope,
        intercept,
        residual,
    })
}

/// Slope tolerance for theorem-claim verdicts at a given resolution.
pub fn default_slope_tolerance(n: usize) -> f64 {
    if n >= 256 {
        0.5
    } else {
        0.75
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    /// `(ln r, ln max|G|)` per non-empty bin, sorted by distance.
    pub pairs: Vec<(f64, f64)>,
    /// Number of bins used in the fit.
    pub fitted_bins: usize,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub claim: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl DecayReport {
    pub fn new(
        pairs: Vec<(f64, f64)>,
        fitted_bins: usize,
        fit: LogLogFit,
        claim: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            pairs,
            fitted_bins,
            slope: fit.slope,
            intercept: fit.intercept,
            residual: fit.residual,
            claim,
            tolerance,
            pass: fit.slope <= -claim + tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    SingularValue,
    ProbeSup,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub method: NormMethod,
    pub probes: usize,
    pub iterations: usize,
    pub confidence_note: String,
}

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 10_000;

fn random_vector(len: usize, rng: &mut ChaCha8Rng) -> DVector<Complex64> {
    DVector::from_fn(len, |_, _| {
        Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))
    })
}

/// Largest singular value by power iteration on `M^H M`, stopping when the
/// eigen-residual `|M^H M v - lambda v|` drops below `POWER_TOL * lambda`.
///
/// Clustered top singular values can stall the iteration; in that case the
/// result falls back to a dense SVD and says so in the note.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> NormEstimate {
    let cols = m.ncols();
    if cols == 0 || m.nrows() == 0 {
        return NormEstimate {
            value: 0.0,
            method: NormMethod::SingularValue,
            probes: 0,
            iterations: 0,
            confidence_note: "empty matrix".into(),
        };
    }
    let mh = m.adjoint();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = random_vector(cols, &mut rng);
    v /= Complex64::new(v.norm(), 0.0);
    let mut lambda = 0.0;
    for it in 1..=POWER_MAX_ITER {
        let w = &mh * (m * &v);
        lambda = v.dotc(&w).re;
        let wn = w.norm();
        if wn == 0.0 {
            return NormEstimate {
                value: 0.0,
                method: NormMethod::SingularValue,
                probes: 0,
                iterations: it,
                confidence_note: "zero matrix".into(),
            };
        }
        let resid = (&w - &v * Complex64::new(lambda, 0.0)).norm();
        if resid <= POWER_TOL * lambda.abs() {
            return NormEstimate {
                value: lambda.max(0.0).sqrt(),
                method: NormMethod::SingularValue,
                probes: 0,
                iterations: it,
                confidence_note: format!("power iteration converged, residual {resid:.1e}"),
            };
        }
        v = w / Complex64::new(wn, 0.0);
    }
    let sv = m.clone().singular_values().max();
    NormEstimate {
        value: sv,
        method: NormMethod::SingularValue,
        probes: 0,
        iterations: POWER_MAX_ITER,
        confidence_note: format!(
            "power iteration stalled (estimate {:.6e}); value from dense SVD",
            lambda.max(0.0).sqrt()
        ),
    }
}

/// `max_k |M f_k| / |f_k|` over seeded random probes, a lower bound for the
/// spectral norm.
pub fn probe_sup(m: &DMatrix<Complex64>, probes: usize, seed: u64) -> NormEstimate {
    let ratio = |f: &DVector<Complex64>| {
        let nf = f.norm();
        if nf == 0.0 {
            0.0
        } else {
            (m * f).norm() / nf
        }
    };
    let value = probe_max(m.ncols(), probes, seed, ratio);
    NormEstimate {
        value,
        method: NormMethod::ProbeSup,
        probes,
        iterations: 0,
        confidence_note: "lower bound from random probes".into(),
    }
}

/// Deterministic parallel maximum of `f` over `probes` seeded random vectors
/// of length `len`; probe `k` uses the stream `seed, k`.
pub fn probe_max<F>(len: usize, probes: usize, seed: u64, f: F) -> f64
where
    F: Fn(&DVector<Complex64>) -> f64 + Sync,
{
    (0..probes)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            f(&random_vector(len, &mut rng))
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max)
}

/// Operator-norm estimate of a square matrix.
pub fn operator_norm(
    m: &DMatrix<Complex64>,
    method: NormMethod,
    probes: usize,
    seed: u64,
) -> Result<NormEstimate> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() > crate::frame::DENSE_LIMIT {
        return Err(Error::SizeGuard {
            dim: m.nrows(),
            limit: crate::frame::DENSE_LIMIT,
        });
    }
    Ok(match method {
        NormMethod::SingularValue => spectral_norm(m),
        NormMethod::ProbeSup => probe_sup(m, probes, seed),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModerateAudit {
    pub c_best: f64,
    /// Running maximum of the sampled constant at each radius.
    pub radius_curve: Vec<(f64, f64)>,
    /// Log-log slope of the running maximum against radius.
    pub growth_slope: f64,
    pub pass: bool,
}

/// Radii of the moderateness sweep.
pub const MODERATE_RADII: [f64; 6] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
/// Growth slope above which the sampled constant is judged unbounded.
pub const MODERATE_GROWTH_LIMIT: f64 = 0.05;

/// Samples `m(z + w) / (v(z) m(w))` over growing radii. The weight pair
/// passes when the running maximum stops growing with the radius.
pub fn moderate_audit(m: &Weight, v: &Weight, samples: usize, seed: u64) -> ModerateAudit {
    let per = (samples / MODERATE_RADII.len()).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratio = |z: &PhasePoint, w: &PhasePoint| m.eval(&z.add(w)) / (v.eval(z) * m.eval(w));
    let mut best: f64 = 0.0;
    let mut curve = Vec::with_capacity(MODERATE_RADII.len());
    for &r in &MODERATE_RADII {
        // structured probes along an axis, then random pairs in the box
        for (a, b) in [(r, 0.0), (r, r), (r, -r), (0.5 * r, 0.5 * r)] {
            best = best.max(ratio(&PhasePoint::new1(a, 0.0), &PhasePoint::new1(b, 0.0)));
            best = best.max(ratio(&PhasePoint::new1(0.0, a), &PhasePoint::new1(0.0, b)));
        }
        for _ in 0..per {
            let z = PhasePoint::new1(rng.gen_range(-r..=r), rng.gen_range(-r..=r));
            let w = PhasePoint::new1(rng.gen_range(-r..=r), rng.gen_range(-r..=r));
            best = best.max(ratio(&z, &w));
        }
        curve.push((r, best));
    }
    let growth_slope = loglog_fit(&curve).map(|f| f.slope).unwrap_or(f64::INFINITY);
    let pass = best.is_finite() && growth_slope <= MODERATE_GROWTH_LIMIT;
    ModerateAudit {
        c_best: best,
        radius_curve: curve,
        growth_slope,
        pass,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub threads: usize,
}

/// The JSON document written by every run.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config: serde_json::Value,
    pub slopes: BTreeMap<String, serde_json::Value>,
    pub norms: BTreeMap<String, serde_json::Value>,
    pub verdicts: BTreeMap<String, Verdict>,
    pub provenance: Provenance,
}

impl Report {
    pub fn new(config: serde_json::Value, provenance: Provenance) -> Self {
        Self {
            config,
            slopes: BTreeMap::new(),
            norms: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            provenance,
        }
    }

    pub fn slope(&mut self, key: &str, value: impl Serialize) {
        self.slopes.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
    }

    pub fn norm(&mut self, key: &str, value: impl Serialize) {
        self.norms.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
    }

    pub fn verdict(&mut self, key: &str, pass: bool, detail: impl Into<String>) {
        self.verdicts.insert(
            key.to_string(),
            Verdict {
                pass,
                detail: detail.into(),
            },
        );
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.values().all(|v| v.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
