//! Tame phase functions in d = 1 and their audit.

use std::f64::consts::PI;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

/// A real phase `Phi(x, eta)` with analytic first derivatives and mixed
/// Hessian, together with its declared tameness constants.
pub trait TamePhase: Debug + Send + Sync {
    fn eval(&self, x: f64, eta: f64) -> f64;
    fn grad_x(&self, x: f64, eta: f64) -> f64;
    fn grad_eta(&self, x: f64, eta: f64) -> f64;
    /// `d^2 Phi / dx deta`.
    fn mixed_hessian(&self, x: f64, eta: f64) -> f64;
    /// Lower bound for `|det d^2_{x,eta} Phi|`.
    fn declared_delta(&self) -> f64;
    /// Bound for derivatives of order 2 and 3.
    fn declared_deriv_bound(&self) -> f64;
    fn name(&self) -> String;
}

/// Phases shipped with the library.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuiltinPhase {
    /// `x eta`.
    Linear,
    /// `s x eta`, the dilation `f(x) -> f(s x)`.
    Dilation { s: f64 },
    /// `x eta + (c/2) eta^2`.
    Chirp { c: f64 },
    /// `x eta + eps sin(x) sin(eta)`, tame for `|eps| < 1`.
    Perturbed { eps: f64 },
}

impl BuiltinPhase {
    /// Checks parameter ranges; returns a description of the problem.
    pub fn validate(&self) -> std::result::Result<(), String> {
        match *self {
            BuiltinPhase::Linear => Ok(()),
            BuiltinPhase::Dilation { s } if !(s > 0.0) || !s.is_finite() => {
                Err(format!("dilation factor must be positive, got {s}"))
            }
            BuiltinPhase::Chirp { c } if !c.is_finite() => Err("chirp rate must be finite".into()),
            BuiltinPhase::Perturbed { eps } if !(eps.abs() < 1.0) => {
                Err(format!("perturbation must satisfy |eps| < 1, got {eps}"))
            }
            _ => Ok(()),
        }
    }
}

impl TamePhase for BuiltinPhase {
    fn eval(&self, x: f64, eta: f64) -> f64 {
        match *self {
            BuiltinPhase::Linear => x * eta,
            BuiltinPhase::Dilation { s } => s * x * eta,
            BuiltinPhase::Chirp { c } => x * eta + 0.5 * c * eta * eta,
            BuiltinPhase::Perturbed { eps } => x * eta + eps * x.sin() * eta.sin(),
        }
    }

    fn grad_x(&self, x: f64, eta: f64) -> f64 {
        match *self {
            BuiltinPhase::Linear | BuiltinPhase::Chirp { .. } => eta,
            BuiltinPhase::Dilation { s } => s * eta,
            BuiltinPhase::Perturbed { eps } => eta + eps * x.cos() * eta.sin(),
        }
    }

    fn grad_eta(&self, x: f64, eta: f64) -> f64 {
        match *self {
            BuiltinPhase::Linear => x,
            BuiltinPhase::Dilation { s } => s * x,
            BuiltinPhase::Chirp { c } => x + c * eta,
            BuiltinPhase::Perturbed { eps } => x + eps * x.sin() * eta.cos(),
        }
    }

    fn mixed_hessian(&self, x: f64, eta: f64) -> f64 {
        match *self {
            BuiltinPhase::Linear | BuiltinPhase::Chirp { .. } => 1.0,
            BuiltinPhase::Dilation { s } => s,
            BuiltinPhase::Perturbed { eps } => 1.0 + eps * x.cos() * eta.cos(),
        }
    }

    fn declared_delta(&self) -> f64 {
        match *self {
            BuiltinPhase::Linear | BuiltinPhase::Chirp { .. } => 1.0,
            BuiltinPhase::Dilation { s } => s,
            BuiltinPhase::Perturbed { eps } => 1.0 - eps.abs(),
        }
    }

    fn declared_deriv_bound(&self) -> f64 {
        match *self {
            BuiltinPhase::Linear => 1.0,
            BuiltinPhase::Dilation { s } => s.abs(),
            BuiltinPhase::Chirp { c } => c.abs().max(1.0),
            BuiltinPhase::Perturbed { eps } => 1.0 + eps.abs(),
        }
    }

    fn name(&self) -> String {
        match *self {
            BuiltinPhase::Linear => "linear".into(),
            BuiltinPhase::Dilation { s } => format!("dilation(s={s})"),
            BuiltinPhase::Chirp { c } => format!("chirp(c={c})"),
            BuiltinPhase::Perturbed { eps } => format!("perturbed(eps={eps})"),
        }
    }
}

/// `e^{2 pi i Phi(x, eta)}`.
pub fn phase_factor(phase: &dyn TamePhase, x: f64, eta: f64) -> num_complex::Complex64 {
    num_complex::Complex64::from_polar(1.0, 2.0 * PI * phase.eval(x, eta))
}

#[derive(Debug, Clone, Serialize)]
pub struct TamenessReport {
    pub samples: usize,
    pub min_det: f64,
    /// Largest sampled second derivative (finite differences of the gradients).
    pub max_second: f64,
    /// Largest sampled third derivative (second differences of the gradients).
    pub max_third: f64,
    /// Largest relative mismatch between analytic gradients and central
    /// differences of `Phi` at step `1e-5`.
    pub gradient_error: f64,
    pub pass: bool,
}

/// Samples a `k x k` tensor grid over `[-half_width, half_width]^2` with
/// `k = ceil(sqrt(samples))` and checks the declared tameness constants.
pub fn tameness_audit(phase: &dyn TamePhase, half_width: f64, samples: usize) -> TamenessReport {
    let k = (samples as f64).sqrt().ceil().max(2.0) as usize;
    let pts: Vec<f64> = (0..k)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (k - 1) as f64)
        .collect();
    let (h1, h2) = (1e-5, 1e-3);
    let mut min_det = f64::INFINITY;
    let mut max_second: f64 = 0.0;
    let mut max_third: f64 = 0.0;
    let mut gradient_error: f64 = 0.0;
    for &x in &pts {
        for &e in &pts {
            min_det = min_det.min(phase.mixed_hessian(x, e).abs());

            let fx = (phase.eval(x + h1, e) - phase.eval(x - h1, e)) / (2.0 * h1);
            let fe = (phase.eval(x, e + h1) - phase.eval(x, e - h1)) / (2.0 * h1);
            let gx = phase.grad_x(x, e);
            let ge = phase.grad_eta(x, e);
            gradient_error = gradient_error
                .max((fx - gx).abs() / gx.abs().max(1.0))
                .max((fe - ge).abs() / ge.abs().max(1.0));

            let dxx = (phase.grad_x(x + h2, e) - phase.grad_x(x - h2, e)) / (2.0 * h2);
            let dxe = (phase.grad_x(x, e + h2) - phase.grad_x(x, e - h2)) / (2.0 * h2);
            let dee = (phase.grad_eta(x, e + h2) - phase.grad_eta(x, e - h2)) / (2.0 * h2);
            max_second = max_second.max(dxx.abs()).max(dxe.abs()).max(dee.abs());

            let second = |f: &dyn Fn(f64, f64) -> f64, dx: f64, de: f64| {
                (f(x + dx, e + de) - 2.0 * f(x, e) + f(x - dx, e - de)) / (h2 * h2)
            };
            let gxf = |a: f64, b: f64| phase.grad_x(a, b);
            let gef = |a: f64, b: f64| phase.grad_eta(a, b);
            let t = [
                second(&gxf, h2, 0.0),
                second(&gxf, 0.0, h2),
                second(&gef, h2, 0.0),
                second(&gef, 0.0, h2),
            ];
            max_third = t.iter().fold(max_third, |m, v| m.max(v.abs()));
        }
    }
    let bound = phase.declared_deriv_bound() * (1.0 + 1e-4) + 1e-4;
    let pass = min_det >= phase.declared_delta() * (1.0 - 1e-12)
        && max_second <= bound
        && max_third <= bound
        && gradient_error < 1e-6;
    TamenessReport {
        samples: k * k,
        min_det,
        max_second,
        max_third,
        gradient_error,
        pass,
    }
}
