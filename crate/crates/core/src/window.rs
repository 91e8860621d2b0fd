//! Built-in analysis windows. All constructors return unit-norm signals; in
//! d = 2 the window is the tensor product of the 1-D profile.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::signal::Signal;

fn separable(grid: Grid, profile: impl Fn(f64) -> f64) -> Result<Signal> {
    let s = Signal::from_fn(grid, |x| {
        Complex64::new(x.iter().map(|&c| profile(c)).product(), 0.0)
    });
    s.normalized()
}

/// `e^{-pi (x/width)^2}`, unit norm.
pub fn gaussian(grid: Grid, width: f64) -> Result<Signal> {
    if !(width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gaussian width must be positive, got {width}"
        )));
    }
    separable(grid, |x| {
        (-std::f64::consts::PI * (x / width).powi(2)).exp()
    })
}

/// Centered cardinal B-spline of the given order (order 1 is the box of unit
/// width), dilated by `width`, unit norm.
pub fn bspline(grid: Grid, order: usize, width: f64) -> Result<Signal> {
    if order == 0 {
        return Err(Error::InvalidArgument(
            "B-spline order must be at least 1".into(),
        ));
    }
    if !(width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "B-spline width must be positive, got {width}"
        )));
    }
    separable(grid, |x| cardinal_bspline(order, x / width))
}

/// Indicator of `[-half_width, half_width]`, unit norm.
pub fn box_window(grid: Grid, half_width: f64) -> Result<Signal> {
    if !(half_width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "box half width must be positive, got {half_width}"
        )));
    }
    separable(grid, |x| {
        if x.abs() <= half_width + 1e-12 {
            1.0
        } else {
            0.0
        }
    })
}

/// Centered cardinal B-spline `B_m(x)`, supported on `[-m/2, m/2]`.
pub fn cardinal_bspline(m: usize, x: f64) -> f64 {
    // B_m(x) = 1/(m-1)! sum_k (-1)^k C(m,k) (x + m/2 - k)_+^{m-1}
    if m == 1 {
        return if x.abs() <= 0.5 { 1.0 } else { 0.0 };
    }
    let t = x + m as f64 / 2.0;
    if t <= 0.0 || t >= m as f64 {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut binom = 1.0;
    let mut fact = 1.0;
    for k in 1..m {
        fact *= k as f64;
    }
    for k in 0..=m {
        let u = t - k as f64;
        if u > 0.0 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * u.powi(m as i32 - 1);
        }
        binom = binom * (m - k) as f64 / (k + 1) as f64;
    }
    acc / fact
}
