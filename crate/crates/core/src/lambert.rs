//! Principal branch of the Lambert W function on the non-negative reals.
//!
//! `W0(y)` is the unique `w >= 0` with `w e^w = y`. Halley's method is used
//! throughout: on `w e^w - y` below `y = e`, and on the better conditioned
//! `w + ln w - ln y` above it, which also avoids overflowing `e^w` for huge
//! arguments. [`lambert_w0_exp`] evaluates `W0(e^t)` for arguments that do
//! not fit in an `f64`.

use crate::error::{bail, Error, Result};
use crate::math;

const MAX_ITERATIONS: u32 = 50;

/// Outcome of one W0 evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WEvalReport {
    pub argument: f64,
    pub value: f64,
    pub iterations: u32,
    /// `value * exp(value) - argument`.
    pub residual: f64,
}

/// `W0(y)` for `y >= 0`.
pub fn lambert_w0(y: f64) -> Result<f64> {
    lambert_w0_report(y).map(|r| r.value)
}

pub fn lambert_w0_report(y: f64) -> Result<WEvalReport> {
    if y.is_nan() || y < 0.0 {
        bail!(Domain, "lambert_w0 is defined here only for y >= 0, got {y}");
    }
    if y.is_infinite() {
        bail!(Domain, "lambert_w0 argument is infinite");
    }
    if y == 0.0 {
        return Ok(WEvalReport { argument: 0.0, value: 0.0, iterations: 0, residual: 0.0 });
    }
    let (value, iterations) = if y < core::f64::consts::E { halley_direct(y)? } else { halley_log(math::ln(y))? };
    Ok(WEvalReport { argument: y, value, iterations, residual: value * math::exp(value) - y })
}

/// `W0(e^t)` for any finite `t`.
pub fn lambert_w0_exp(t: f64) -> Result<f64> {
    if !t.is_finite() {
        bail!(Domain, "lambert_w0_exp needs a finite exponent, got {t}");
    }
    if t >= 1.0 {
        Ok(halley_log(t)?.0)
    } else if t < -745.0 {
        // e^t underflows; W0(y) = y + O(y^2)
        Ok(0.0)
    } else {
        Ok(halley_direct(math::exp(t))?.0)
    }
}

fn initial_guess(y: f64) -> f64 {
    if y < 1.0 {
        y
    } else if y >= core::f64::consts::E {
        let l = math::ln(y);
        l - math::ln(l)
    } else {
        // both neighbouring guesses equal 1 at the ends of [1, e)
        1.0
    }
}

/// Halley on `f(w) = w e^w - y`, for `0 < y < e`.
fn halley_direct(y: f64) -> Result<(f64, u32)> {
    let mut w = initial_guess(y);
    for it in 1..=MAX_ITERATIONS {
        let ew = math::exp(w);
        let f = w * ew - y;
        if f == 0.0 {
            return Ok((w, it));
        }
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs() || w == 0.0 {
            return Ok((w, it));
        }
    }
    Err(non_convergence(y))
}

/// Halley on `g(w) = w + ln w - t`, for `t = ln y >= 1`.
fn halley_log(t: f64) -> Result<(f64, u32)> {
    let mut w = if t < 1.0 { 1.0 } else { t - math::ln(t) };
    if w <= 0.0 {
        w = 1.0;
    }
    for it in 1..=MAX_ITERATIONS {
        let g = w + math::ln(w) - t;
        if g == 0.0 {
            return Ok((w, it));
        }
        let g1 = 1.0 + 1.0 / w;
        let g2 = -1.0 / (w * w);
        let step = g / (g1 - g * g2 / (2.0 * g1));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w {
            return Ok((w, it));
        }
    }
    Err(non_convergence(math::exp(t)))
}

fn non_convergence(y: f64) -> Error {
    Error::Internal(alloc::format!("lambert_w0({y:e}) did not converge in {MAX_ITERATIONS} iterations"))
}
