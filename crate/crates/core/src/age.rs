//! Closed-form average age for the four encoding policies.
//!
//! Every evaluator takes precomputed moments, not pmfs, so the same code
//! scores solver output, Shannon baselines and grid-search candidates.
//!
//! With update cycle `Y = S + W` (service then waiting), `S` independent of
//! the previous cycle, the long-run average age is
//! `E[Y^2] / (2 E[Y]) + E[S]`.

use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::math;
use crate::pmf::{check_rate, Pmf};

/// First and second moments of the codeword length (bits, bits^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthMoments {
    pub mean: f64,
    pub second: f64,
}

impl LengthMoments {
    pub fn new(mean: f64, second: f64) -> Result<Self> {
        if !(mean.is_finite() && second.is_finite()) || mean < 0.0 || second < 0.0 {
            bail!(Domain, "length moments must be finite and >= 0 (mean={mean}, second={second})");
        }
        // Jensen, with rounding slack
        if second < mean * mean * (1.0 - 1e-12) {
            bail!(Domain, "second moment {second} below squared mean {}", mean * mean);
        }
        Ok(Self { mean, second })
    }

    /// Moments of `lengths` under `pmf`.
    pub fn from_lengths(pmf: &Pmf, lengths: &[f64]) -> Result<Self> {
        if pmf.len() != lengths.len() {
            bail!(InvalidParameter, "{} lengths for a pmf with {} entries", lengths.len(), pmf.len());
        }
        Ok(Self::from_parts(pmf.probs(), lengths))
    }

    pub(crate) fn from_parts(probs: &[f64], lengths: &[f64]) -> Self {
        let mean = math::sum(probs.iter().zip(lengths).map(|(p, l)| p * l));
        let second = math::sum(probs.iter().zip(lengths).map(|(p, l)| p * l * l));
        Self { mean, second }
    }

    pub const ZERO: Self = Self { mean: 0.0, second: 0.0 };
}

/// Moments of the waiting time `W` between a delivery and the next
/// successful arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaitingMoments {
    pub mean: f64,
    pub second: f64,
}

impl WaitingMoments {
    pub fn new(mean: f64, second: f64) -> Result<Self> {
        if !(mean.is_finite() && second.is_finite()) || mean <= 0.0 || second <= 0.0 {
            bail!(Domain, "waiting moments must be finite and > 0 (mean={mean}, second={second})");
        }
        if second < mean * mean * (1.0 - 1e-12) {
            bail!(Domain, "second moment {second} below squared mean {}", mean * mean);
        }
        Ok(Self { mean, second })
    }

    /// Exponential waiting with the given rate: `(1/r, 2/r^2)`.
    pub fn exponential(rate: f64) -> Result<Self> {
        check_rate(rate)?;
        let a = 1.0 / rate;
        Ok(Self { mean: a, second: 2.0 * a * a })
    }
}

/// Moments of the update cycle `Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleMoments {
    pub mean: f64,
    pub second: f64,
}

fn check_mass(q: f64) -> Result<()> {
    if !(q > 0.0 && q <= 1.0) {
        bail!(Domain, "success probability must lie in (0, 1], got {q}");
    }
    Ok(())
}

/// `(E[M], E[M^2])` for `M ~ Geometric(q)` on `{1, 2, ..}`.
pub fn geometric_moments(q: f64) -> Result<(f64, f64)> {
    check_mass(q)?;
    Ok((1.0 / q, (2.0 - q) / (q * q)))
}

/// Cycle moments when `W` is a sum of `M ~ Geometric(q)` interarrivals
/// `Z ~ Exp(lambda)`, independent of the service length `L`.
pub fn cycle_moments(lm: LengthMoments, q: f64, lambda: f64) -> Result<CycleMoments> {
    check_rate(lambda)?;
    let (m1, m2) = geometric_moments(q)?;
    let z1 = 1.0 / lambda;
    let z2 = 2.0 / (lambda * lambda);
    Ok(CycleMoments {
        mean: lm.mean + m1 * z1,
        second: lm.second + 2.0 * m1 * z1 * lm.mean + m1 * z2 + (m2 - m1) * z1 * z1,
    })
}

/// Average age from cycle moments and mean service.
pub fn age_from_cycle(cm: CycleMoments, service_mean: f64) -> f64 {
    cm.second / (2.0 * cm.mean) + service_mean
}

/// Average age for independent service `S` (moments `lm`) and waiting `W`.
pub fn age_from_waiting(lm: LengthMoments, wm: WaitingMoments) -> f64 {
    (lm.second + 2.0 * wm.mean * lm.mean + wm.second) / (2.0 * (lm.mean + wm.mean)) + lm.mean
}

/// Highest-k selective encoding. `lm` is taken under the top-k conditional
/// pmf and `q_k` is the encoded mass.
pub fn age_policy1(lm: LengthMoments, q_k: f64, lambda: f64) -> Result<f64> {
    check_mass(q_k)?;
    check_rate(lambda)?;
    Ok(policy1_form(lm, 1.0 / (lambda * q_k)))
}

/// `(E[L^2] + 2a E[L] + 2a^2) / (2(E[L] + a)) + E[L]`.
fn policy1_form(lm: LengthMoments, a: f64) -> f64 {
    (lm.second + 2.0 * a * lm.mean + 2.0 * a * a) / (2.0 * (lm.mean + a)) + lm.mean
}

/// Randomized selective encoding; `q_k_alpha = q_k + alpha (1 - q_k)` and
/// `lm` is taken under the randomized conditional pmf.
pub fn age_policy2(lm: LengthMoments, q_k_alpha: f64, lambda: f64) -> Result<f64> {
    check_mass(q_k_alpha)?;
    check_rate(lambda)?;
    let a_bar = 1.0 / (lambda * q_k_alpha);
    Ok(policy1_form(lm, a_bar))
}

/// Waiting time when tail realizations are answered with an empty symbol
/// of length `c` that does not reset the age:
/// `W = (M - 1) c + sum_{1..M} Z`.
pub fn waiting_moments_empty(q_k: f64, lambda: f64, c: f64) -> Result<WaitingMoments> {
    check_mass(q_k)?;
    check_rate(lambda)?;
    if !(c.is_finite() && c >= 0.0) {
        bail!(Domain, "empty-symbol length must be finite and >= 0, got {c}");
    }
    let q = q_k;
    let mean = c * (1.0 / q - 1.0) + 1.0 / (lambda * q);
    let second = (2.0 - q) * (1.0 - q) / (q * q) * c * c
        + 4.0 * (1.0 - q) / (lambda * q * q) * c
        + 2.0 / ((lambda * q) * (lambda * q));
    Ok(WaitingMoments { mean, second })
}

/// Empty symbol that does not reset the age. `lm_cond` is conditional on a
/// non-empty delivery.
pub fn age_policy3_noreset(lm_cond: LengthMoments, wm: WaitingMoments) -> f64 {
    age_from_waiting(lm_cond, wm)
}

/// Empty symbol that resets the age. `lm_full` is taken over the `k + 1`
/// symbol pmf including the empty symbol.
pub fn age_policy3_reset(lm_full: LengthMoments, lambda: f64) -> Result<f64> {
    check_rate(lambda)?;
    let l1 = lm_full.mean;
    let inv = 1.0 / lambda;
    Ok((lm_full.second + 2.0 * inv * l1 + 2.0 * inv * inv) / (2.0 * (l1 + inv)) + l1)
}

/// Shannon lengths `-log2(budget * P_i)`, which meet a Kraft budget with
/// equality.
pub fn shannon_lengths(pmf: &Pmf, budget: f64) -> Vec<f64> {
    pmf.probs().iter().map(|&p| -math::log2(budget * p)).collect()
}
