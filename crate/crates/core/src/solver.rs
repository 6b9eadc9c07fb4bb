//! Age-optimal real codeword lengths.
//!
//! Every policy reduces to one problem: minimize
//! `(E[L^2] + 2 w1 E[L] + w2) / (2 (E[L] + w1)) + E[L]` over lengths with
//! `sum 2^-l_i <= B`, where `(w1, w2)` are the waiting-time moments and `B`
//! the Kraft budget (1, or `1 - 2^-c` when an empty codeword of length `c`
//! is reserved). The ratio is handled with the parametric transform
//!
//! ```text
//! p(theta) = min_l  E[L^2]/2 + E[L]^2 + (2 w1 - theta) E[L] + w2/2 - theta w1
//! ```
//!
//! which is decreasing in `theta` and vanishes at the optimal age. For a
//! fixed `theta` the minimizer meets the Kraft budget with equality and has
//! the stationary form
//!
//! ```text
//! l_i = W0( (beta ln^2 2 / P_i) 2^R ) / ln 2 - R,   R = (2 beta B ln 2 + 2 w1 - theta) / 3
//! ```
//!
//! so the inner problem is a scalar root-find for the multiplier `beta` on
//! the Kraft sum. The outer loop brackets `theta` between the entropy bound
//! and the age of the Shannon code and steps with the age of the current
//! lengths whenever `p(theta) <= 0`, bisecting otherwise.

use alloc::vec::Vec;

use crate::age::{LengthMoments, WaitingMoments};
use crate::error::{bail, Error, Result};
use crate::lambert::lambert_w0_exp;
use crate::math::{self, LN2};
use crate::pmf::{check_rate, Pmf};
use crate::policy::{check_empty_len, Policy, PolicyConfig};

/// Iteration caps and tolerances for [`solve_fractional`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Stop once `|p(theta)| <= theta_tolerance * max(1, theta^2)`.
    pub theta_tolerance: f64,
    /// Required `|sum 2^-l_i - B|` at the returned lengths.
    pub kraft_tolerance: f64,
    pub max_outer_iterations: usize,
    pub max_inner_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { theta_tolerance: 1e-12, kraft_tolerance: 1e-10, max_outer_iterations: 200, max_inner_iterations: 200 }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_tolerance > 0.0 && self.kraft_tolerance > 0.0) {
            bail!(InvalidParameter, "solver tolerances must be > 0");
        }
        if self.max_outer_iterations == 0 || self.max_inner_iterations == 0 {
            bail!(InvalidParameter, "solver iteration caps must be >= 1");
        }
        Ok(())
    }
}

/// Absolute bound on `|p(theta)|` at which a solve is accepted even when the
/// bracket collapses before reaching `theta_tolerance`.
pub const ACCEPT_P_THETA: f64 = 1e-9;

/// Optimal codebook for one policy configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookSolution {
    /// One length per codeword of `encoding_pmf`; for the resetting empty
    /// symbol policy the empty codeword is last.
    pub lengths: Vec<f64>,
    /// Optimal average age.
    pub theta: f64,
    /// Kraft multiplier. Zero only when the unconstrained stationary point
    /// (all lengths `(theta - 2 E[W]) / 3`) already fits in the budget, which
    /// can happen for a long non-resetting empty symbol with a heavy-tailed
    /// waiting time.
    pub beta: f64,
    /// Length moments under `encoding_pmf`.
    pub moments: LengthMoments,
    /// `|sum 2^-l_i - kraft_budget|` when the Kraft constraint is active
    /// (`beta > 0`), otherwise any excess of the sum over the budget.
    pub kraft_residual: f64,
    /// `kraft_budget - sum 2^-l_i`; zero up to rounding unless `beta == 0`.
    pub kraft_slack: f64,
    /// `|p(theta)|` at the returned lengths.
    pub p_theta_residual: f64,
    /// Outer iterations used.
    pub iterations: usize,
    /// Inner (multiplier) iterations summed over the outer loop.
    pub inner_iterations: usize,
    pub encoding_pmf: Pmf,
    pub waiting: WaitingMoments,
    pub kraft_budget: f64,
    /// Fixed empty-symbol length for the non-resetting empty policy.
    pub empty_length: Option<f64>,
}

impl CodebookSolution {
    pub fn kraft_sum(&self) -> f64 {
        math::sum(self.lengths.iter().map(|&l| math::exp2(-l)))
    }

    /// Per-coordinate stationarity residuals
    /// `P l + 2 E[L] P + (2 w1 - theta) P - beta ln2 2^-l`.
    pub fn kkt_residuals(&self) -> Vec<f64> {
        kkt_residuals(&self.encoding_pmf, &self.lengths, self.theta, self.beta, self.waiting.mean)
    }
}

pub fn kkt_residuals(pmf: &Pmf, lengths: &[f64], theta: f64, beta: f64, a: f64) -> Vec<f64> {
    let el = LengthMoments::from_parts(pmf.probs(), lengths).mean;
    pmf.probs()
        .iter()
        .zip(lengths)
        .map(|(&p, &l)| p * l + 2.0 * el * p + (2.0 * a - theta) * p - beta * LN2 * math::exp2(-l))
        .collect()
}

/// `p(theta)` evaluated at given lengths for highest-k style waiting with
/// mean `a` (so `E[W^2] = 2 a^2`).
pub fn p_theta(lengths: &[f64], cond_pmf: &Pmf, theta: f64, a: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        bail!(InvalidParameter, "waiting mean must be > 0, got {a}");
    }
    p_theta_with_waiting(lengths, cond_pmf, theta, WaitingMoments { mean: a, second: 2.0 * a * a })
}

/// `p(theta)` at given lengths for arbitrary waiting moments.
pub fn p_theta_with_waiting(lengths: &[f64], cond_pmf: &Pmf, theta: f64, wait: WaitingMoments) -> Result<f64> {
    let lm = LengthMoments::from_lengths(cond_pmf, lengths)?;
    Ok(p_value(lm, theta, wait))
}

fn p_value(lm: LengthMoments, theta: f64, wait: WaitingMoments) -> f64 {
    0.5 * lm.second + lm.mean * lm.mean + (2.0 * wait.mean - theta) * lm.mean + 0.5 * wait.second - theta * wait.mean
}

fn ratio_value(lm: LengthMoments, wait: WaitingMoments) -> f64 {
    crate::age::age_from_waiting(lm, wait)
}

/// Stationary lengths for multiplier `beta` with Kraft budget 1.
pub fn lengths_from_theta_beta(cond_pmf: &Pmf, theta: f64, beta: f64, a: f64) -> Result<Vec<f64>> {
    lengths_for_multiplier(cond_pmf, theta, beta, a, 1.0)
}

/// Stationary lengths for multiplier `beta`, waiting mean `a` and Kraft
/// budget `budget`.
pub fn lengths_for_multiplier(cond_pmf: &Pmf, theta: f64, beta: f64, a: f64, budget: f64) -> Result<Vec<f64>> {
    cond_pmf.check_encodable()?;
    if !(beta > 0.0 && beta.is_finite()) {
        bail!(Domain, "multiplier must be finite and > 0, got {beta}");
    }
    let ln_beta = math::ln(beta);
    let mut out = Vec::with_capacity(cond_pmf.len());
    let r = exponent(theta, beta, a, budget);
    for &p in cond_pmf.probs() {
        out.push(stationary_length(ln_beta, r, p)?.0);
    }
    Ok(out)
}

/// `R = (2 beta B ln2 + 2a - theta) / 3`.
#[inline]
fn exponent(theta: f64, beta: f64, a: f64, budget: f64) -> f64 {
    (2.0 * beta * budget * LN2 + 2.0 * a - theta) / 3.0
}

/// `(l, W)` for one symbol; `l = W / ln2 - R` with
/// `W = W0(exp(ln(beta ln^2 2 / p) + R ln 2))`.
#[inline]
fn stationary_length(ln_beta: f64, r: f64, p: f64) -> Result<(f64, f64)> {
    let t = ln_beta + 2.0 * math::ln(LN2) - math::ln(p) + r * LN2;
    let w = lambert_w0_exp(t)?;
    Ok((w / LN2 - r, w))
}

/// The scalar problem behind every policy.
struct Problem<'a> {
    probs: &'a [f64],
    wait: WaitingMoments,
    budget: f64,
    settings: &'a SolverSettings,
}

/// Minimizer of the inner problem at a fixed `theta`.
struct InnerSolution {
    lengths: Vec<f64>,
    beta: f64,
    moments: LengthMoments,
    kraft_sum: f64,
    iterations: usize,
}

impl Problem<'_> {
    fn k(&self) -> usize {
        self.probs.len()
    }

    /// Kraft sum and its derivative with respect to `ln beta`.
    fn kraft(&self, theta: f64, ln_beta: f64, lengths: &mut Vec<f64>) -> Result<(f64, f64)> {
        let beta = math::exp(ln_beta);
        let r = exponent(theta, beta, self.wait.mean, self.budget);
        lengths.clear();
        let mut s = 0.0;
        let mut ds = 0.0;
        for &p in self.probs {
            let (l, w) = stationary_length(ln_beta, r, p)?;
            let x = math::exp2(-l);
            // dl/dbeta from differentiating the stationarity relation
            let dl = (w / (beta * LN2) - 2.0 * LN2 * self.budget / 3.0) / (1.0 + w);
            s += x;
            ds -= LN2 * x * dl * beta;
            lengths.push(l);
        }
        Ok((s, ds))
    }

    /// Solves the inner problem at `theta`, starting the multiplier search
    /// from `beta_hint`.
    fn inner(&self, theta: f64, beta_hint: f64) -> Result<InnerSolution> {
        let k = self.k() as f64;
        let a = self.wait.mean;
        // With beta = 0 all lengths equal (theta - 2a)/3; that point is the
        // minimizer whenever it already satisfies the Kraft budget.
        let flat = (theta - 2.0 * a) / 3.0;
        if math::ln(k) - flat * LN2 <= math::ln(self.budget) {
            let lengths = alloc::vec![flat; self.k()];
            let moments = LengthMoments::from_parts(self.probs, &lengths);
            return Ok(InnerSolution { kraft_sum: k * math::exp2(-flat), lengths, beta: 0.0, moments, iterations: 0 });
        }

        let target = self.budget;
        let max_it = self.settings.max_inner_iterations;
        let mut buf = Vec::with_capacity(self.k());
        let calls = core::cell::Cell::new(0usize);
        let eval = |u: f64, buf: &mut Vec<f64>| -> Result<(f64, f64)> {
            calls.set(calls.get() + 1);
            let (s, ds) = self.kraft(theta, u, buf)?;
            Ok((s - target, ds))
        };

        // Bracket the root of g(u) = S(e^u) - B, g decreasing in u.
        let u0 = math::ln(beta_hint.max(1e-12));
        let (g0, _) = eval(u0, &mut buf)?;
        let (mut lo, mut g_lo, mut hi, mut g_hi);
        if g0 > 0.0 {
            lo = u0;
            g_lo = g0;
            let mut step = 1.0;
            loop {
                let u = lo + step;
                let (g, _) = eval(u, &mut buf)?;
                if g > g_lo {
                    return Err(non_monotone(theta, u));
                }
                if g <= 0.0 {
                    hi = u;
                    g_hi = g;
                    break;
                }
                lo = u;
                g_lo = g;
                step *= 2.0;
                if step > 4096.0 {
                    return Err(inner_failure("no upper bracket for the Kraft multiplier", theta, g));
                }
            }
        } else {
            hi = u0;
            g_hi = g0;
            let mut step = 1.0;
            loop {
                let u = hi - step;
                let (g, _) = eval(u, &mut buf)?;
                if g < g_hi {
                    return Err(non_monotone(theta, u));
                }
                if g > 0.0 {
                    lo = u;
                    g_lo = g;
                    break;
                }
                hi = u;
                g_hi = g;
                step *= 2.0;
                if step > 4096.0 {
                    return Err(inner_failure("no lower bracket for the Kraft multiplier", theta, g));
                }
            }
        }

        // Newton in ln(beta), safeguarded by the bracket.
        let mut u = if g_lo - g_hi > 0.0 { lo + (hi - lo) * g_lo / (g_lo - g_hi) } else { 0.5 * (lo + hi) };
        let tol = 0.25 * self.settings.kraft_tolerance.min(1e-13);
        for _ in 0..max_it {
            let (g, dg) = eval(u, &mut buf)?;
            if g.abs() <= tol {
                let beta = math::exp(u);
                let moments = LengthMoments::from_parts(self.probs, &buf);
                return Ok(InnerSolution {
                    kraft_sum: g + target,
                    lengths: buf,
                    beta,
                    moments,
                    iterations: calls.get(),
                });
            }
            if g > 0.0 {
                lo = u;
            } else {
                hi = u;
            }
            let newton = if dg < 0.0 { u - g / dg } else { f64::NAN };
            u = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
                // bracket exhausted at f64 resolution
                let (g, _) = eval(u, &mut buf)?;
                let beta = math::exp(u);
                let moments = LengthMoments::from_parts(self.probs, &buf);
                return Ok(InnerSolution {
                    kraft_sum: g + target,
                    lengths: buf,
                    beta,
                    moments,
                    iterations: calls.get(),
                });
            }
        }
        Err(inner_failure("Kraft multiplier search hit the iteration cap", theta, f64::NAN))
    }

    fn solve(&self) -> Result<(InnerSolution, f64, f64, usize, usize)> {
        let settings = self.settings;
        let shannon: Vec<f64> = self.probs.iter().map(|&p| -math::log2(self.budget * p)).collect();
        let lm_sh = LengthMoments::from_parts(self.probs, &shannon);
        // Any feasible code has E[L] >= H + log2(1/B) and age > E[L].
        let mut lo = lm_sh.mean;
        let mut hi = ratio_value(lm_sh, self.wait);
        let mut theta = hi;
        let mut beta_hint = (3.0 * lm_sh.mean - theta + 2.0 * self.wait.mean) / (LN2 * self.budget);
        if !(beta_hint.is_finite() && beta_hint > 0.0) {
            beta_hint = 1.0;
        }
        let mut inner_total = 0usize;
        let mut last = None;
        for outer in 1..=settings.max_outer_iterations {
            let sol = self.inner(theta, beta_hint)?;
            inner_total += sol.iterations;
            if sol.beta > 0.0 {
                beta_hint = sol.beta;
            }
            let p = p_value(sol.moments, theta, self.wait);
            let scale = theta * theta;
            let scale = if scale > 1.0 { scale } else { 1.0 };
            if p.abs() <= settings.theta_tolerance * scale {
                return Ok((sol, theta, p, outer, inner_total));
            }
            let next;
            if p > 0.0 {
                lo = theta;
                next = 0.5 * (lo + hi);
            } else {
                hi = theta;
                let dinkelbach = ratio_value(sol.moments, self.wait);
                next = if dinkelbach > lo && dinkelbach < hi { dinkelbach } else { 0.5 * (lo + hi) };
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi.abs() || next == theta {
                if p.abs() <= ACCEPT_P_THETA * scale {
                    return Ok((sol, theta, p, outer, inner_total));
                }
                last = Some((p, sol.kraft_sum));
                break;
            }
            last = Some((p, sol.kraft_sum));
            theta = next;
        }
        let (p, s) = last.unwrap_or((f64::NAN, f64::NAN));
        Err(Error::SolverFailure {
            reason: alloc::format!("p(theta) did not reach zero; bracket [{lo}, {hi}]"),
            outer_iterations: settings.max_outer_iterations,
            p_theta_residual: p.abs(),
            kraft_residual: (s - self.budget).abs(),
        })
    }
}

fn non_monotone(theta: f64, ln_beta: f64) -> Error {
    Error::SolverFailure {
        reason: alloc::format!(
            "Kraft sum not monotone in the multiplier at theta={theta}, beta={:e}; multiple roots possible",
            math::exp(ln_beta)
        ),
        outer_iterations: 0,
        p_theta_residual: f64::NAN,
        kraft_residual: f64::NAN,
    }
}

fn inner_failure(reason: &str, theta: f64, g: f64) -> Error {
    Error::SolverFailure {
        reason: alloc::format!("{reason} (theta={theta})"),
        outer_iterations: 0,
        p_theta_residual: f64::NAN,
        kraft_residual: g.abs(),
    }
}

/// Minimizes the average age over lengths for encoding pmf `cond_pmf`,
/// waiting moments `wait` and Kraft budget `budget` in `(0, 1]`.
pub fn solve_fractional(
    cond_pmf: &Pmf,
    wait: WaitingMoments,
    budget: f64,
    settings: &SolverSettings,
) -> Result<CodebookSolution> {
    settings.validate()?;
    cond_pmf.check_encodable()?;
    if !(budget > 0.0 && budget <= 1.0) {
        bail!(InvalidParameter, "Kraft budget must lie in (0, 1], got {budget}");
    }
    let probs = cond_pmf.probs();

    if probs.len() == 1 {
        // A single codeword is pinned by Kraft equality: l = -log2 B.
        let mut l = if budget == 1.0 { 0.0 } else { -math::log2(budget) };
        let mut moments = LengthMoments { mean: l, second: l * l };
        let mut theta = ratio_value(moments, wait);
        let mut beta = (3.0 * l + 2.0 * wait.mean - theta) / (LN2 * budget);
        if beta < 0.0 {
            // the unconstrained stationary point is longer than the budget
            // forces, so the constraint is slack
            theta = -wait.mean + math::sqrt(3.0 * (wait.second - wait.mean * wait.mean));
            l = (theta - 2.0 * wait.mean) / 3.0;
            moments = LengthMoments { mean: l, second: l * l };
            beta = 0.0;
        }
        let lengths = alloc::vec![l];
        return Ok(CodebookSolution {
            kraft_residual: kraft_violation(math::exp2(-l), budget, beta),
            kraft_slack: budget - math::exp2(-l),
            p_theta_residual: p_value(moments, theta, wait).abs(),
            lengths,
            theta,
            beta,
            moments,
            iterations: 0,
            inner_iterations: 0,
            encoding_pmf: cond_pmf.clone(),
            waiting: wait,
            kraft_budget: budget,
            empty_length: None,
        });
    }

    let problem = Problem { probs, wait, budget, settings };
    let (sol, theta, p, outer, inner) = problem.solve()?;
    let kraft_residual = kraft_violation(sol.kraft_sum, budget, sol.beta);
    if kraft_residual > settings.kraft_tolerance {
        return Err(Error::SolverFailure {
            reason: alloc::format!("Kraft residual {kraft_residual:e} above tolerance"),
            outer_iterations: outer,
            p_theta_residual: p.abs(),
            kraft_residual,
        });
    }
    Ok(CodebookSolution {
        kraft_slack: budget - sol.kraft_sum,
        lengths: sol.lengths,
        theta,
        beta: sol.beta,
        moments: sol.moments,
        kraft_residual,
        p_theta_residual: p.abs(),
        iterations: outer,
        inner_iterations: inner,
        encoding_pmf: cond_pmf.clone(),
        waiting: wait,
        kraft_budget: budget,
        empty_length: None,
    })
}

/// Complementary-slackness violation: `|S - B|` when the multiplier is
/// positive, otherwise only the amount by which `S` exceeds `B`.
fn kraft_violation(kraft_sum: f64, budget: f64, beta: f64) -> f64 {
    if beta > 0.0 {
        (kraft_sum - budget).abs()
    } else {
        (kraft_sum - budget).max(0.0)
    }
}

/// Highest-k selective encoding: lengths for realizations `1..=k`.
pub fn solve_policy1(pmf: &Pmf, k: usize, lambda: f64, settings: &SolverSettings) -> Result<CodebookSolution> {
    let cfg = PolicyConfig::new(Policy::HighestK, k, lambda);
    solve_config(pmf, &cfg, settings)
}

/// Randomized selective encoding: lengths for all `n` realizations.
pub fn solve_policy2(
    pmf: &Pmf,
    k: usize,
    alpha: f64,
    lambda: f64,
    settings: &SolverSettings,
) -> Result<CodebookSolution> {
    let cfg = PolicyConfig::new(Policy::Randomized { alpha }, k, lambda);
    solve_config(pmf, &cfg, settings)
}

/// Empty symbol of fixed length `c` that does not reset the age: lengths
/// for realizations `1..=k` within the Kraft budget `1 - 2^-c`.
pub fn solve_policy3_noreset(
    pmf: &Pmf,
    k: usize,
    lambda: f64,
    c: f64,
    settings: &SolverSettings,
) -> Result<CodebookSolution> {
    check_empty_len(c)?;
    let cfg = PolicyConfig::new(Policy::EmptyNoReset { empty_len: c }, k, lambda);
    let mut sol = solve_config(pmf, &cfg, settings)?;
    sol.empty_length = Some(c);
    Ok(sol)
}

/// Empty symbol that resets the age: `k + 1` lengths, empty codeword last.
pub fn solve_policy3_reset(pmf: &Pmf, k: usize, lambda: f64, settings: &SolverSettings) -> Result<CodebookSolution> {
    let cfg = PolicyConfig::new(Policy::EmptyReset, k, lambda);
    solve_config(pmf, &cfg, settings)
}

fn solve_config(pmf: &Pmf, cfg: &PolicyConfig, settings: &SolverSettings) -> Result<CodebookSolution> {
    check_rate(cfg.lambda)?;
    cfg.validate(pmf.len())?;
    let enc = cfg.encoding_pmf(pmf)?;
    let wait = cfg.waiting_moments(pmf)?;
    solve_fractional(&enc, wait, cfg.kraft_budget(), settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::age;
    use alloc::vec;

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn p_theta_examples() {
        let pmf = Pmf::uniform(4).unwrap();
        assert_eq!(p_theta(&[0.0; 4], &pmf, 1.5, 1.5).unwrap(), 0.0);
        // 2 + 4 + (2 - theta) 2 + 1 - theta = 11 - 3 theta
        let theta = 11.0 / 3.0;
        assert!(p_theta(&[2.0; 4], &pmf, theta, 1.0).unwrap().abs() < 1e-14);
        let a = p_theta(&[2.0; 4], &pmf, 1.0, 1.0).unwrap();
        let b = p_theta(&[2.0; 4], &pmf, 2.0, 1.0).unwrap();
        assert!(a > b);
        assert!(p_theta(&[2.0; 3], &pmf, 1.0, 1.0).is_err());
    }

    #[test]
    fn stationary_lengths_structure() {
        let u = Pmf::uniform(5).unwrap();
        let l = lengths_from_theta_beta(&u, 4.0, 0.7, 1.0).unwrap();
        assert!(l.iter().all(|&x| x == l[0]));

        let z = Pmf::zipf(6, 0.8).unwrap();
        let l = lengths_from_theta_beta(&z, 3.0, 2.0, 0.5).unwrap();
        assert!(l.windows(2).all(|w| w[0] < w[1]));
        assert!(lengths_from_theta_beta(&z, 3.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn stationary_length_matches_scalar_root() {
        // P = 0.5, theta = 3, beta = 1, a = 1: solve
        // -l + (beta ln2 / P) 2^-l = (2 beta ln2 + 2a - theta) / 3 by bisection
        let (p, theta, beta, a) = (0.5f64, 3.0f64, 1.0f64, 1.0f64);
        let ln2 = core::f64::consts::LN_2;
        let rhs = (2.0 * beta * ln2 + 2.0 * a - theta) / 3.0;
        let f = |l: f64| -l + beta * ln2 / p * (-l * ln2).exp() - rhs;
        let (mut lo, mut hi) = (-10.0f64, 10.0f64);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if f(m) > 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let pmf = Pmf::new(vec![0.5, 0.5]).unwrap();
        let got = lengths_from_theta_beta(&pmf, theta, beta, a).unwrap()[0];
        assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
        assert!(f(got).abs() < 1e-9);
    }

    #[test]
    fn uniform_full_set_gives_two_bits() {
        let pmf = Pmf::uniform(4).unwrap();
        let sol = solve_policy1(&pmf, 4, 1.0, &settings()).unwrap();
        for l in &sol.lengths {
            assert!((l - 2.0).abs() < 1e-9, "{l}");
        }
        assert!((sol.theta - age::age_policy1(LengthMoments::new(2.0, 4.0).unwrap(), 1.0, 1.0).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn single_codeword_edge() {
        let pmf = Pmf::dyadic(10).unwrap();
        let sol = solve_policy1(&pmf, 1, 2.0, &settings()).unwrap();
        assert_eq!(sol.lengths, vec![0.0]);
        assert!((sol.theta - 1.0).abs() < 1e-15); // a = 1/(2 * 0.5)
        assert!(sol.kkt_residuals()[0].abs() < 1e-12);
        assert!(sol.beta > 0.0);
    }

    #[test]
    fn reset_two_equal_symbols() {
        let pmf = Pmf::dyadic(3).unwrap();
        let sol = solve_policy3_reset(&pmf, 1, 1.0, &settings()).unwrap();
        assert_eq!(sol.lengths.len(), 2);
        for l in &sol.lengths {
            assert!((l - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn noreset_uniform_head() {
        // uniform head of mass 0.5, c = 1: budget 1/2 split evenly -> 2 bits
        let pmf = Pmf::uniform(4).unwrap();
        let sol = solve_policy3_noreset(&pmf, 2, 1.0, 1.0, &settings()).unwrap();
        for l in &sol.lengths {
            assert!((l - 2.0).abs() < 1e-9, "{l}");
        }
        assert_eq!(sol.empty_length, Some(1.0));
        assert!((sol.kraft_sum() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn noreset_mean_length_relation() {
        let pmf = Pmf::dyadic(10).unwrap();
        let c = 3.0;
        let sol = solve_policy3_noreset(&pmf, 4, 5.0, c, &settings()).unwrap();
        let want = (sol.theta + sol.beta * LN2 * (1.0 - math::exp2(-c)) - 2.0 * sol.waiting.mean) / 3.0;
        assert!((sol.moments.mean - want).abs() < 1e-8);
    }

    #[test]
    fn noreset_large_c_exceeds_policy1() {
        let pmf = Pmf::dyadic(10).unwrap();
        let p1 = solve_policy1(&pmf, 3, 1.0, &settings()).unwrap();
        for c in [12.0, 20.0, 60.0] {
            let p3 = solve_policy3_noreset(&pmf, 3, 1.0, c, &settings()).unwrap();
            assert!(p3.theta > p1.theta, "c={c}");
        }
        let p3 = solve_policy3_noreset(&pmf, 3, 1.0, 12.0, &settings()).unwrap();
        assert!(p3.beta > 0.0 && p3.kraft_residual < 1e-10);
    }

    #[test]
    fn noreset_slack_regime_matches_flat_closed_form() {
        // With c = 60 the waiting time is so variable that equal lengths
        // (theta - 2 E[W]) / 3 fit inside the budget: beta = 0 and
        // theta = -E[W] + sqrt(3 (E[W^2] - E[W]^2)).
        let pmf = Pmf::dyadic(10).unwrap();
        let sol = solve_policy3_noreset(&pmf, 3, 1.0, 60.0, &settings()).unwrap();
        assert_eq!(sol.beta, 0.0);
        let (w1, w2) = (sol.waiting.mean, sol.waiting.second);
        let theta = -w1 + (3.0 * (w2 - w1 * w1)).sqrt();
        assert!((sol.theta - theta).abs() < 1e-9 * theta);
        for l in &sol.lengths {
            assert!((l - (theta - 2.0 * w1) / 3.0).abs() < 1e-8);
        }
        assert!(sol.kraft_slack > 0.5);
        assert_eq!(sol.kraft_residual, 0.0);
        let age = age::age_policy3_noreset(sol.moments, sol.waiting);
        assert!((age - sol.theta).abs() < 1e-8 * sol.theta);
    }

    #[test]
    fn randomized_alpha_one_matches_full_policy1() {
        let pmf = Pmf::zipf(12, 0.7).unwrap();
        let r = solve_policy2(&pmf, 4, 1.0, 0.8, &settings()).unwrap();
        let f = solve_policy1(&pmf, 12, 0.8, &settings()).unwrap();
        assert_eq!(r.lengths, f.lengths);
        assert_eq!(r.theta, f.theta);
    }

    #[test]
    fn rejects_bad_inputs() {
        let pmf = Pmf::dyadic(5).unwrap();
        assert!(solve_policy1(&pmf, 0, 1.0, &settings()).is_err());
        assert!(solve_policy1(&pmf, 2, 0.0, &settings()).is_err());
        assert!(solve_policy2(&pmf, 2, 0.0, 1.0, &settings()).is_err());
        assert!(solve_policy3_noreset(&pmf, 2, 1.0, 0.0, &settings()).is_err());
        assert!(solve_policy3_reset(&pmf, 5, 1.0, &settings()).is_err());
        let bad = SolverSettings { max_outer_iterations: 0, ..settings() };
        assert!(solve_policy1(&pmf, 2, 1.0, &bad).is_err());
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let pmf = Pmf::zipf(20, 0.5).unwrap();
        let tight = SolverSettings { max_outer_iterations: 1, theta_tolerance: 1e-300, ..settings() };
        match solve_policy1(&pmf, 20, 1.0, &tight) {
            Err(Error::SolverFailure { .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
