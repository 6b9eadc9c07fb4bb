//! Policy discriminants and the per-policy wiring from a source pmf to the
//! encoding pmf, waiting-time moments and Kraft budget.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::age::{self, LengthMoments, WaitingMoments};
use crate::error::{bail, Error, Result};
use crate::math;
use crate::pmf::{check_alpha, check_rate, Pmf};
use crate::solver::{self, CodebookSolution, SolverSettings};

/// How the realizations outside the encoded head are handled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    /// Tail realizations are discarded.
    HighestK,
    /// Tail realizations are encoded with probability `alpha`.
    Randomized { alpha: f64 },
    /// Tail realizations send an empty symbol of fixed length that does not
    /// reset the age.
    EmptyNoReset { empty_len: f64 },
    /// Tail realizations send an empty symbol that resets the age; its
    /// length is optimized jointly with the others.
    EmptyReset,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::HighestK => "highest-k",
            Policy::Randomized { .. } => "randomized",
            Policy::EmptyNoReset { .. } => "empty-noreset",
            Policy::EmptyReset => "empty-reset",
        }
    }

    pub fn uses_empty_symbol(&self) -> bool {
        matches!(self, Policy::EmptyNoReset { .. } | Policy::EmptyReset)
    }

    /// Valid range of `k` for a source with `n` realizations.
    pub fn k_range(&self, n: usize) -> (usize, usize) {
        if self.uses_empty_symbol() {
            (1, n.saturating_sub(1))
        } else {
            (1, n)
        }
    }

    /// Same discriminant with a different parameter value.
    pub fn with_alpha(self, alpha: f64) -> Self {
        match self {
            Policy::Randomized { .. } => Policy::Randomized { alpha },
            other => other,
        }
    }
}

/// Policy names accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    HighestK,
    Randomized,
    EmptyNoReset,
    EmptyReset,
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "highest-k" | "highest" | "policy1" => PolicyKind::HighestK,
            "randomized" | "policy2" => PolicyKind::Randomized,
            "empty-noreset" | "policy3-noreset" => PolicyKind::EmptyNoReset,
            "empty-reset" | "policy3-reset" => PolicyKind::EmptyReset,
            other => bail!(
                InvalidParameter,
                "unknown policy {other:?} (expected highest-k, randomized, empty-noreset or empty-reset)"
            ),
        })
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::HighestK => "highest-k",
            PolicyKind::Randomized => "randomized",
            PolicyKind::EmptyNoReset => "empty-noreset",
            PolicyKind::EmptyReset => "empty-reset",
        })
    }
}

/// A fully specified operating point: policy, number of encoded head
/// realizations and arrival rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    pub policy: Policy,
    pub k: usize,
    pub lambda: f64,
}

impl PolicyConfig {
    pub fn new(policy: Policy, k: usize, lambda: f64) -> Self {
        Self { policy, k, lambda }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_rate(self.lambda)?;
        let (lo, hi) = self.policy.k_range(n);
        if self.k < lo || self.k > hi {
            if self.policy.uses_empty_symbol() && self.k == n {
                bail!(
                    InvalidParameter,
                    "policy {} needs k < n: at k = n the empty symbol has zero mass",
                    self.policy.name()
                );
            }
            bail!(InvalidParameter, "k={} outside [{lo}, {hi}] for n={n}", self.k);
        }
        match self.policy {
            Policy::Randomized { alpha } => check_alpha(alpha)?,
            Policy::EmptyNoReset { empty_len } => check_empty_len(empty_len)?,
            _ => {}
        }
        Ok(())
    }

    /// Number of codewords: `k`, `n`, `k` (empty length fixed) or `k + 1`.
    pub fn codeword_count(&self, n: usize) -> usize {
        match self.policy {
            Policy::HighestK | Policy::EmptyNoReset { .. } => self.k,
            Policy::Randomized { .. } => n,
            Policy::EmptyReset => self.k + 1,
        }
    }

    /// Probability that an arrival at an idle transmitter resets the age.
    pub fn success_mass(&self, pmf: &Pmf) -> f64 {
        match self.policy {
            Policy::HighestK | Policy::EmptyNoReset { .. } => pmf.prefix_mass(self.k),
            Policy::Randomized { alpha } => pmf.randomized_mass(self.k, alpha),
            Policy::EmptyReset => 1.0,
        }
    }

    /// The pmf the codeword lengths are optimized against.
    pub fn encoding_pmf(&self, pmf: &Pmf) -> Result<Pmf> {
        self.validate(pmf.len())?;
        match self.policy {
            Policy::HighestK | Policy::EmptyNoReset { .. } => pmf.conditional_topk(self.k),
            Policy::Randomized { alpha } => pmf.conditional_randomized(self.k, alpha),
            Policy::EmptyReset => pmf.with_empty(self.k),
        }
    }

    /// Moments of the waiting time between a successful delivery and the
    /// next successful arrival.
    pub fn waiting_moments(&self, pmf: &Pmf) -> Result<WaitingMoments> {
        self.validate(pmf.len())?;
        match self.policy {
            Policy::EmptyNoReset { empty_len } => {
                age::waiting_moments_empty(pmf.prefix_mass(self.k), self.lambda, empty_len)
            }
            _ => WaitingMoments::exponential(self.lambda * self.success_mass(pmf)),
        }
    }

    /// Kraft budget available to the optimized codewords.
    pub fn kraft_budget(&self) -> f64 {
        match self.policy {
            Policy::EmptyNoReset { empty_len } => 1.0 - math::exp2(-empty_len),
            _ => 1.0,
        }
    }

    /// Closed-form average age of `lengths` under this configuration.
    pub fn age_of_lengths(&self, pmf: &Pmf, lengths: &[f64]) -> Result<f64> {
        let enc = self.encoding_pmf(pmf)?;
        let lm = LengthMoments::from_lengths(&enc, lengths)?;
        self.age_of_moments(pmf, lm)
    }

    pub fn age_of_moments(&self, pmf: &Pmf, lm: LengthMoments) -> Result<f64> {
        self.validate(pmf.len())?;
        match self.policy {
            Policy::HighestK => age::age_policy1(lm, pmf.prefix_mass(self.k), self.lambda),
            Policy::Randomized { alpha } => age::age_policy2(lm, pmf.randomized_mass(self.k, alpha), self.lambda),
            Policy::EmptyNoReset { .. } => Ok(age::age_policy3_noreset(lm, self.waiting_moments(pmf)?)),
            Policy::EmptyReset => age::age_policy3_reset(lm, self.lambda),
        }
    }

    /// Shannon lengths for the encoding pmf at this configuration's budget.
    pub fn shannon_lengths(&self, pmf: &Pmf) -> Result<Vec<f64>> {
        let enc = self.encoding_pmf(pmf)?;
        Ok(age::shannon_lengths(&enc, self.kraft_budget()))
    }

    pub fn solve(&self, pmf: &Pmf, settings: &SolverSettings) -> Result<CodebookSolution> {
        match self.policy {
            Policy::HighestK => solver::solve_policy1(pmf, self.k, self.lambda, settings),
            Policy::Randomized { alpha } => solver::solve_policy2(pmf, self.k, alpha, self.lambda, settings),
            Policy::EmptyNoReset { empty_len } => {
                solver::solve_policy3_noreset(pmf, self.k, self.lambda, empty_len, settings)
            }
            Policy::EmptyReset => solver::solve_policy3_reset(pmf, self.k, self.lambda, settings),
        }
    }
}

pub(crate) fn check_empty_len(c: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        bail!(
            InvalidParameter,
            "empty-symbol length must be finite and > 0 (got {c}); at 0 no Kraft budget is left for the other codewords"
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_names() {
        assert_eq!("highest-k".parse::<PolicyKind>().unwrap(), PolicyKind::HighestK);
        assert_eq!("empty-reset".parse::<PolicyKind>().unwrap(), PolicyKind::EmptyReset);
        assert!("bogus".parse::<PolicyKind>().is_err());
        assert_eq!(alloc::format!("{}", PolicyKind::EmptyNoReset), "empty-noreset");
    }

    #[test]
    fn validation() {
        let n = 10;
        assert!(PolicyConfig::new(Policy::HighestK, 10, 1.0).validate(n).is_ok());
        assert!(PolicyConfig::new(Policy::EmptyReset, 10, 1.0).validate(n).is_err());
        assert!(PolicyConfig::new(Policy::EmptyNoReset { empty_len: 0.0 }, 3, 1.0).validate(n).is_err());
        assert!(PolicyConfig::new(Policy::Randomized { alpha: 0.0 }, 3, 1.0).validate(n).is_err());
        assert!(PolicyConfig::new(Policy::HighestK, 3, -1.0).validate(n).is_err());
    }

    #[test]
    fn wiring() {
        let pmf = Pmf::dyadic(10).unwrap();
        let cfg = PolicyConfig::new(Policy::EmptyNoReset { empty_len: 2.0 }, 2, 5.0);
        assert_eq!(cfg.kraft_budget(), 0.75);
        assert_eq!(cfg.codeword_count(10), 2);
        let wm = cfg.waiting_moments(&pmf).unwrap();
        assert_eq!(wm, age::waiting_moments_empty(0.75, 5.0, 2.0).unwrap());
        let reset = PolicyConfig::new(Policy::EmptyReset, 2, 5.0);
        assert_eq!(reset.encoding_pmf(&pmf).unwrap().len(), 3);
        assert_eq!(reset.waiting_moments(&pmf).unwrap(), WaitingMoments::exponential(5.0).unwrap());
    }
}
