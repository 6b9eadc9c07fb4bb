//! Source distributions and the policy-conditional pmfs derived from them.
//!
//! Realizations are indexed `1..=n` in the public API and are stored in
//! non-increasing probability order; "highest k" always means the index
//! prefix `1..=k`.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{bail, Error, Result};
use crate::math;

/// Absolute tolerance on the total mass of a pmf.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Smallest probability accepted for a symbol that receives a codeword.
pub const MIN_ENCODED_PROB: f64 = 1e-12;

/// A probability vector over realizations `1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    /// Validates `probs`: finite, non-negative, summing to one and
    /// non-increasing in index. Unsorted input is rejected; use
    /// [`Pmf::sorted_from`] to reorder explicitly.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let pmf = Self::new_unordered(probs)?;
        if let Some(i) = pmf.probs.windows(2).position(|w| w[1] > w[0]) {
            bail!(
                InvalidPmf,
                "probabilities must be non-increasing: P[{}]={} < P[{}]={}",
                i + 1,
                pmf.probs[i],
                i + 2,
                pmf.probs[i + 1]
            );
        }
        Ok(pmf)
    }

    /// Same checks as [`Pmf::new`] except the ordering.
    pub(crate) fn new_unordered(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            bail!(InvalidPmf, "pmf has no entries");
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
            bail!(InvalidPmf, "entry {} is {} (must be finite and >= 0)", i + 1, probs[i]);
        }
        let total = math::sum(probs.iter().copied());
        if (total - 1.0).abs() > SUM_TOLERANCE {
            bail!(InvalidPmf, "entries sum to {total:.15} (tolerance {SUM_TOLERANCE:e})");
        }
        Ok(Self { probs })
    }

    /// Normalizes arbitrary non-negative weights and sorts them into
    /// non-increasing order. `perm[i]` is the 0-based position in `weights`
    /// of the `i`-th entry of the result. The sort is stable, so equal
    /// weights keep their input order.
    pub fn sorted_from(weights: &[f64]) -> Result<(Self, Vec<usize>)> {
        if weights.is_empty() {
            bail!(InvalidPmf, "pmf has no entries");
        }
        if let Some(i) = weights.iter().position(|p| !p.is_finite() || *p < 0.0) {
            bail!(InvalidPmf, "weight {} is {} (must be finite and >= 0)", i + 1, weights[i]);
        }
        let total = math::sum(weights.iter().copied());
        if total <= 0.0 {
            bail!(InvalidPmf, "weights sum to zero");
        }
        let mut perm: Vec<usize> = (0..weights.len()).collect();
        perm.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
        let probs = perm.iter().map(|&i| weights[i] / total).collect();
        Ok((Self::new(probs)?, perm))
    }

    /// Zipf(n, s): entry `i` proportional to `i^-s`.
    pub fn zipf(n: usize, s: f64) -> Result<Self> {
        if n == 0 {
            bail!(InvalidParameter, "zipf requires n >= 1");
        }
        if !s.is_finite() || s < 0.0 {
            bail!(InvalidParameter, "zipf exponent must be finite and >= 0, got {s}");
        }
        let weights: Vec<f64> = (1..=n).map(|i| math::powf(i as f64, -s)).collect();
        let norm = math::sum(weights.iter().copied());
        Self::new(weights.into_iter().map(|w| w / norm).collect())
    }

    /// `2^-i` for `i < n` with the last atom doubled to `2^-(n-1)`.
    pub fn dyadic(n: usize) -> Result<Self> {
        if n < 2 {
            bail!(InvalidParameter, "dyadic pmf requires n >= 2, got {n}");
        }
        let mut probs: Vec<f64> = (1..n).map(|i| math::exp2(-(i as f64))).collect();
        probs.push(math::exp2(-((n - 1) as f64)));
        Self::new(probs)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            bail!(InvalidParameter, "uniform pmf requires n >= 1");
        }
        Self::new(alloc::vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of realization `i` (1-based).
    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i - 1]
    }

    /// `q_k`: mass of the first `k` realizations, exactly 1 at `k = n`.
    pub fn prefix_mass(&self, k: usize) -> f64 {
        if k >= self.len() {
            return 1.0;
        }
        math::sum(self.probs[..k].iter().copied())
    }

    /// Total mass of the realizations in `sel`. For the prefix `1..=k` this
    /// is `q_k`.
    pub fn head_mass(&self, sel: &SelectionSet) -> Result<f64> {
        sel.check_against(self.len())?;
        Ok(math::sum(sel.indices().iter().map(|&i| self.prob(i))))
    }

    /// Rate of encoded (age-resetting) arrivals: `lambda * head_mass`.
    pub fn effective_rate(&self, sel: &SelectionSet, lambda: f64) -> Result<f64> {
        check_rate(lambda)?;
        Ok(lambda * self.head_mass(sel)?)
    }

    /// Conditional pmf of the encoded realizations under highest-k encoding.
    pub fn conditional_topk(&self, k: usize) -> Result<Self> {
        self.check_k(k, 1, self.len())?;
        if k == self.len() {
            return Ok(self.clone());
        }
        let q = self.prefix_mass(k);
        Self::new(self.probs[..k].iter().map(|p| p / q).collect())
    }

    /// Conditional pmf of the selection `sel`, renormalized and kept in
    /// index order.
    pub fn conditional_subset(&self, sel: &SelectionSet) -> Result<Self> {
        let q = self.head_mass(sel)?;
        Self::new(sel.indices().iter().map(|&i| self.prob(i) / q).collect())
    }

    /// Conditional pmf under randomized encoding: tail realizations are
    /// encoded with probability `alpha`. Returns all `n` entries.
    pub fn conditional_randomized(&self, k: usize, alpha: f64) -> Result<Self> {
        self.check_k(k, 1, self.len())?;
        check_alpha(alpha)?;
        if alpha == 1.0 || k == self.len() {
            return Ok(self.clone());
        }
        let q = self.randomized_mass(k, alpha);
        let probs = self.probs.iter().enumerate().map(|(i, p)| if i < k { p / q } else { alpha * p / q }).collect();
        Self::new(probs)
    }

    /// `q_{k,alpha} = q_k + alpha (1 - q_k)`.
    pub fn randomized_mass(&self, k: usize, alpha: f64) -> f64 {
        if alpha == 1.0 {
            return 1.0;
        }
        let head = self.prefix_mass(k);
        let tail = math::sum(self.probs[k..].iter().copied());
        head + alpha * tail
    }

    /// The `k + 1` symbol pmf `{P_1, .., P_k, 1 - q_k}` used by the
    /// empty-symbol policies. The empty symbol is always last, whatever its
    /// mass, so the result is not necessarily sorted.
    pub fn with_empty(&self, k: usize) -> Result<Self> {
        if k >= self.len() {
            bail!(InvalidParameter, "empty symbol needs k < n (k={k}, n={}); at k = n it has zero mass", self.len());
        }
        self.check_k(k, 1, self.len() - 1)?;
        let mut probs = self.probs[..k].to_vec();
        probs.push(math::sum(self.probs[k..].iter().copied()));
        Self::new_unordered(probs)
    }

    /// 1-based indices `i` with `P_i == P_{i+1}`. Index order decides which
    /// of two equally likely realizations counts as "more probable".
    pub fn ties(&self) -> Vec<usize> {
        self.probs.windows(2).enumerate().filter(|(_, w)| w[0] == w[1]).map(|(i, _)| i + 1).collect()
    }

    /// True when the highest-k cut separates two equally likely realizations.
    pub fn tie_at_cut(&self, k: usize) -> bool {
        k >= 1 && k < self.len() && self.probs[k - 1] == self.probs[k]
    }

    /// Errors if any entry is too small to receive a finite codeword.
    pub fn check_encodable(&self) -> Result<()> {
        if let Some(i) = self.probs.iter().position(|&p| p < MIN_ENCODED_PROB) {
            bail!(
                Domain,
                "symbol {} has probability {:e} < {MIN_ENCODED_PROB:e}; its optimal length diverges",
                i + 1,
                self.probs[i]
            );
        }
        Ok(())
    }

    fn check_k(&self, k: usize, lo: usize, hi: usize) -> Result<()> {
        if k < lo || k > hi {
            bail!(InvalidParameter, "k={k} outside [{lo}, {hi}] for n={}", self.len());
        }
        Ok(())
    }
}

pub(crate) fn check_rate(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        bail!(InvalidParameter, "arrival rate must be finite and > 0, got {lambda}");
    }
    Ok(())
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha == 0.0 {
        bail!(
            InvalidParameter,
            "alpha = 0 leaves tail symbols with zero mass and unbounded lengths; use the highest-k policy instead"
        );
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        bail!(InvalidParameter, "alpha must lie in (0, 1], got {alpha}");
    }
    Ok(())
}

/// A non-empty set of distinct realization indices, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SelectionSet {
    indices: Vec<usize>,
}

impl SelectionSet {
    /// Builds a selection from 1-based indices in any order. Duplicates and
    /// index 0 are rejected.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            bail!(InvalidParameter, "selection is empty");
        }
        indices.sort_unstable();
        if indices[0] == 0 {
            bail!(InvalidParameter, "selection indices are 1-based");
        }
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            bail!(InvalidParameter, "index {} selected twice", w[0]);
        }
        Ok(Self { indices })
    }

    /// `{1, .., k}`.
    pub fn prefix(k: usize) -> Result<Self> {
        Self::new((1..=k).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn is_prefix(&self) -> bool {
        self.indices.iter().enumerate().all(|(i, &x)| x == i + 1)
    }

    pub fn check_against(&self, n: usize) -> Result<()> {
        let max = *self.indices.last().expect("non-empty");
        if max > n {
            bail!(InvalidParameter, "selection index {max} exceeds n={n}");
        }
        Ok(())
    }
}

impl fmt::Display for SelectionSet {
    /// Dash-joined indices, e.g. `1-7-8-9-10`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (pos, i) in self.indices.iter().enumerate() {
            if pos > 0 {
                f.write_str("-")?;
            }
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

impl core::str::FromStr for SelectionSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let indices = s
            .split(['-', ','])
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidParameter(alloc::format!("bad selection index {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(indices)
    }
}

/// Lexicographic enumeration of all `k`-subsets of `1..=n`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        let current = (k >= 1 && k <= n).then(|| (1..=k).collect());
        Self { n, current }
    }
}

impl Iterator for Combinations {
    type Item = SelectionSet;

    fn next(&mut self) -> Option<SelectionSet> {
        let cur = self.current.as_mut()?;
        let out = SelectionSet { indices: cur.clone() };
        let k = cur.len();
        // rightmost position that can still be incremented
        match (0..k).rev().find(|&i| cur[i] < self.n - (k - 1 - i)) {
            Some(i) => {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
            }
            None => self.current = None,
        }
        Some(out)
    }
}

/// `C(n, k)` without overflow for the sizes we guard against.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}
