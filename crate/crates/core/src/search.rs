//! Exogenous parameter searches: sweeps over `k`, `alpha` and the
//! empty-symbol length, and brute-force selection of the encoded subset.
//!
//! Every search is split into a plan (the list of points), a per-point
//! evaluator and an order-independent assembly step, so callers can farm the
//! points out to worker threads and still get identical results.

use alloc::vec::Vec;
use core::ops::RangeInclusive;

use crate::age::WaitingMoments;
use crate::error::{bail, Error, Result};
use crate::pmf::{binomial, Combinations, Pmf, SelectionSet};
use crate::policy::{Policy, PolicyConfig};
use crate::solver::{self, SolverSettings};

/// Points whose ages differ from the minimum by at most this much (scaled
/// by `max(1, min)`) count as ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Largest number of subsets [`best_selection`] will enumerate.
pub const MAX_SUBSETS: u128 = 1_000_000;

/// Outcome of one grid point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub param: f64,
    /// Optimal age, `NaN` when the solve failed.
    pub age: f64,
    pub converged: bool,
    pub iterations: usize,
    pub error: Option<Error>,
}

impl SweepPoint {
    fn from_outcome(param: f64, outcome: Result<solver::CodebookSolution>) -> Self {
        match outcome {
            Ok(sol) => Self { param, age: sol.theta, converged: true, iterations: sol.iterations, error: None },
            Err(e) => Self {
                param,
                age: f64::NAN,
                converged: false,
                iterations: match e {
                    Error::SolverFailure { outer_iterations, .. } => outer_iterations,
                    _ => 0,
                },
                error: Some(e),
            },
        }
    }
}

/// A swept curve with its minimizer.
#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Every requested point in grid order, failed ones included.
    pub points: Vec<SweepPoint>,
    /// Converged parameter values.
    pub grid: Vec<f64>,
    /// Ages at `grid`.
    pub ages: Vec<f64>,
    /// Smallest parameter attaining the minimum within [`TIE_TOLERANCE`].
    pub argmin_value: f64,
    pub argmin_age: f64,
    /// All parameters within tolerance of the minimum, ascending.
    pub ties: Vec<f64>,
}

impl SweepResult {
    /// Assembles a result from evaluated points in any order.
    pub fn from_points(mut points: Vec<SweepPoint>) -> Result<Self> {
        points.sort_by(|a, b| a.param.total_cmp(&b.param));
        let (grid, ages): (Vec<f64>, Vec<f64>) =
            points.iter().filter(|p| p.converged).map(|p| (p.param, p.age)).unzip();
        if grid.is_empty() {
            return Err(Error::NoConvergedPoints);
        }
        let min = ages.iter().copied().fold(f64::INFINITY, f64::min);
        let tol = TIE_TOLERANCE * min.abs().max(1.0);
        let ties: Vec<f64> = grid.iter().zip(&ages).filter(|(_, &a)| a - min <= tol).map(|(&g, _)| g).collect();
        Ok(Self { argmin_value: ties[0], argmin_age: min, ties, grid, ages, points })
    }

    /// Points that failed to converge.
    pub fn failures(&self) -> impl Iterator<Item = &SweepPoint> {
        self.points.iter().filter(|p| !p.converged)
    }

    pub fn all_converged(&self) -> bool {
        self.points.iter().all(|p| p.converged)
    }
}

/// Solves one configuration and records it under `param`.
pub fn evaluate(pmf: &Pmf, param: f64, cfg: &PolicyConfig, settings: &SolverSettings) -> SweepPoint {
    SweepPoint::from_outcome(param, cfg.solve(pmf, settings))
}

/// Evaluates a plan serially.
pub fn run_plan(pmf: &Pmf, plan: &[(f64, PolicyConfig)], settings: &SolverSettings) -> Result<SweepResult> {
    SweepResult::from_points(plan.iter().map(|(p, cfg)| evaluate(pmf, *p, cfg, settings)).collect())
}

/// One configuration per `k` in `ks`.
pub fn k_plan(n: usize, lambda: f64, policy: Policy, ks: RangeInclusive<usize>) -> Result<Vec<(f64, PolicyConfig)>> {
    let (lo, hi) = policy.k_range(n);
    if ks.is_empty() || *ks.start() < lo || *ks.end() > hi {
        bail!(
            InvalidParameter,
            "k range {}..={} outside [{lo}, {hi}] for policy {} with n={n}",
            ks.start(),
            ks.end(),
            policy.name()
        );
    }
    Ok(ks.map(|k| (k as f64, PolicyConfig::new(policy, k, lambda))).collect())
}

pub fn alpha_plan(k: usize, lambda: f64, grid: &[f64]) -> Result<Vec<(f64, PolicyConfig)>> {
    if grid.is_empty() {
        bail!(InvalidParameter, "alpha grid is empty");
    }
    grid.iter()
        .map(|&alpha| {
            crate::pmf::check_alpha(alpha)?;
            Ok((alpha, PolicyConfig::new(Policy::Randomized { alpha }, k, lambda)))
        })
        .collect()
}

pub fn empty_length_plan(k: usize, lambda: f64, grid: &[f64]) -> Result<Vec<(f64, PolicyConfig)>> {
    if grid.is_empty() {
        bail!(InvalidParameter, "empty-length grid is empty");
    }
    grid.iter()
        .map(|&c| {
            crate::policy::check_empty_len(c)?;
            Ok((c, PolicyConfig::new(Policy::EmptyNoReset { empty_len: c }, k, lambda)))
        })
        .collect()
}

/// Age against `k` for a fixed policy. For the randomized and
/// non-resetting variants the policy's parameter is held fixed.
pub fn sweep_k(
    pmf: &Pmf,
    lambda: f64,
    policy: Policy,
    ks: RangeInclusive<usize>,
    settings: &SolverSettings,
) -> Result<SweepResult> {
    run_plan(pmf, &k_plan(pmf.len(), lambda, policy, ks)?, settings)
}

/// Randomized policy: age against `alpha`.
pub fn sweep_alpha(pmf: &Pmf, k: usize, lambda: f64, grid: &[f64], settings: &SolverSettings) -> Result<SweepResult> {
    run_plan(pmf, &alpha_plan(k, lambda, grid)?, settings)
}

/// Non-resetting empty symbol: age against its length `c`.
pub fn sweep_empty_length(
    pmf: &Pmf,
    k: usize,
    lambda: f64,
    grid: &[f64],
    settings: &SolverSettings,
) -> Result<SweepResult> {
    run_plan(pmf, &empty_length_plan(k, lambda, grid)?, settings)
}

/// `0.05, 0.10, .., 1.0`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 20.0).collect()
}

/// `0.5, 0.6, .., 15.0`; every integer `1..=15` is on the grid exactly.
pub fn default_empty_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (5..=150).map(|i| i as f64 / 10.0).collect();
    grid.extend((1..=15).map(|i| i as f64));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// `lo, lo + 1, .., hi` as reals.
pub fn integer_grid(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(f64::from).collect()
}

/// One enumerated subset.
#[derive(Debug, Clone)]
pub struct SelectionEntry {
    pub selection: SelectionSet,
    pub effective_rate: f64,
    pub age: f64,
    pub iterations: usize,
}

/// Best subset of a fixed size, with a ranked table of runners-up.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub selection: SelectionSet,
    pub effective_rate: f64,
    pub age: f64,
    /// Best entries by age, ties in lexicographic order.
    pub ranked: Vec<SelectionEntry>,
    pub evaluated: usize,
    /// Subsets whose solve failed, with the error.
    pub failures: Vec<(SelectionSet, Error)>,
}

impl SelectionResult {
    /// Assembles a result from per-subset outcomes in any order.
    pub fn from_outcomes(outcomes: Vec<(SelectionSet, Result<SelectionEntry>)>, top_n: usize) -> Result<Self> {
        let evaluated = outcomes.len();
        let mut entries = Vec::with_capacity(evaluated);
        let mut failures = Vec::new();
        for (sel, outcome) in outcomes {
            match outcome {
                Ok(e) => entries.push(e),
                Err(e) => failures.push((sel, e)),
            }
        }
        if entries.is_empty() {
            return Err(Error::NoConvergedPoints);
        }
        failures.sort_by(|a, b| a.0.indices().cmp(b.0.indices()));
        let min = entries.iter().map(|e| e.age).fold(f64::INFINITY, f64::min);
        let tol = TIE_TOLERANCE * min.abs().max(1.0);
        // exact ordering first, then pull ties at the minimum into
        // lexicographic order
        entries.sort_by(|a, b| a.age.total_cmp(&b.age).then_with(|| a.selection.indices().cmp(b.selection.indices())));
        let n_ties = entries.iter().take_while(|e| e.age - min <= tol).count();
        entries[..n_ties].sort_by(|a, b| a.selection.indices().cmp(b.selection.indices()));
        entries.truncate(top_n.max(1));
        let best = entries[0].clone();
        Ok(Self {
            selection: best.selection,
            effective_rate: best.effective_rate,
            age: best.age,
            ranked: entries,
            evaluated,
            failures,
        })
    }
}

/// Optimal age when exactly the realizations in `sel` are encoded: the
/// lengths are optimized for the renormalized subset pmf and the waiting
/// time is exponential with the effective rate `lambda * P(sel)`.
pub fn selection_age(pmf: &Pmf, sel: &SelectionSet, lambda: f64, settings: &SolverSettings) -> Result<SelectionEntry> {
    let effective_rate = pmf.effective_rate(sel, lambda)?;
    let cond = pmf.conditional_subset(sel)?;
    let wait = WaitingMoments::exponential(effective_rate)?;
    let sol = solver::solve_fractional(&cond, wait, 1.0, settings)?;
    Ok(SelectionEntry { selection: sel.clone(), effective_rate, age: sol.theta, iterations: sol.iterations })
}

/// All `k`-subsets of `1..=n` in lexicographic order, refused above
/// [`MAX_SUBSETS`].
pub fn selection_plan(n: usize, k: usize) -> Result<Combinations> {
    if k == 0 || k > n {
        bail!(InvalidParameter, "selection size k={k} outside [1, {n}]");
    }
    let count = binomial(n, k);
    if count > MAX_SUBSETS {
        return Err(Error::TooManySubsets { count, limit: MAX_SUBSETS });
    }
    Ok(Combinations::new(n, k))
}

/// Exhaustive search for the age-optimal `k`-subset.
pub fn best_selection(
    pmf: &Pmf,
    k: usize,
    lambda: f64,
    settings: &SolverSettings,
    top_n: usize,
) -> Result<SelectionResult> {
    crate::pmf::check_rate(lambda)?;
    let outcomes = selection_plan(pmf.len(), k)?
        .map(|sel| {
            let r = selection_age(pmf, &sel, lambda, settings);
            (sel, r)
        })
        .collect();
    SelectionResult::from_outcomes(outcomes, top_n)
}
