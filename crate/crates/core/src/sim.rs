//! Monte Carlo estimators of the long-run average age.
//!
//! [`simulate`] draws i.i.d. update cycles `Y_j = S_j + W_j` and forms the
//! renewal-reward ratio `sum Q_j / sum Y_j` with
//! `Q_j = Y_j^2 / 2 + Y_j S_{j+1}`. Cycle `j` uses its own ChaCha stream, so
//! the estimate depends only on `(config, seed)` and not on how cycles are
//! split across workers: [`chunk_ranges`] fixes the partition and
//! [`CycleAccumulator::merge`] recombines chunks in order.
//!
//! The 95% interval comes from the delta method for a ratio of means.
//! With `D_j = Q_j - R Y_j`, `R = sum Q / sum Y`,
//!
//! ```text
//! Var(R) ~ (g0 + 2 g1) / (N * mean(Y)^2)
//! ```
//!
//! where `g0` and `g1` are the lag-0 and lag-1 autocovariances of `D`
//! (consecutive cycles share `S_{j+1}`, so the lag-1 term is not zero).
//!
//! [`simulate_trajectory`] instead follows every Poisson arrival, blocks
//! arrivals during transmissions and integrates the instantaneous age
//! directly. It shares no sampling code with the cycle estimator.

use alloc::vec::Vec;
use core::ops::Range;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{bail, Result};
use crate::math;
use crate::pmf::Pmf;
use crate::policy::{Policy, PolicyConfig};
use crate::solver::CodebookSolution;

/// Cycles per work unit. Fixed so the floating-point merge order, and hence
/// every bit of the estimate, is independent of the thread count.
pub const CHUNK_CYCLES: u64 = 1 << 14;

/// Default cycle count.
pub const DEFAULT_CYCLES: u64 = 1_000_000;

const Z_95: f64 = 1.959_963_984_540_054;

/// Everything the estimators need: source, policy, codeword lengths, run
/// length and seed.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub pmf: Pmf,
    pub policy: PolicyConfig,
    /// One length per codeword of the policy: `k` (highest-k and
    /// non-resetting empty symbol), `n` (randomized) or `k + 1` (resetting
    /// empty symbol, empty codeword last).
    pub lengths: Vec<f64>,
    pub cycles: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(pmf: Pmf, policy: PolicyConfig, lengths: Vec<f64>, cycles: u64, seed: u64) -> Result<Self> {
        policy.validate(pmf.len())?;
        let want = policy.codeword_count(pmf.len());
        if lengths.len() != want {
            bail!(
                InvalidParameter,
                "policy {} with k={} needs {want} lengths, got {}",
                policy.policy.name(),
                policy.k,
                lengths.len()
            );
        }
        if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            bail!(InvalidParameter, "codeword lengths must be finite and >= 0, got {l}");
        }
        if cycles == 0 {
            bail!(InvalidParameter, "cycle count must be at least 1");
        }
        Ok(Self { pmf, policy, lengths, cycles, seed })
    }

    /// Uses the lengths of a solver result.
    pub fn from_solution(
        pmf: Pmf,
        policy: PolicyConfig,
        solution: &CodebookSolution,
        cycles: u64,
        seed: u64,
    ) -> Result<Self> {
        Self::new(pmf, policy, solution.lengths.clone(), cycles, seed)
    }
}

/// Result of [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeEstimate {
    /// `sum_q / sum_y`.
    pub mean_age: f64,
    pub half_width_95: f64,
    pub cycles: u64,
    pub sum_q: f64,
    pub sum_y: f64,
    /// Sample mean of the waiting time and its 95% half-width.
    pub mean_waiting: f64,
    pub waiting_half_width_95: f64,
    /// Sample mean of the service time.
    pub mean_service: f64,
}

impl AgeEstimate {
    /// Whether `value` lies inside the 95% interval.
    pub fn covers(&self, value: f64) -> bool {
        (self.mean_age - value).abs() <= self.half_width_95
    }
}

/// Mergeable sufficient statistics of a contiguous run of cycles.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CycleAccumulator {
    pub count: u64,
    sum_q: f64,
    sum_y: f64,
    sum_qq: f64,
    sum_qy: f64,
    sum_yy: f64,
    // sum over consecutive pairs (j, j + 1) of Q_j Q_{j+1}, Q_j Y_{j+1},
    // Y_j Q_{j+1}, Y_j Y_{j+1}
    lag_qq: f64,
    lag_qy: f64,
    lag_yq: f64,
    lag_yy: f64,
    first: (f64, f64),
    last: (f64, f64),
    sum_w: f64,
    sum_ww: f64,
    sum_s: f64,
}

impl CycleAccumulator {
    pub fn push(&mut self, q: f64, y: f64, s: f64, w: f64) {
        if self.count == 0 {
            self.first = (q, y);
        } else {
            let (pq, py) = self.last;
            self.add_lag(pq, py, q, y);
        }
        self.last = (q, y);
        self.count += 1;
        self.sum_q += q;
        self.sum_y += y;
        self.sum_qq += q * q;
        self.sum_qy += q * y;
        self.sum_yy += y * y;
        self.sum_w += w;
        self.sum_ww += w * w;
        self.sum_s += s;
    }

    fn add_lag(&mut self, pq: f64, py: f64, q: f64, y: f64) {
        self.lag_qq += pq * q;
        self.lag_qy += pq * y;
        self.lag_yq += py * q;
        self.lag_yy += py * y;
    }

    /// Appends `next`, which must cover the cycles immediately after `self`.
    pub fn merge(mut self, next: &Self) -> Self {
        if next.count == 0 {
            return self;
        }
        if self.count == 0 {
            return *next;
        }
        let (pq, py) = self.last;
        let (q, y) = next.first;
        self.add_lag(pq, py, q, y);
        self.count += next.count;
        self.sum_q += next.sum_q;
        self.sum_y += next.sum_y;
        self.sum_qq += next.sum_qq;
        self.sum_qy += next.sum_qy;
        self.sum_yy += next.sum_yy;
        self.lag_qq += next.lag_qq;
        self.lag_qy += next.lag_qy;
        self.lag_yq += next.lag_yq;
        self.lag_yy += next.lag_yy;
        self.last = next.last;
        self.sum_w += next.sum_w;
        self.sum_ww += next.sum_ww;
        self.sum_s += next.sum_s;
        self
    }

    pub fn estimate(&self) -> Result<AgeEstimate> {
        if self.count == 0 {
            bail!(InvalidParameter, "no cycles accumulated");
        }
        let n = self.count as f64;
        let r = self.sum_q / self.sum_y;
        let mean_y = self.sum_y / n;
        let g0 = (self.sum_qq - 2.0 * r * self.sum_qy + r * r * self.sum_yy) / n;
        let g1 = if self.count > 1 {
            (self.lag_qq - r * (self.lag_qy + self.lag_yq) + r * r * self.lag_yy) / (n - 1.0)
        } else {
            0.0
        };
        let var = ((g0 + 2.0 * g1) / (n * mean_y * mean_y)).max(0.0);
        let mean_w = self.sum_w / n;
        let var_w = if self.count > 1 { ((self.sum_ww - n * mean_w * mean_w) / (n - 1.0)).max(0.0) } else { 0.0 };
        Ok(AgeEstimate {
            mean_age: r,
            half_width_95: Z_95 * math::sqrt(var),
            cycles: self.count,
            sum_q: self.sum_q,
            sum_y: self.sum_y,
            mean_waiting: mean_w,
            waiting_half_width_95: Z_95 * math::sqrt(var_w / n),
            mean_service: self.sum_s / n,
        })
    }
}

/// Uniform on the open interval `(0, 1)`.
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn exponential(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    -math::ln(uniform(rng)) / rate
}

fn cdf(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

/// Index into `cdf` by inversion; rounding in the last entry falls back to
/// the final index.
fn categorical(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c < u).min(cdf.len() - 1)
}

/// Precomputed per-policy sampling tables for the cycle estimator.
struct CycleSampler {
    base: ChaCha8Rng,
    /// Distribution of the delivered (age-resetting) codeword.
    service_cdf: Vec<f64>,
    lengths: Vec<f64>,
    lambda: f64,
    /// Probability that an arrival at an idle transmitter ends the waiting
    /// period.
    success: f64,
    /// Time added per unsuccessful attempt (the non-resetting empty symbol).
    penalty: f64,
}

impl CycleSampler {
    fn new(config: &SimConfig) -> Result<Self> {
        let cfg = &config.policy;
        let enc = cfg.encoding_pmf(&config.pmf)?;
        let penalty = match cfg.policy {
            Policy::EmptyNoReset { empty_len } => empty_len,
            _ => 0.0,
        };
        Ok(Self {
            base: ChaCha8Rng::seed_from_u64(config.seed),
            service_cdf: cdf(enc.probs()),
            lengths: config.lengths.clone(),
            lambda: cfg.lambda,
            success: cfg.success_mass(&config.pmf),
            penalty,
        })
    }

    fn stream(&self, j: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(j);
        rng
    }

    /// Service time of cycle `j`: always the first draw of stream `j`.
    fn service(&self, rng: &mut ChaCha8Rng) -> f64 {
        self.lengths[categorical(&self.service_cdf, uniform(rng))]
    }

    /// `M ~ Geometric(success)` by inversion, then `(M - 1) penalty` plus
    /// `M` exponential interarrivals.
    fn waiting(&self, rng: &mut ChaCha8Rng) -> f64 {
        let m = if self.success >= 1.0 {
            1
        } else {
            let u = uniform(rng);
            1 + (math::ln(u) / math::ln_1p(-self.success)) as u64
        };
        let mut w = (m - 1) as f64 * self.penalty;
        for _ in 0..m {
            w += exponential(rng, self.lambda);
        }
        w
    }

    fn run(&self, range: Range<u64>) -> CycleAccumulator {
        let mut acc = CycleAccumulator::default();
        if range.is_empty() {
            return acc;
        }
        let mut rng = self.stream(range.start);
        let mut s = self.service(&mut rng);
        for j in range {
            let w = self.waiting(&mut rng);
            let y = s + w;
            // stream j + 1 opens with S_{j+1}; the last cycle borrows the
            // service of a cycle that is never completed
            let mut next_rng = self.stream(j + 1);
            let s_next = self.service(&mut next_rng);
            acc.push(0.5 * y * y + y * s_next, y, s, w);
            s = s_next;
            rng = next_rng;
        }
        acc
    }
}

/// The fixed partition of `0..cycles` into work units.
pub fn chunk_ranges(cycles: u64) -> Vec<Range<u64>> {
    (0..cycles.div_ceil(CHUNK_CYCLES)).map(|c| c * CHUNK_CYCLES..((c + 1) * CHUNK_CYCLES).min(cycles)).collect()
}

/// Statistics of the cycles in `range`. Merging the results of
/// [`chunk_ranges`] in order reproduces [`simulate`] bit for bit.
pub fn simulate_range(config: &SimConfig, range: Range<u64>) -> Result<CycleAccumulator> {
    Ok(CycleSampler::new(config)?.run(range))
}

/// Renewal-cycle estimate of the average age.
pub fn simulate(config: &SimConfig) -> Result<AgeEstimate> {
    let sampler = CycleSampler::new(config)?;
    chunk_ranges(config.cycles)
        .into_iter()
        .fold(CycleAccumulator::default(), |acc, r| acc.merge(&sampler.run(r)))
        .estimate()
}

/// What happened at an event time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// Arrival at an idle transmitter carrying realization `symbol`.
    Arrival { symbol: usize },
    /// Arrival during a transmission, lost.
    Blocked,
    /// Realization not encoded, dropped.
    Discarded { symbol: usize },
    /// Transmission start; `symbol` is `None` for the empty symbol.
    Transmit { symbol: Option<usize>, length: f64 },
    /// Transmission end; `reset` tells whether the receiver's age dropped.
    Delivered { symbol: Option<usize>, reset: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    /// Receiver age right after the event.
    pub age: f64,
}

/// Result of [`simulate_trajectory`].
#[derive(Debug, Clone)]
pub struct TrajectoryEstimate {
    /// Time average of the age over the integration window.
    pub mean_age: f64,
    /// Batch-means 95% half-width.
    pub half_width_95: f64,
    /// Integration window `[start, horizon]`; it starts at the first
    /// age-resetting delivery.
    pub window: (f64, f64),
    pub arrivals: u64,
    pub blocked: u64,
    pub discarded: u64,
    pub transmissions: u64,
    pub resets: u64,
    pub empty_deliveries: u64,
    /// The first `log_limit` events.
    pub events: Vec<Event>,
}

impl TrajectoryEstimate {
    pub fn covers(&self, value: f64) -> bool {
        (self.mean_age - value).abs() <= self.half_width_95
    }
}

const BATCHES: usize = 32;
// Student t quantile, 0.975, 31 degrees of freedom
const T_95_31: f64 = 2.039_513_446;

struct Area {
    start: f64,
    width: f64,
    batches: [f64; BATCHES],
}

impl Area {
    /// Adds the integral of `t - u` over `[t0, t1]`, split across batches.
    fn add(&mut self, mut t0: f64, t1: f64, u: f64) {
        while t0 < t1 {
            let b = (((t0 - self.start) / self.width) as usize).min(BATCHES - 1);
            let edge = if b == BATCHES - 1 { t1 } else { self.start + (b + 1) as f64 * self.width };
            let t = edge.min(t1);
            self.batches[b] += 0.5 * ((t - u) * (t - u) - (t0 - u) * (t0 - u));
            if t <= t0 {
                break;
            }
            t0 = t;
        }
    }
}

/// Event-driven simulation of the transmitter and receiver up to time
/// `horizon`, recording at most `log_limit` events.
///
/// Each Poisson arrival carries a realization drawn from the full source
/// pmf; the policy decides whether it is dropped, encoded or answered with
/// the empty symbol. Arrivals during a transmission are blocked. A delivery
/// resets the age to the time since its arrival unless it is a
/// non-resetting empty symbol.
pub fn simulate_trajectory(config: &SimConfig, horizon: f64, log_limit: usize) -> Result<TrajectoryEstimate> {
    if !(horizon.is_finite() && horizon > 0.0) {
        bail!(InvalidParameter, "horizon must be finite and > 0, got {horizon}");
    }
    let cfg = &config.policy;
    let k = cfg.k;
    let lambda = cfg.lambda;
    let source_cdf = cdf(config.pmf.probs());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(u64::MAX);

    let mut out = TrajectoryEstimate {
        mean_age: 0.0,
        half_width_95: 0.0,
        window: (0.0, horizon),
        arrivals: 0,
        blocked: 0,
        discarded: 0,
        transmissions: 0,
        resets: 0,
        empty_deliveries: 0,
        events: Vec::new(),
    };
    let log = |out: &mut TrajectoryEstimate, time: f64, kind: EventKind, u: f64| {
        if out.events.len() < log_limit {
            out.events.push(Event { time, kind, age: time - u });
        }
    };

    // u: generation time of the freshest delivered update; None until the
    // first reset, before which no area is counted
    let mut u: Option<f64> = None;
    let mut area: Option<Area> = None;
    let mut mark = 0.0;
    let mut t = exponential(&mut rng, lambda);
    while t < horizon {
        out.arrivals += 1;
        let symbol = categorical(&source_cdf, uniform(&mut rng)) + 1;
        let u_now = u.unwrap_or(0.0);
        log(&mut out, t, EventKind::Arrival { symbol }, u_now);
        let head = symbol <= k;
        // (codeword symbol, length, resets)
        let action = match cfg.policy {
            Policy::HighestK => head.then(|| (Some(symbol), config.lengths[symbol - 1], true)),
            Policy::Randomized { alpha } => {
                (head || uniform(&mut rng) < alpha).then(|| (Some(symbol), config.lengths[symbol - 1], true))
            }
            Policy::EmptyNoReset { empty_len } => {
                Some(if head { (Some(symbol), config.lengths[symbol - 1], true) } else { (None, empty_len, false) })
            }
            Policy::EmptyReset => Some(if head {
                (Some(symbol), config.lengths[symbol - 1], true)
            } else {
                (None, config.lengths[k], true)
            }),
        };
        let Some((code, length, resets)) = action else {
            out.discarded += 1;
            log(&mut out, t, EventKind::Discarded { symbol }, u_now);
            t += exponential(&mut rng, lambda);
            continue;
        };
        out.transmissions += 1;
        log(&mut out, t, EventKind::Transmit { symbol: code, length }, u_now);
        let done = t + length;
        let mut next = t + exponential(&mut rng, lambda);
        while next < done {
            out.blocked += 1;
            if next < horizon {
                log(&mut out, next, EventKind::Blocked, u_now);
            }
            next += exponential(&mut rng, lambda);
        }
        if done >= horizon {
            break;
        }
        if code.is_none() {
            out.empty_deliveries += 1;
        }
        if resets {
            match (&mut area, u) {
                (Some(a), Some(prev)) => a.add(mark, done, prev),
                _ => {
                    area =
                        Some(Area { start: done, width: (horizon - done) / BATCHES as f64, batches: [0.0; BATCHES] });
                    out.window.0 = done;
                }
            }
            u = Some(t);
            mark = done;
            out.resets += 1;
        }
        log(&mut out, done, EventKind::Delivered { symbol: code, reset: resets }, u.unwrap_or(0.0));
        t = next;
    }

    let (Some(mut a), Some(prev)) = (area, u) else {
        bail!(InvalidParameter, "no age-resetting delivery before the horizon {horizon}");
    };
    a.add(mark, horizon, prev);
    let span = horizon - a.start;
    out.mean_age = a.batches.iter().sum::<f64>() / span;
    let means: Vec<f64> = a.batches.iter().map(|x| x / a.width).collect();
    let m = means.iter().sum::<f64>() / BATCHES as f64;
    let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (BATCHES - 1) as f64;
    out.half_width_95 = T_95_31 * math::sqrt(var / BATCHES as f64);
    Ok(out)
}
