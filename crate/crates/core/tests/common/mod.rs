//! Oracles shared by the integration tests. Nothing here calls into the
//! solver; the age formulas are restated from the renewal-reward identity.

#![allow(dead_code)]

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use selenc_core::{Pmf, Policy, PolicyConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

pub fn range(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}

pub fn log_range(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * unit(rng)).exp()
}

pub fn int(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    lo + (rng.next_u64() % (hi - lo + 1) as u64) as usize
}

/// Random non-increasing pmf with entries bounded away from zero.
pub fn random_pmf(rng: &mut ChaCha8Rng, n: usize) -> Pmf {
    let w: Vec<f64> = (0..n).map(|_| range(rng, 0.02, 1.0)).collect();
    Pmf::sorted_from(&w).unwrap().0
}

/// Random valid configuration over all four policies.
pub fn random_config(rng: &mut ChaCha8Rng, max_n: usize) -> (Pmf, PolicyConfig) {
    let n = int(rng, 2, max_n);
    let pmf = random_pmf(rng, n);
    let lambda = log_range(rng, 0.05, 20.0);
    let policy = match rng.next_u64() % 4 {
        0 => Policy::HighestK,
        1 => Policy::Randomized { alpha: range(rng, 0.05, 1.0) },
        2 => Policy::EmptyNoReset { empty_len: range(rng, 0.5, 6.0) },
        _ => Policy::EmptyReset,
    };
    let (lo, hi) = policy.k_range(n);
    let k = int(rng, lo, hi);
    (pmf, PolicyConfig::new(policy, k, lambda))
}

/// `(E[W], E[W^2])` written out per policy.
pub fn waiting(pmf: &Pmf, cfg: &PolicyConfig) -> (f64, f64) {
    let p = pmf.probs();
    let head: f64 = p[..cfg.k].iter().sum();
    let tail: f64 = p[cfg.k..].iter().sum();
    let expo = |rate: f64| (1.0 / rate, 2.0 / (rate * rate));
    match cfg.policy {
        Policy::HighestK => expo(cfg.lambda * head),
        Policy::Randomized { alpha } => expo(cfg.lambda * (head + alpha * tail)),
        Policy::EmptyReset => expo(cfg.lambda),
        Policy::EmptyNoReset { empty_len: c } => {
            // W = (M - 1) c + G, G ~ Exp(lambda q), with M - 1 and G
            // dependent through M: E[(M-1) G] = E[(M-1) M] / lambda
            let q = head;
            let l = cfg.lambda;
            let m1 = 1.0 / q;
            let m2 = (2.0 - q) / (q * q);
            let mean = c * (m1 - 1.0) + m1 / l;
            let second = c * c * (m2 - 2.0 * m1 + 1.0) + 2.0 * c * (m2 - m1) / l + (m2 + m1) / (l * l);
            (mean, second)
        }
    }
}

/// Probabilities the lengths are scored against, in codeword order.
pub fn encoding_probs(pmf: &Pmf, cfg: &PolicyConfig) -> Vec<f64> {
    let p = pmf.probs();
    let k = cfg.k;
    match cfg.policy {
        Policy::HighestK | Policy::EmptyNoReset { .. } => {
            let q: f64 = p[..k].iter().sum();
            p[..k].iter().map(|x| x / q).collect()
        }
        Policy::Randomized { alpha } => {
            let w: Vec<f64> = p.iter().enumerate().map(|(i, x)| if i < k { *x } else { alpha * x }).collect();
            let q: f64 = w.iter().sum();
            w.iter().map(|x| x / q).collect()
        }
        Policy::EmptyReset => {
            let mut v = p[..k].to_vec();
            v.push(p[k..].iter().sum());
            v
        }
    }
}

pub fn budget(cfg: &PolicyConfig) -> f64 {
    match cfg.policy {
        Policy::EmptyNoReset { empty_len } => 1.0 - 2f64.powf(-empty_len),
        _ => 1.0,
    }
}

/// Average age of `lengths` from `E[Y^2] / (2 E[Y]) + E[S]` with `Y = S + W`.
pub fn oracle_age(probs: &[f64], lengths: &[f64], w: (f64, f64)) -> f64 {
    let s1: f64 = probs.iter().zip(lengths).map(|(p, l)| p * l).sum();
    let s2: f64 = probs.iter().zip(lengths).map(|(p, l)| p * l * l).sum();
    let y1 = s1 + w.0;
    let y2 = s2 + 2.0 * s1 * w.0 + w.1;
    y2 / (2.0 * y1) + s1
}

/// Minimizes `f` over lengths meeting `sum 2^-l = budget` by a zooming grid
/// over the Kraft weights `x_i = 2^-l_i / budget` (a point of the simplex).
/// Returns `(min, lengths)`.
pub fn grid_min_on_kraft_manifold(m: usize, budget: f64, f: impl Fn(&[f64]) -> f64) -> (f64, Vec<f64>) {
    let dims = m - 1;
    let to_lengths = |x: &[f64]| -> Option<Vec<f64>> {
        let rest = 1.0 - x.iter().sum::<f64>();
        if rest <= 0.0 || x.iter().any(|&v| v <= 0.0 || v >= 1.0) {
            return None;
        }
        Some(x.iter().chain(std::iter::once(&rest)).map(|v| -(budget * v).log2()).collect())
    };
    if dims == 0 {
        let l = to_lengths(&[]).unwrap();
        return (f(&l), l);
    }
    let mut lo = vec![0.0; dims];
    let mut hi = vec![1.0; dims];
    let mut points = 48;
    let mut best = (f64::INFINITY, Vec::new(), Vec::new());
    for _level in 0..16 {
        let steps: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| (b - a) / points as f64).collect();
        let mut idx = vec![0usize; dims];
        'grid: loop {
            let x: Vec<f64> = (0..dims).map(|d| lo[d] + (idx[d] as f64 + 0.5) * steps[d]).collect();
            if let Some(l) = to_lengths(&x) {
                let v = f(&l);
                if v < best.0 {
                    best = (v, x, l);
                }
            }
            for i in idx.iter_mut() {
                *i += 1;
                if *i < points {
                    continue 'grid;
                }
                *i = 0;
            }
            break;
        }
        for d in 0..dims {
            let c = best.1[d];
            lo[d] = (c - 2.0 * steps[d]).max(0.0);
            hi[d] = (c + 2.0 * steps[d]).min(1.0);
        }
        points = 20;
    }
    (best.0, best.2)
}

/// Root of `l + r - (beta ln2 / p) 2^-l = 0` by bisection; the left side is
/// increasing in `l`.
pub fn stationary_length(p: f64, beta: f64, r: f64) -> f64 {
    let g = |l: f64| l + r - beta * std::f64::consts::LN_2 / p * 2f64.powf(-l);
    let (mut a, mut b) = (-200.0, 200.0);
    assert!(g(a) < 0.0 && g(b) > 0.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
