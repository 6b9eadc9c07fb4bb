use selenc_core::sim::{self, EventKind, SimConfig};
use selenc_core::{Pmf, Policy, PolicyConfig, SolverSettings};

fn solved(pmf: &Pmf, cfg: PolicyConfig, cycles: u64, seed: u64) -> (f64, SimConfig) {
    let sol = cfg.solve(pmf, &SolverSettings::default()).unwrap();
    (sol.theta, SimConfig::from_solution(pmf.clone(), cfg, &sol, cycles, seed).unwrap())
}

#[test]
fn each_policy_matches_its_closed_form() {
    let d = Pmf::dyadic(10).unwrap();
    let z = Pmf::zipf(20, 0.6).unwrap();
    let cases = [
        (d.clone(), PolicyConfig::new(Policy::HighestK, 5, 0.1)),
        (z.clone(), PolicyConfig::new(Policy::Randomized { alpha: 0.3 }, 6, 0.8)),
        (d.clone(), PolicyConfig::new(Policy::EmptyNoReset { empty_len: 2.0 }, 2, 5.0)),
        (z, PolicyConfig::new(Policy::EmptyReset, 4, 2.0)),
    ];
    for (i, (pmf, cfg)) in cases.into_iter().enumerate() {
        let (theta, sc) = solved(&pmf, cfg, 1_000_000, 100 + i as u64);
        let est = sim::simulate(&sc).unwrap();
        assert!(est.covers(theta), "{cfg:?}: {theta} vs {} +- {}", est.mean_age, est.half_width_95);
        let w = cfg.waiting_moments(&pmf).unwrap().mean;
        assert!(
            (est.mean_waiting - w).abs() <= est.waiting_half_width_95,
            "{cfg:?}: E[W] {w} vs {} +- {}",
            est.mean_waiting,
            est.waiting_half_width_95
        );
    }
}

#[test]
fn highest_five_dyadic_slow_arrivals_near_tabulated_age() {
    let (theta, sc) = solved(&Pmf::dyadic(10).unwrap(), PolicyConfig::new(Policy::HighestK, 5, 0.1), 1_000_000, 9);
    assert!((theta - 12.292).abs() < 5e-4);
    let est = sim::simulate(&sc).unwrap();
    assert!(est.covers(12.292), "{est:?}");
}

#[test]
fn identical_seed_is_bit_identical() {
    let (_, sc) =
        solved(&Pmf::dyadic(6).unwrap(), PolicyConfig::new(Policy::Randomized { alpha: 0.5 }, 2, 1.0), 50_000, 3);
    let a = sim::simulate(&sc).unwrap();
    assert_eq!(a, sim::simulate(&sc).unwrap());
    let mut other = sc.clone();
    other.seed = 4;
    assert_ne!(a.mean_age, sim::simulate(&other).unwrap().mean_age);
    let ta = sim::simulate_trajectory(&sc, 5_000.0, 10).unwrap();
    let tb = sim::simulate_trajectory(&sc, 5_000.0, 10).unwrap();
    assert_eq!((ta.mean_age, ta.events), (tb.mean_age, tb.events));
}

#[test]
fn trajectory_agrees_with_cycles() {
    let pmf = Pmf::zipf(12, 0.8).unwrap();
    for (i, cfg) in [
        PolicyConfig::new(Policy::HighestK, 4, 1.0),
        PolicyConfig::new(Policy::EmptyNoReset { empty_len: 1.5 }, 3, 2.0),
    ]
    .into_iter()
    .enumerate()
    {
        let (theta, sc) = solved(&pmf, cfg, 400_000, 40 + i as u64);
        let est = sim::simulate(&sc).unwrap();
        let horizon = 300_000.0 * est.sum_y / est.cycles as f64;
        let tr = sim::simulate_trajectory(&sc, horizon, 0).unwrap();
        let combined = (est.half_width_95.powi(2) + tr.half_width_95.powi(2)).sqrt();
        assert!((est.mean_age - tr.mean_age).abs() <= combined, "{cfg:?}: {est:?} vs {}", tr.mean_age);
        assert!(tr.covers(theta), "{cfg:?}: {theta} vs {} +- {}", tr.mean_age, tr.half_width_95);
    }
}

#[test]
fn non_resetting_empty_symbol_never_resets() {
    let (_, sc) =
        solved(&Pmf::dyadic(6).unwrap(), PolicyConfig::new(Policy::EmptyNoReset { empty_len: 2.0 }, 2, 3.0), 1, 11);
    let tr = sim::simulate_trajectory(&sc, 2_000.0, usize::MAX).unwrap();
    assert!(tr.empty_deliveries > 0 && tr.blocked > 0);
    let mut empties = 0;
    let mut last_age = None::<f64>;
    for e in &tr.events {
        match e.kind {
            EventKind::Delivered { symbol: None, reset } => {
                assert!(!reset);
                // the age keeps growing through an empty delivery
                if let Some(a) = last_age {
                    assert!(e.age >= a);
                }
                empties += 1;
            }
            EventKind::Delivered { symbol: Some(_), reset } => assert!(reset),
            EventKind::Discarded { .. } => panic!("nothing is discarded when every realization is answered"),
            _ => {}
        }
        last_age = Some(e.age);
    }
    assert_eq!(empties, tr.empty_deliveries);
}

#[test]
fn resetting_empty_symbol_resets() {
    let (_, sc) = solved(&Pmf::dyadic(6).unwrap(), PolicyConfig::new(Policy::EmptyReset, 2, 3.0), 1, 12);
    let tr = sim::simulate_trajectory(&sc, 500.0, usize::MAX).unwrap();
    assert!(tr.events.iter().any(|e| matches!(e.kind, EventKind::Delivered { symbol: None, reset: true })));
    assert!(tr.events.iter().all(|e| !matches!(e.kind, EventKind::Delivered { reset: false, .. })));
    // a transmission cut off by the horizon is never delivered
    assert!(tr.resets == tr.transmissions || tr.resets + 1 == tr.transmissions);
}

#[test]
fn highest_k_discards_tail() {
    let (_, sc) = solved(&Pmf::dyadic(6).unwrap(), PolicyConfig::new(Policy::HighestK, 2, 3.0), 1, 13);
    let tr = sim::simulate_trajectory(&sc, 500.0, usize::MAX).unwrap();
    for e in &tr.events {
        if let EventKind::Discarded { symbol } = e.kind {
            assert!(symbol > 2);
        }
        if let EventKind::Arrival { symbol } = e.kind {
            assert!((1..=6).contains(&symbol));
        }
    }
    assert!(tr.discarded > 0);
    assert!(sim::simulate_trajectory(&sc, 0.0, 0).is_err());
}
