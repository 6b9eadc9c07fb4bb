//! Subcommand drivers. Each returns whether every requested point
//! converged; fatal problems are errors.

use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::{json, Value};

use selenc_core::search::{self, SweepPoint};
use selenc_core::sim::{self, CycleAccumulator, EventKind, SimConfig, TrajectoryEstimate};
use selenc_core::{CodebookSolution, Pmf, Policy, PolicyConfig, PolicyKind, SelectionResult, SweepResult};

use crate::config::{integer_values, read_numbers, RunConfig};
use crate::error::{config_error, Result};
use crate::output::{num, OutDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Complete,
    /// Outputs were written but some points failed.
    Partial,
}

impl Status {
    fn from_complete(ok: bool) -> Self {
        if ok {
            Status::Complete
        } else {
            Status::Partial
        }
    }

    pub fn and(self, other: Status) -> Status {
        Status::from_complete(self == Status::Complete && other == Status::Complete)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    K,
    Alpha,
    EmptyLength,
}

impl SweepKind {
    fn command(self) -> &'static str {
        match self {
            SweepKind::K => "sweep-k",
            SweepKind::Alpha => "sweep-alpha",
            SweepKind::EmptyLength => "sweep-empty",
        }
    }
}

fn policy_json(cfg: &PolicyConfig) -> Value {
    let mut v = json!({ "name": cfg.policy.name(), "k": cfg.k, "lambda": cfg.lambda });
    match cfg.policy {
        Policy::Randomized { alpha } => v["alpha"] = json!(alpha),
        Policy::EmptyNoReset { empty_len } => v["empty_len"] = json!(empty_len),
        _ => {}
    }
    v
}

pub fn codebook_json(run: &RunConfig, cfg: &PolicyConfig, sol: &CodebookSolution) -> Value {
    let kkt_max =
        if sol.lengths.len() > 1 { sol.kkt_residuals().iter().fold(0f64, |m, r| m.max(r.abs())) } else { 0.0 };
    json!({
        "source": run.source_echo(),
        "policy": policy_json(cfg),
        "theta": sol.theta,
        "beta": sol.beta,
        "lengths": sol.lengths,
        "encoding_pmf": sol.encoding_pmf.probs(),
        "moments": { "mean": sol.moments.mean, "second": sol.moments.second },
        "waiting": { "mean": sol.waiting.mean, "second": sol.waiting.second },
        "kraft_budget": sol.kraft_budget,
        "kraft_sum": sol.kraft_sum(),
        "empty_length": sol.empty_length,
        "residuals": {
            "kraft": sol.kraft_residual,
            "kraft_slack": sol.kraft_slack,
            "p_theta": sol.p_theta_residual,
            "kkt_max": kkt_max,
        },
        "iterations": { "outer": sol.iterations, "inner": sol.inner_iterations },
    })
}

pub fn solve(run: &RunConfig) -> Result<Status> {
    let pmf = run.source()?;
    let cfg = run.operating_point(pmf.len())?;
    let sol = cfg.solve(&pmf, &run.settings()?)?;
    let out = OutDir::create(&run.out_dir())?;
    let path = out.write_json("codebook.json", codebook_json(run, &cfg, &sol))?;
    println!("{}", num(sol.theta));
    eprintln!("wrote {}", path.display());
    Ok(Status::Complete)
}

/// One curve of a sweep: its fixed parameters and the swept plan.
struct Curve {
    label: String,
    lambda: f64,
    k: Option<usize>,
    plan: Vec<(f64, PolicyConfig)>,
}

fn curves(run: &RunConfig, kind: SweepKind, pmf: &Pmf) -> Result<Vec<Curve>> {
    let lambdas = run.lambdas()?;
    let grid = run.grid()?;
    let mut out = Vec::new();
    match kind {
        SweepKind::K => {
            if run.k.is_some() {
                return config_error("sweep-k takes its k values from --grid, not --k");
            }
            let policy = run.policy()?;
            let (lo, hi) = policy.k_range(pmf.len());
            let ks = match &grid {
                Some(g) => integer_values(g)?,
                None => (lo..=hi).collect(),
            };
            for &lambda in &lambdas {
                let plan: Vec<_> = ks.iter().map(|&k| (k as f64, PolicyConfig::new(policy, k, lambda))).collect();
                for (_, c) in &plan {
                    c.validate(pmf.len())?;
                }
                out.push(Curve { label: format!("lambda{}", num(lambda)), lambda, k: None, plan });
            }
        }
        SweepKind::Alpha | SweepKind::EmptyLength => {
            let want = if kind == SweepKind::Alpha { PolicyKind::Randomized } else { PolicyKind::EmptyNoReset };
            if run.policy.is_some() && run.policy_kind()? != want {
                return config_error(format!("{} sweeps the {want} policy", kind.command()));
            }
            if run.alpha.is_some() || run.empty_len.is_some() {
                return config_error(format!("{} takes the swept values from --grid", kind.command()));
            }
            let grid = grid.unwrap_or_else(|| match kind {
                SweepKind::Alpha => search::default_alpha_grid(),
                _ => search::default_empty_grid(),
            });
            for k in run.ks()? {
                for &lambda in &lambdas {
                    let plan = match kind {
                        SweepKind::Alpha => search::alpha_plan(k, lambda, &grid)?,
                        _ => search::empty_length_plan(k, lambda, &grid)?,
                    };
                    for (_, c) in &plan {
                        c.validate(pmf.len())?;
                    }
                    let label = format!("k{k}_lambda{}", num(lambda));
                    out.push(Curve { label, lambda, k: Some(k), plan });
                }
            }
        }
    }
    Ok(out)
}

fn sweep_rows(r: &SweepResult) -> impl Iterator<Item = Vec<String>> + '_ {
    r.points
        .iter()
        .map(|p: &SweepPoint| vec![num(p.param), num(p.age), p.converged.to_string(), p.iterations.to_string()])
}

pub fn sweep(run: &RunConfig, kind: SweepKind) -> Result<Status> {
    let pmf = run.source()?;
    let settings = run.settings()?;
    let curves = curves(run, kind, &pmf)?;
    let pool = run.thread_pool()?;
    let out = OutDir::create(&run.out_dir())?;
    let cmd = kind.command();
    let single = curves.len() == 1;
    let mut status = Status::Complete;
    let mut plot = Vec::new();
    for curve in &curves {
        let points: Vec<SweepPoint> =
            pool.install(|| curve.plan.par_iter().map(|(p, c)| search::evaluate(&pmf, *p, c, &settings)).collect());
        let result = SweepResult::from_points(points)?;
        let name = if single { format!("{cmd}.csv") } else { format!("{cmd}_{}.csv", curve.label) };
        let path = out.write_csv(&name, &["param", "age", "converged", "iterations"], sweep_rows(&result))?;
        status = status.and(Status::from_complete(result.all_converged()));

        let mut line = format!("lambda={}", num(curve.lambda));
        if let Some(k) = curve.k {
            line = format!("k={k} {line}");
        }
        let ties: Vec<String> = result.ties.iter().map(|t| num(*t)).collect();
        println!(
            "{line} argmin={} age={} ties=[{}] failed={} -> {}",
            num(result.argmin_value),
            num(result.argmin_age),
            ties.join(","),
            result.failures().count(),
            path.display()
        );
        for f in result.failures() {
            if let Some(e) = &f.error {
                eprintln!("point {}: {e}", num(f.param));
            }
        }
        for p in result.points.iter().filter(|p| p.converged) {
            let mut row = vec![curve.label.clone(), num(curve.lambda)];
            row.extend(curve.k.map(|k| k.to_string()));
            row.extend([num(p.param), num(p.age)]);
            plot.push(row);
        }
    }
    if run.emit_plot_data() {
        let header: &[&str] = match kind {
            SweepKind::K => &["series", "lambda", "k", "age"],
            SweepKind::Alpha => &["series", "lambda", "k", "alpha", "age"],
            SweepKind::EmptyLength => &["series", "lambda", "k", "empty_len", "age"],
        };
        let path = out.write_csv(&format!("{cmd}_plot.csv"), header, plot)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(status)
}

fn selection_rows(r: &SelectionResult) -> impl Iterator<Item = Vec<String>> + '_ {
    r.ranked.iter().map(|e| vec![e.selection.to_string(), num(e.effective_rate), num(e.age)])
}

pub fn select(run: &RunConfig) -> Result<Status> {
    let pmf = run.source()?;
    if run.policy.is_some() && run.policy_kind()? != PolicyKind::HighestK {
        return config_error("select searches subsets under the highest-k policy only");
    }
    let settings = run.settings()?;
    let k = run.single_k()?;
    let lambdas = run.lambdas()?;
    for &lambda in &lambdas {
        PolicyConfig::new(Policy::HighestK, k, lambda).validate(pmf.len())?;
    }
    let subsets: Vec<_> = search::selection_plan(pmf.len(), k)?.collect();
    let top = run.top.unwrap_or(usize::MAX);
    let pool = run.thread_pool()?;
    let out = OutDir::create(&run.out_dir())?;
    let mut status = Status::Complete;
    let mut plot = Vec::new();
    for &lambda in &lambdas {
        let outcomes = pool.install(|| {
            subsets.par_iter().map(|sel| (sel.clone(), search::selection_age(&pmf, sel, lambda, &settings))).collect()
        });
        let result = SelectionResult::from_outcomes(outcomes, top)?;
        let name =
            if lambdas.len() == 1 { "select.csv".to_string() } else { format!("select_lambda{}.csv", num(lambda)) };
        let path = out.write_csv(&name, &["selection", "lambda_e", "age"], selection_rows(&result))?;
        status = status.and(Status::from_complete(result.failures.is_empty()));
        println!(
            "lambda={} {},{},{} evaluated={} failed={} -> {}",
            num(lambda),
            result.selection,
            num(result.effective_rate),
            num(result.age),
            result.evaluated,
            result.failures.len(),
            path.display()
        );
        for (sel, e) in &result.failures {
            eprintln!("subset {sel}: {e}");
        }
        plot.push(vec![num(lambda), result.selection.to_string(), num(result.effective_rate), num(result.age)]);
    }
    if run.emit_plot_data() {
        let path = out.write_csv("select_plot.csv", &["lambda", "selection", "lambda_e", "age"], plot)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(status)
}

/// Cycle simulation split over the pool; identical to [`sim::simulate`]
/// because the chunks are merged in order.
pub fn simulate_parallel(config: &SimConfig, pool: &rayon::ThreadPool) -> Result<sim::AgeEstimate> {
    let parts: Vec<CycleAccumulator> = pool.install(|| {
        sim::chunk_ranges(config.cycles)
            .into_par_iter()
            .map(|r| sim::simulate_range(config, r))
            .collect::<selenc_core::Result<_>>()
    })?;
    Ok(parts.iter().fold(CycleAccumulator::default(), |acc, p| acc.merge(p)).estimate()?)
}

fn event_row(time: f64, kind: &EventKind, age: f64) -> Vec<String> {
    let opt = |s: &Option<usize>| s.map(|v| v.to_string()).unwrap_or_else(|| "empty".into());
    let (name, symbol, length, reset) = match kind {
        EventKind::Arrival { symbol } => ("arrival", symbol.to_string(), String::new(), String::new()),
        EventKind::Blocked => ("blocked", String::new(), String::new(), String::new()),
        EventKind::Discarded { symbol } => ("discarded", symbol.to_string(), String::new(), String::new()),
        EventKind::Transmit { symbol, length } => ("transmit", opt(symbol), num(*length), String::new()),
        EventKind::Delivered { symbol, reset } => ("delivered", opt(symbol), String::new(), reset.to_string()),
    };
    vec![num(time), name.into(), symbol, length, reset, num(age)]
}

fn trajectory_json(t: &TrajectoryEstimate, analytic: f64) -> Value {
    json!({
        "mean_age": t.mean_age,
        "half_width_95": t.half_width_95,
        "covers_analytic": t.covers(analytic),
        "window": [t.window.0, t.window.1],
        "arrivals": t.arrivals,
        "blocked": t.blocked,
        "discarded": t.discarded,
        "transmissions": t.transmissions,
        "resets": t.resets,
        "empty_deliveries": t.empty_deliveries,
    })
}

pub fn simulate(run: &RunConfig) -> Result<Status> {
    let pmf = run.source()?;
    let cfg = run.operating_point(pmf.len())?;
    let (lengths, analytic, lengths_source) = match &run.lengths {
        Some(path) => {
            let l = read_numbers(path)?;
            let age = cfg.age_of_lengths(&pmf, &l)?;
            (l, age, json!(path.display().to_string()))
        }
        None => {
            let sol = cfg.solve(&pmf, &run.settings()?)?;
            (sol.lengths, sol.theta, json!("optimal"))
        }
    };
    let wait = cfg.waiting_moments(&pmf)?;
    let config = SimConfig::new(pmf, cfg, lengths, run.cycles(), run.seed())?;
    let pool = run.thread_pool()?;
    let est = simulate_parallel(&config, &pool)?;
    let out = OutDir::create(&run.out_dir())?;

    let mut summary = json!({
        "mean_age": est.mean_age,
        "half_width_95": est.half_width_95,
        "cycles": est.cycles,
        "seed": config.seed,
        "analytic_age": analytic,
        "covers_analytic": est.covers(analytic),
        "mean_waiting": est.mean_waiting,
        "waiting_half_width_95": est.waiting_half_width_95,
        "analytic_waiting": wait.mean,
        "mean_service": est.mean_service,
        "config": {
            "source": run.source_echo(),
            "policy": policy_json(&cfg),
            "lengths_from": lengths_source,
            "lengths": config.lengths,
            "cycles": config.cycles,
            "seed": config.seed,
        },
    });
    println!("{} +- {} (analytic {})", num(est.mean_age), num(est.half_width_95), num(analytic));

    let mut written: Vec<PathBuf> = Vec::new();
    if let Some(horizon) = run.horizon {
        let limit = run.event_log.unwrap_or(0);
        let t = sim::simulate_trajectory(&config, horizon, limit)?;
        summary["trajectory"] = trajectory_json(&t, analytic);
        summary["config"]["horizon"] = json!(horizon);
        println!("trajectory {} +- {}", num(t.mean_age), num(t.half_width_95));
        if limit > 0 {
            let rows = t.events.iter().map(|e| event_row(e.time, &e.kind, e.age));
            written.push(out.write_csv("events.csv", &["time", "event", "symbol", "length", "reset", "age"], rows)?);
        }
    } else if run.event_log.is_some() {
        return config_error("--event-log needs --horizon");
    }
    written.push(out.write_json("simulation.json", summary)?);
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(Status::Complete)
}
