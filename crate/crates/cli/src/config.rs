//! Run configuration shared by every subcommand. The same struct is parsed
//! from flags and from the JSON file given by `--config`; flags win.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use selenc_core::{sim, Pmf, Policy, PolicyConfig, PolicyKind, SolverSettings};

use crate::error::{config_error, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Zipf,
    Dyadic,
    Uniform,
}

/// Solver overrides; only settable from the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SolverConfig {
    pub theta_tolerance: Option<f64>,
    pub kraft_tolerance: Option<f64>,
    pub max_outer_iterations: Option<usize>,
    pub max_inner_iterations: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    /// JSON file with any of these options (kebab-case keys); flags override it
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Pmf file: one probability per line, non-increasing; `#` starts a comment
    #[arg(long, conflicts_with = "family")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pmf: Option<PathBuf>,

    /// Built-in source family
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,

    /// Alphabet size for --family
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,

    /// Zipf exponent
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,

    /// highest-k, randomized, empty-noreset or empty-reset [default: highest-k]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,

    /// Number of encoded head realizations; sweeps accept a comma list
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<usize>>,

    /// Probability of encoding a tail realization (randomized policy)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,

    /// Empty-symbol codeword length in bits (empty-noreset policy)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empty_len: Option<f64>,

    /// Poisson arrival rate; sweeps and select accept a comma list
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,

    /// Sweep grid as `start:step:end` or a comma list
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,

    /// Rows kept in the select CSV [default: all]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top: Option<usize>,

    /// Renewal cycles to simulate [default: 1000000]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycles: Option<u64>,

    /// Simulation seed [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Codeword lengths to simulate instead of the optimal ones, one per line
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lengths: Option<PathBuf>,

    /// Also run the event-driven trajectory simulator up to this time
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,

    /// Trajectory events written to events.csv [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_log: Option<usize>,

    /// Worker threads; 0 uses every core [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,

    /// Output directory [default: .]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    /// Also write long-format CSVs with one row per plotted point
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emit_plot_data: Option<bool>,

    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
}

macro_rules! overlay {
    ($top:expr, $base:expr, $($field:ident),*) => {
        RunConfig { config: $top.config, $($field: $top.$field.or($base.$field)),* }
    };
}

impl RunConfig {
    /// Fields of `self`, falling back to `base`.
    #[rustfmt::skip]
    fn over(self, base: RunConfig) -> RunConfig {
        overlay!(self, base, pmf, family, n, s, policy, k, alpha, empty_len, lambda, grid, top, cycles, seed,
            lengths, horizon, event_log, jobs, out, emit_plot_data, solver)
    }

    /// Applies `--config`, if any, under the flags. Relative paths inside the
    /// file are taken relative to the file.
    pub fn resolve(self) -> Result<Self> {
        let Some(path) = self.config.clone() else { return Ok(self) };
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let mut file: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Json { path: path.clone(), source: e })?;
        let dir = path.parent().unwrap_or(Path::new(""));
        file.pmf = file.pmf.map(|p| dir.join(p));
        file.lengths = file.lengths.map(|p| dir.join(p));
        // a source given on the command line replaces the file's source
        if self.pmf.is_some() {
            file.family = None;
        }
        if self.family.is_some() {
            file.pmf = None;
        }
        Ok(self.over(file))
    }

    pub fn source(&self) -> Result<Pmf> {
        match (&self.pmf, self.family) {
            (Some(_), Some(_)) => config_error("give either a pmf file or a family, not both"),
            (None, None) => config_error("no source: give --pmf FILE or --family zipf|dyadic|uniform"),
            (Some(path), None) => {
                if self.n.is_some() || self.s.is_some() {
                    return config_error("--n and --s only apply to --family");
                }
                Ok(Pmf::new(read_numbers(path)?)?)
            }
            (None, Some(family)) => {
                let Some(n) = self.n else { return config_error("--family needs --n") };
                Ok(match family {
                    Family::Zipf => {
                        let Some(s) = self.s else { return config_error("--family zipf needs --s") };
                        Pmf::zipf(n, s)?
                    }
                    _ if self.s.is_some() => return config_error("--s only applies to --family zipf"),
                    Family::Dyadic => Pmf::dyadic(n)?,
                    Family::Uniform => Pmf::uniform(n)?,
                })
            }
        }
    }

    /// Source description for output files.
    pub fn source_echo(&self) -> Value {
        match (&self.pmf, self.family) {
            (Some(p), _) => json!({ "pmf": p.display().to_string() }),
            (None, Some(Family::Zipf)) => json!({ "family": "zipf", "n": self.n, "s": self.s }),
            (None, Some(f)) => json!({ "family": f, "n": self.n }),
            (None, None) => Value::Null,
        }
    }

    pub fn policy_kind(&self) -> Result<PolicyKind> {
        match &self.policy {
            None => Ok(PolicyKind::HighestK),
            Some(s) => Ok(PolicyKind::from_str(s)?),
        }
    }

    /// The policy with its parameter, rejecting parameters it does not use.
    pub fn policy(&self) -> Result<Policy> {
        self.policy_for(self.policy_kind()?)
    }

    pub fn policy_for(&self, kind: PolicyKind) -> Result<Policy> {
        let (alpha, empty_len) = (self.alpha, self.empty_len);
        Ok(match kind {
            PolicyKind::HighestK | PolicyKind::EmptyReset => {
                if alpha.is_some() || empty_len.is_some() {
                    return config_error(format!("policy {kind} takes neither --alpha nor --empty-len"));
                }
                if kind == PolicyKind::HighestK {
                    Policy::HighestK
                } else {
                    Policy::EmptyReset
                }
            }
            PolicyKind::Randomized => {
                if empty_len.is_some() {
                    return config_error("--empty-len does not apply to the randomized policy");
                }
                let Some(alpha) = alpha else { return config_error("the randomized policy needs --alpha") };
                Policy::Randomized { alpha }
            }
            PolicyKind::EmptyNoReset => {
                if alpha.is_some() {
                    return config_error("--alpha does not apply to the empty-noreset policy");
                }
                let Some(empty_len) = empty_len else {
                    return config_error("the empty-noreset policy needs --empty-len");
                };
                Policy::EmptyNoReset { empty_len }
            }
        })
    }

    pub fn ks(&self) -> Result<Vec<usize>> {
        match &self.k {
            Some(ks) if !ks.is_empty() => Ok(ks.clone()),
            _ => config_error("--k is required"),
        }
    }

    pub fn single_k(&self) -> Result<usize> {
        match self.ks()?.as_slice() {
            [k] => Ok(*k),
            _ => config_error("this command takes a single --k"),
        }
    }

    pub fn lambdas(&self) -> Result<Vec<f64>> {
        match &self.lambda {
            Some(l) if !l.is_empty() => Ok(l.clone()),
            _ => config_error("--lambda is required"),
        }
    }

    pub fn single_lambda(&self) -> Result<f64> {
        match self.lambdas()?.as_slice() {
            [l] => Ok(*l),
            _ => config_error("this command takes a single --lambda"),
        }
    }

    /// Single operating point for solve and simulate.
    pub fn operating_point(&self, n: usize) -> Result<PolicyConfig> {
        let cfg = PolicyConfig::new(self.policy()?, self.single_k()?, self.single_lambda()?);
        cfg.validate(n)?;
        Ok(cfg)
    }

    pub fn settings(&self) -> Result<SolverSettings> {
        let mut s = SolverSettings::default();
        if let Some(c) = &self.solver {
            s.theta_tolerance = c.theta_tolerance.unwrap_or(s.theta_tolerance);
            s.kraft_tolerance = c.kraft_tolerance.unwrap_or(s.kraft_tolerance);
            s.max_outer_iterations = c.max_outer_iterations.unwrap_or(s.max_outer_iterations);
            s.max_inner_iterations = c.max_inner_iterations.unwrap_or(s.max_inner_iterations);
        }
        s.validate()?;
        Ok(s)
    }

    pub fn grid(&self) -> Result<Option<Vec<f64>>> {
        self.grid.as_deref().map(parse_grid).transpose()
    }

    pub fn cycles(&self) -> u64 {
        self.cycles.unwrap_or(sim::DEFAULT_CYCLES)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn emit_plot_data(&self) -> bool {
        self.emit_plot_data.unwrap_or(false)
    }

    pub fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))
    }
}

/// One number per non-blank line; `#` starts a comment.
pub fn read_numbers(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let x = body.parse::<f64>().map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("{body:?}: {e}"),
        })?;
        out.push(x);
    }
    if out.is_empty() {
        return Err(CliError::Parse { path: path.to_path_buf(), line: 0, message: "no values".into() });
    }
    Ok(out)
}

/// `start:step:end` (inclusive, points computed as `start + i * step`) or a
/// comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| CliError::Config(format!("grid value {s:?}: {e}")));
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [list] => list.split(',').map(num).collect::<Result<Vec<_>>>()?,
        [a, step, b] => {
            let (a, step, b) = (num(a)?, num(step)?, num(b)?);
            if !(step > 0.0 && b >= a && a.is_finite() && b.is_finite()) {
                return config_error(format!("grid {spec:?} needs step > 0 and start <= end"));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            if count > 1_000_000 {
                return config_error(format!("grid {spec:?} has {count} points"));
            }
            (0..count).map(|i| a + i as f64 * step).collect()
        }
        _ => return config_error(format!("grid {spec:?}: expected start:step:end or a comma list")),
    };
    if grid.iter().any(|x| !x.is_finite()) {
        return config_error(format!("grid {spec:?} has a non-finite value"));
    }
    Ok(grid)
}

/// Grid values that must be integers, such as `k`.
pub fn integer_values(grid: &[f64]) -> Result<Vec<usize>> {
    grid.iter()
        .map(|&x| {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                config_error(format!("grid value {x} is not a non-negative integer"))
            }
        })
        .collect()
}
