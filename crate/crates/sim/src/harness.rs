//! Monte-Carlo sweeps over channel realizations.
//!
//! Every trial owns its random streams, derived from the master seed, the
//! swept value and the trial index, so trials run in parallel and the
//! aggregate does not depend on scheduling. Sums are accumulated in trial
//! order with compensation.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use irsopt_core::channel::{generate_channel_set, ChannelSet};
use irsopt_core::config::SystemConfig;
use irsopt_core::rng::{child_seed, stream_rng, Stream};
use irsopt_core::solver::{baseline_no_irs, baseline_random_phase, solve, InvariantStats, SolveResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error("{param}={value}, trial {trial}: {source}")]
    Trial {
        param: SweepParam,
        value: f64,
        trial: usize,
        #[source]
        source: irsopt_core::Error,
    },
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Mean and standard error of the mean (zero for a single sample).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mut sum = CompensatedSum::default();
    xs.iter().for_each(|&x| sum.add(x));
    let mean = sum.value() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let mut sq = CompensatedSum::default();
    xs.iter().for_each(|&x| sq.add((x - mean) * (x - mean)));
    (mean, (sq.value() / (n - 1.0)).sqrt() / n.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    PowerDb,
    Mi,
    Mt,
    Ms,
    Delta,
    Iterations,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::PowerDb => "power_db",
            SweepParam::Mi => "mi",
            SweepParam::Mt => "mt",
            SweepParam::Ms => "ms",
            SweepParam::Delta => "delta",
            SweepParam::Iterations => "iterations",
        }
    }

    /// Whether the swept value changes matrix dimensions, in which case each
    /// value draws its own channels.
    pub fn changes_dimensions(self) -> bool {
        matches!(self, SweepParam::Mi | SweepParam::Mt | SweepParam::Ms)
    }

    /// `base` with the swept parameter set to `value`.
    pub fn apply(self, base: &SystemConfig, value: f64) -> Result<SystemConfig, HarnessError> {
        let count = |what: &str| -> Result<usize, HarnessError> {
            if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(HarnessError::InvalidSpec(format!("{what} needs a whole number, got {value}")))
            }
        };
        let mut cfg = base.clone();
        match self {
            SweepParam::PowerDb => cfg.power_db = value,
            SweepParam::Mi => cfg.mi = count("mi")?,
            SweepParam::Mt => cfg.mt = count("mt")?,
            SweepParam::Ms => cfg.ms = count("ms")?,
            SweepParam::Delta => cfg.channel.csi_error_delta = value,
            SweepParam::Iterations => cfg.k_max = count("iterations")?,
        }
        cfg.validate().map_err(|e| HarnessError::InvalidSpec(format!("{}={value}: {e}", self.name())))?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [SweepParam::PowerDb, SweepParam::Mi, SweepParam::Mt, SweepParam::Ms, SweepParam::Delta, SweepParam::Iterations]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown sweep parameter `{s}` (power_db, mi, mt, ms, delta, iterations)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    AdmmApg,
    RandomPhase,
    NoIrs,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::AdmmApg, Method::RandomPhase, Method::NoIrs];

    pub fn name(self) -> &'static str {
        match self {
            Method::AdmmApg => "admm_apg",
            Method::RandomPhase => "random_phase",
            Method::NoIrs => "no_irs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}` (admm_apg, random_phase, no_irs)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub trials: usize,
    pub base: SystemConfig,
    pub methods: Vec<Method>,
    /// Measure wall time per solve. Off by default so reruns are byte-identical.
    pub timing: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.values.is_empty() {
            return Err(HarnessError::InvalidSpec("value list is empty".into()));
        }
        if self.trials == 0 {
            return Err(HarnessError::InvalidSpec("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(HarnessError::InvalidSpec("no methods selected".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(HarnessError::InvalidSpec(format!("non-finite value {v}")));
        }
        for &v in &self.values {
            self.param.apply(&self.base, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub method: Method,
    pub mean_rate_bps_hz: f64,
    pub stderr: f64,
    pub mean_converged_iter: f64,
    pub mean_wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub param: SweepParam,
    pub seed: u64,
    pub trials: usize,
    pub rows: Vec<SweepRow>,
    /// Worst invariant deviations over all solves, when checking was on.
    pub invariants: Option<InvariantStats>,
}

impl SweepResult {
    pub fn row(&self, value: f64, method: Method) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.value == value && r.method == method)
    }

    /// Mean rates of one method in value order.
    pub fn means(&self, method: Method) -> Vec<f64> {
        self.rows.iter().filter(|r| r.method == method).map(|r| r.mean_rate_bps_hz).collect()
    }
}

/// Channels and seeds of one trial.
#[derive(Debug, Clone)]
pub struct Trial {
    /// Config with the trial's own seed (drives the initial phases).
    pub cfg: SystemConfig,
    /// Channels the rate is evaluated on.
    pub truth: ChannelSet,
    /// Channels the optimizers see; equal to `truth` without estimation error.
    pub estimate: ChannelSet,
    master: u64,
    value_key: u64,
    index: u64,
}

impl Trial {
    /// Draws the channels of trial `index`. Trials sharing `value_key` share
    /// channel realizations.
    pub fn draw(cfg: &SystemConfig, master: u64, value_key: u64, index: u64) -> irsopt_core::Result<Self> {
        let truth = generate_channel_set(cfg, &mut stream_rng(master, Stream::Channel, value_key, index))?;
        let delta = cfg.channel.csi_error_delta;
        let estimate = if delta > 0.0 {
            let mut rng = stream_rng(master, Stream::CsiError, value_key, index);
            truth.perturbed(delta, cfg.channel.csi_error_variance, &mut rng)
        } else {
            truth.clone()
        };
        let cfg = SystemConfig { seed: child_seed(master, value_key, index), ..cfg.clone() };
        Ok(Self { cfg, truth, estimate, master, value_key, index })
    }

    /// Runs one method on the estimate and scores it on the true channels.
    pub fn run(&self, method: Method) -> irsopt_core::Result<SolveResult> {
        let res = match method {
            Method::AdmmApg => solve(&self.cfg, &self.estimate, None)?,
            Method::RandomPhase => {
                let mut rng = stream_rng(self.master, Stream::RandomPhase, self.value_key, self.index);
                baseline_random_phase(&self.cfg, &self.estimate, &mut rng)?
            }
            Method::NoIrs => baseline_no_irs(&self.cfg, &self.estimate)?,
        };
        Ok(res)
    }

    /// Rate of `res` on the true channels.
    pub fn score(&self, res: &SolveResult) -> irsopt_core::Result<f64> {
        res.evaluate_on(&self.truth, self.cfg.snr_scale())
    }
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    rate: f64,
    converged_iter: f64,
    wall_ms: f64,
}

fn run_trial(
    spec: &SweepSpec,
    cfg: &SystemConfig,
    value_key: u64,
    index: usize,
) -> irsopt_core::Result<(Vec<Outcome>, Option<InvariantStats>)> {
    let trial = Trial::draw(cfg, spec.base.seed, value_key, index as u64)?;
    let mut invariants: Option<InvariantStats> = None;
    let mut outcomes = Vec::with_capacity(spec.methods.len());
    for &method in &spec.methods {
        let start = spec.timing.then(Instant::now);
        let res = trial.run(method)?;
        let wall_ms = start.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3);
        if let Some(stats) = &res.invariants {
            invariants.get_or_insert_with(InvariantStats::new).merge(stats);
        }
        let converged_iter = match method {
            Method::AdmmApg => res.converged_at.unwrap_or(trial.cfg.k_max) as f64,
            _ => 0.0,
        };
        outcomes.push(Outcome { rate: trial.score(&res)?, converged_iter, wall_ms });
    }
    Ok((outcomes, invariants))
}

fn value_key(param: SweepParam, index: usize) -> u64 {
    if param.changes_dimensions() {
        index as u64 + 1
    } else {
        0
    }
}

/// Runs every method on `trials` realizations per swept value.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, HarnessError> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.values.len() * spec.methods.len());
    let mut invariants: Option<InvariantStats> = None;
    for (vi, &value) in spec.values.iter().enumerate() {
        let cfg = spec.param.apply(&spec.base, value)?;
        let key = value_key(spec.param, vi);
        let per_trial: Vec<_> = (0..spec.trials)
            .into_par_iter()
            .map(|t| {
                run_trial(spec, &cfg, key, t).map_err(|source| HarnessError::Trial {
                    param: spec.param,
                    value,
                    trial: t,
                    source,
                })
            })
            .collect::<Result<_, _>>()?;
        for (_, stats) in &per_trial {
            if let Some(s) = stats {
                invariants.get_or_insert_with(InvariantStats::new).merge(s);
            }
        }
        for (mi, &method) in spec.methods.iter().enumerate() {
            let column = |f: fn(&Outcome) -> f64| per_trial.iter().map(|(o, _)| f(&o[mi])).collect::<Vec<_>>();
            let (mean, stderr) = mean_stderr(&column(|o| o.rate));
            rows.push(SweepRow {
                value,
                method,
                mean_rate_bps_hz: mean,
                stderr,
                mean_converged_iter: mean_stderr(&column(|o| o.converged_iter)).0,
                mean_wall_ms: mean_stderr(&column(|o| o.wall_ms)).0,
            });
        }
        log::info!("{}={value}: {} trials done", spec.param, spec.trials);
    }
    Ok(SweepResult { param: spec.param, seed: spec.base.seed, trials: spec.trials, rows, invariants })
}

/// Mean rate per iteration, index 0 being the initial point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    pub power_db: f64,
    pub mean_rate: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl ConvergenceTrace {
    /// First iteration after which every per-iteration change of the mean
    /// trace stays below `tol`.
    pub fn plateau_iteration(&self, tol: f64) -> Option<usize> {
        let n = self.mean_rate.len();
        (1..n).find(|&k| {
            self.mean_rate[k..].windows(2).all(|w| (w[1] - w[0]).abs() < tol)
                && (self.mean_rate[k] - self.mean_rate[k - 1]).abs() < tol
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceResult {
    pub seed: u64,
    pub trials: usize,
    pub traces: Vec<ConvergenceTrace>,
    pub invariants: Option<InvariantStats>,
}

/// Full ADMM traces (no early stop) averaged over trials, one per power level.
/// Channel realizations are shared across power levels.
pub fn run_convergence(cfg: &SystemConfig, powers: &[f64], trials: usize) -> Result<ConvergenceResult, HarnessError> {
    if powers.is_empty() {
        return Err(HarnessError::InvalidSpec("power list is empty".into()));
    }
    if trials == 0 {
        return Err(HarnessError::InvalidSpec("trials must be at least 1".into()));
    }
    let base = SystemConfig { early_stop: false, ..cfg.clone() };
    let mut traces = Vec::with_capacity(powers.len());
    let mut invariants: Option<InvariantStats> = None;
    for &power_db in powers {
        let cfg = SweepParam::PowerDb.apply(&base, power_db)?;
        let runs: Vec<_> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let run = || -> irsopt_core::Result<_> {
                    let trial = Trial::draw(&cfg, base.seed, 0, t as u64)?;
                    let res = trial.run(Method::AdmmApg)?;
                    let mut rates = Vec::with_capacity(res.trace.len() + 1);
                    rates.push(res.initial_rate);
                    rates.extend(res.rates());
                    Ok((rates, res.invariants))
                };
                run().map_err(|source| HarnessError::Trial {
                    param: SweepParam::PowerDb,
                    value: power_db,
                    trial: t,
                    source,
                })
            })
            .collect::<Result<_, _>>()?;
        for (_, stats) in &runs {
            if let Some(s) = stats {
                invariants.get_or_insert_with(InvariantStats::new).merge(s);
            }
        }
        let len = cfg.k_max + 1;
        let (mean_rate, stderr) =
            (0..len).map(|k| mean_stderr(&runs.iter().map(|(r, _)| r[k]).collect::<Vec<_>>())).unzip();
        traces.push(ConvergenceTrace { power_db, mean_rate, stderr });
    }
    Ok(ConvergenceResult { seed: base.seed, trials, traces, invariants })
}
