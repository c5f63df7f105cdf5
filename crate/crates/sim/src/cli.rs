//! Command-line front end.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use irsopt_core::complexity::{cost, CostQuery, Method as CostMethod};
use irsopt_core::config::{AnglePair, CsiErrorVariance, LinkAngles, LosScaling, PathLoss, SystemConfig};
use irsopt_core::rng::{stream_rng, Stream};
use irsopt_core::solver::{baseline_no_irs, baseline_random_phase};
use serde::Serialize;

use crate::config::{parse_value_list, ConfigError, RunConfig};
use crate::harness::{run_convergence, run_sweep, HarnessError, Method, SweepParam, SweepSpec, Trial};
use crate::io::{self, Artifact, CostRow, TraceRow};

#[derive(Debug, Parser)]
#[command(name = "irsopt", version, about = "Precoder and reflecting-surface phase optimization for MIMO links")]
pub struct Cli {
    /// TOML or JSON configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for output files.
    #[arg(long, global = true, env = "IRSOPT_OUT_DIR", default_value = ".", value_name = "DIR")]
    pub out_dir: PathBuf,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Only errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize one channel realization and write its iteration trace.
    Solve(SolveArgs),
    /// Average rates over realizations while sweeping one parameter.
    Sweep(SweepArgs),
    /// Average per-iteration rate traces at several power levels.
    Convergence(ConvergenceArgs),
    /// Complex-multiplication counts of the optimizer and four reference methods.
    Complexity(ComplexityArgs),
}

/// Parsed `--values` / `--powers` argument.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueList(pub Vec<f64>);

/// Parsed `--methods` argument.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodList(pub Vec<Method>);

fn value_list(s: &str) -> Result<ValueList, String> {
    parse_value_list(s).map(ValueList).map_err(|e| e.to_string())
}

fn method_list(s: &str) -> Result<MethodList, String> {
    s.split(',').map(|m| m.trim().parse()).collect::<Result<_, _>>().map(MethodList)
}

fn angle_list(s: &str) -> Result<LinkAngles, String> {
    let v = parse_value_list(s).map_err(|e| e.to_string())?;
    match v.as_slice() {
        &[a, b, c, d, e, f] => Ok(LinkAngles {
            irs_rx: AnglePair { aod: a, aoa: b },
            direct: AnglePair { aod: c, aoa: d },
            tx_irs: AnglePair { aod: e, aoa: f },
        }),
        _ => Err(format!("expected six angles, got {}", v.len())),
    }
}

fn path_loss(s: &str) -> Result<PathLoss, String> {
    match s {
        "applied" => Ok(PathLoss::Applied),
        "normalized" => Ok(PathLoss::Normalized),
        _ => Err("expected `applied` or `normalized`".into()),
    }
}

fn los_scaling(s: &str) -> Result<LosScaling, String> {
    match s {
        "unit_norm" => Ok(LosScaling::UnitNorm),
        "unit_entry" => Ok(LosScaling::UnitEntry),
        _ => Err("expected `unit_norm` or `unit_entry`".into()),
    }
}

fn csi_variance(s: &str) -> Result<CsiErrorVariance, String> {
    match s {
        "total_energy" => Ok(CsiErrorVariance::TotalEnergy),
        "per_entry" => Ok(CsiErrorVariance::PerEntry),
        _ => Err("expected `total_energy` or `per_entry`".into()),
    }
}

/// Overrides for every system and channel field.
#[derive(Debug, Clone, Default, Args)]
pub struct SystemOverrides {
    /// Transmit antennas.
    #[arg(long)]
    pub mt: Option<usize>,
    /// Receive antennas.
    #[arg(long)]
    pub mr: Option<usize>,
    /// Reflecting elements.
    #[arg(long)]
    pub mi: Option<usize>,
    /// Data streams.
    #[arg(long)]
    pub ms: Option<usize>,
    /// Transmit power in dB relative to the noise unit.
    #[arg(long, allow_hyphen_values = true)]
    pub power_db: Option<f64>,
    #[arg(long)]
    pub noise_power: Option<f64>,
    /// ADMM penalty.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Inverse gradient step.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Largest phase displacement per step; 0 uses `tau` unchanged.
    #[arg(long)]
    pub phase_step_limit: Option<f64>,
    /// Dual update step in [0, 1].
    #[arg(long)]
    pub dual_step: Option<f64>,
    /// Outer iterations.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Rate change (bits/s/Hz) counted as converged.
    #[arg(long)]
    pub convergence_tol: Option<f64>,
    /// Stop at the first converged iteration.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub early_stop: Option<bool>,
    /// Check solver invariants every iteration.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub check_invariants: Option<bool>,
    /// Rician factor in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub rician_factor_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub pathloss_ref_db: Option<f64>,
    #[arg(long)]
    pub pathloss_exponent: Option<f64>,
    #[arg(long)]
    pub ref_distance: Option<f64>,
    /// Link distance in metres.
    #[arg(long)]
    pub distance: Option<f64>,
    #[arg(long)]
    pub antenna_spacing: Option<f64>,
    #[arg(long)]
    pub wavelength: Option<f64>,
    /// `applied` or `normalized`.
    #[arg(long, value_parser = path_loss)]
    pub pathloss: Option<PathLoss>,
    /// `unit_norm` or `unit_entry`.
    #[arg(long, value_parser = los_scaling)]
    pub los_scaling: Option<LosScaling>,
    /// Six fixed angles in radians: surface-receiver, direct and
    /// transmitter-surface links, each as AoD,AoA.
    #[arg(long, value_parser = angle_list, allow_hyphen_values = true)]
    pub angles: Option<LinkAngles>,
    /// Channel estimation error level.
    #[arg(long)]
    pub csi_error_delta: Option<f64>,
    /// `total_energy` or `per_entry`.
    #[arg(long, value_parser = csi_variance)]
    pub csi_error_variance: Option<CsiErrorVariance>,
}

impl SystemOverrides {
    pub fn apply(&self, cfg: &mut SystemConfig) {
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { cfg.$field = v; })* };
        }
        macro_rules! set_channel {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { cfg.channel.$field = v; })* };
        }
        set!(mt, mr, mi, ms, power_db, noise_power, rho, tau, phase_step_limit, dual_step, k_max, seed);
        set!(convergence_tol, early_stop, check_invariants);
        set_channel!(rician_factor_db, pathloss_ref_db, pathloss_exponent, ref_distance, distance);
        set_channel!(antenna_spacing, wavelength, pathloss, los_scaling, csi_error_delta, csi_error_variance);
        if let Some(a) = self.angles {
            cfg.channel.angles = Some(a);
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub system: SystemOverrides,
    /// Record wall-clock time (outputs then differ between reruns).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub system: SystemOverrides,
    /// power_db, mi, mt, ms, delta or iterations.
    #[arg(long)]
    pub param: Option<SweepParam>,
    /// `start:step:stop` (inclusive) or a comma list.
    #[arg(long, value_parser = value_list, allow_hyphen_values = true)]
    pub values: Option<ValueList>,
    /// Channel realizations per value.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma list of admm_apg, random_phase, no_irs.
    #[arg(long, value_parser = method_list)]
    pub methods: Option<MethodList>,
    /// Record wall-clock time (outputs then differ between reruns).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub system: SystemOverrides,
    /// Power levels in dB, as a range or list.
    #[arg(long, value_parser = value_list, allow_hyphen_values = true)]
    pub powers: Option<ValueList>,
    /// Channel realizations per value.
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    #[command(flatten)]
    pub system: SystemOverrides,
    /// Outer iterations of ADMM-APG and PGM.
    #[arg(long)]
    pub iters: Option<u64>,
    /// LADMM inner iterations.
    #[arg(long)]
    pub ladmm_iters: Option<u64>,
    /// SPGM inner iterations.
    #[arg(long)]
    pub spgm_iters: Option<u64>,
    /// AO outer iterations.
    #[arg(long)]
    pub ao_iters: Option<u64>,
    /// AO random realizations.
    #[arg(long)]
    pub ao_realizations: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] irsopt_core::Error),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("writing outputs: {0}")]
    Io(#[from] std::io::Error),
}

/// Result of a subcommand: files to write and text for standard output.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub artifacts: Vec<Artifact>,
    pub stdout: String,
}

impl Cli {
    /// Configuration after applying file and flag overrides.
    pub fn resolve(&self) -> Result<RunConfig, AppError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        match &self.command {
            Command::Solve(a) => {
                a.system.apply(&mut cfg.system);
                cfg.timing |= a.timing;
            }
            Command::Sweep(a) => {
                a.system.apply(&mut cfg.system);
                if let Some(p) = a.param {
                    cfg.sweep.param = p;
                }
                if let Some(v) = &a.values {
                    cfg.sweep.values = v.0.clone();
                }
                if let Some(t) = a.trials {
                    cfg.sweep.trials = t;
                }
                if let Some(m) = &a.methods {
                    cfg.sweep.methods = m.0.clone();
                }
                cfg.timing |= a.timing;
            }
            Command::Convergence(a) => {
                a.system.apply(&mut cfg.system);
                if let Some(p) = &a.powers {
                    cfg.convergence.powers = p.0.clone();
                }
                if let Some(t) = a.trials {
                    cfg.convergence.trials = t;
                }
            }
            Command::Complexity(a) => {
                a.system.apply(&mut cfg.system);
                let c = &mut cfg.complexity;
                c.iterations = a.iters.unwrap_or(c.iterations);
                c.ladmm_iterations = a.ladmm_iters.unwrap_or(c.ladmm_iterations);
                c.spgm_iterations = a.spgm_iters.unwrap_or(c.spgm_iterations);
                c.ao_iterations = a.ao_iters.unwrap_or(c.ao_iterations);
                c.ao_realizations = a.ao_realizations.unwrap_or(c.ao_realizations);
            }
        }
        Ok(cfg)
    }

    /// Runs the subcommand without touching the file system.
    pub fn execute(&self) -> Result<Outputs, AppError> {
        let cfg = self.resolve()?;
        match &self.command {
            Command::Solve(_) => solve_outputs(&cfg),
            Command::Sweep(_) => sweep_outputs(&cfg),
            Command::Convergence(_) => convergence_outputs(&cfg),
            Command::Complexity(_) => complexity_outputs(&cfg),
        }
    }

    /// Runs the subcommand and writes its outputs.
    pub fn run(&self) -> Result<Vec<PathBuf>, AppError> {
        let out = self.execute()?;
        let written = io::write_all(&self.out_dir, &out.artifacts)?;
        print!("{}", out.stdout);
        for p in &written {
            log::info!("wrote {}", p.display());
        }
        Ok(written)
    }
}

#[derive(Serialize)]
struct SolveSummary {
    initial_rate: f64,
    final_rate: f64,
    random_phase_rate: f64,
    no_irs_rate: f64,
    converged_at: Option<usize>,
    iterations: usize,
    complex_mults: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_ms: Option<f64>,
    invariants: Option<irsopt_core::solver::InvariantStats>,
    phases: Vec<f64>,
}

fn solve_outputs(cfg: &RunConfig) -> Result<Outputs, AppError> {
    let sys = &cfg.system;
    sys.validate()?;
    let trial = Trial::draw(sys, sys.seed, 0, 0)?;
    let start = cfg.timing.then(Instant::now);
    let res = trial.run(Method::AdmmApg)?;
    let wall_ms = start.map(|s| s.elapsed().as_secs_f64() * 1e3);
    let mut rng = stream_rng(sys.seed, Stream::RandomPhase, 0, 0);
    let random = baseline_random_phase(&trial.cfg, &trial.estimate, &mut rng)?;
    let direct = baseline_no_irs(&trial.cfg, &trial.estimate)?;

    let mut rows = vec![TraceRow {
        iteration: 0,
        rate: res.initial_rate,
        lagrangian: None,
        primal_residual: None,
        extrapolation: None,
    }];
    rows.extend(res.trace.iter().map(|r| TraceRow {
        iteration: r.iteration,
        rate: r.rate,
        lagrangian: Some(r.lagrangian),
        primal_residual: Some(r.primal_residual),
        extrapolation: Some(r.extrapolation),
    }));
    let summary = SolveSummary {
        initial_rate: res.initial_rate,
        final_rate: trial.score(&res)?,
        random_phase_rate: trial.score(&random)?,
        no_irs_rate: trial.score(&direct)?,
        converged_at: res.converged_at,
        iterations: res.trace.len(),
        complex_mults: res.complex_mults,
        wall_ms,
        invariants: res.invariants,
        phases: res.theta.phases(),
    };
    let stdout = format!(
        "rate {:.4} bits/s/Hz (random phase {:.4}, no surface {:.4}), converged at {}\n",
        summary.final_rate,
        summary.random_phase_rate,
        summary.no_irs_rate,
        summary.converged_at.map_or("-".to_string(), |k| k.to_string()),
    );
    Ok(Outputs {
        artifacts: vec![
            Artifact { name: "solve_trace.csv".into(), bytes: io::trace_csv(&rows) },
            Artifact { name: "solve.json".into(), bytes: io::sidecar("solve", cfg, &summary) },
        ],
        stdout,
    })
}

fn sweep_outputs(cfg: &RunConfig) -> Result<Outputs, AppError> {
    let spec = SweepSpec {
        param: cfg.sweep.param,
        values: cfg.sweep.values.clone(),
        trials: cfg.sweep.trials,
        base: cfg.system.clone(),
        methods: cfg.sweep.methods.clone(),
        timing: cfg.timing,
    };
    let res = run_sweep(&spec)?;
    let csv = io::sweep_csv(&res);
    Ok(Outputs {
        stdout: String::from_utf8_lossy(&csv).into_owned(),
        artifacts: vec![
            Artifact { name: "sweep.csv".into(), bytes: csv },
            Artifact { name: "sweep.json".into(), bytes: io::sidecar("sweep", cfg, &res) },
        ],
    })
}

fn convergence_outputs(cfg: &RunConfig) -> Result<Outputs, AppError> {
    let res = run_convergence(&cfg.system, &cfg.convergence.powers, cfg.convergence.trials)?;
    let stdout = res
        .traces
        .iter()
        .map(|t| {
            let plateau = t.plateau_iteration(0.1).map_or("-".to_string(), |k| k.to_string());
            format!(
                "{} dB: final mean rate {:.4} bits/s/Hz, plateau (<0.1) from iteration {}\n",
                t.power_db,
                t.mean_rate.last().copied().unwrap_or(f64::NAN),
                plateau
            )
        })
        .collect();
    Ok(Outputs {
        artifacts: vec![
            Artifact { name: "convergence.csv".into(), bytes: io::convergence_csv(&res) },
            Artifact { name: "convergence.json".into(), bytes: io::sidecar("convergence", cfg, &res) },
        ],
        stdout,
    })
}

/// Cost rows for every method.
pub fn cost_rows(cfg: &RunConfig) -> Result<Vec<CostRow>, AppError> {
    let s = &cfg.system;
    let c = &cfg.complexity;
    let q = CostQuery::new(s.mt as u64, s.mr as u64, s.mi as u64, s.ms as u64, c.iterations)
        .with_ladmm_iterations(c.ladmm_iterations)
        .with_spgm_iterations(c.spgm_iterations)
        .with_ao(c.ao_iterations, c.ao_realizations);
    CostMethod::ALL
        .into_iter()
        .map(|m| {
            let cc = cost(m, &q)?;
            Ok(CostRow {
                method: m.name().to_string(),
                per_iteration: cc.per_iteration(),
                repetitions: cc.repetitions,
                one_time: cc.one_time(),
                total: cc.total(),
            })
        })
        .collect()
}

fn complexity_outputs(cfg: &RunConfig) -> Result<Outputs, AppError> {
    let rows = cost_rows(cfg)?;
    let csv = io::complexity_csv(&rows);
    Ok(Outputs {
        stdout: String::from_utf8_lossy(&csv).into_owned(),
        artifacts: vec![
            Artifact { name: "complexity.csv".into(), bytes: csv },
            Artifact { name: "complexity.json".into(), bytes: io::sidecar("complexity", cfg, &rows) },
        ],
    })
}
