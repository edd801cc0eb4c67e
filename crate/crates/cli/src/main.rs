//! Command-line front end: regenerates the benchmark figures at desk scale
//! and runs single beamforming designs or ROC sweeps, writing CSV/JSON
//! artifacts with full provenance headers.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use isac_core::beamforming::{
    feasibility_check, optimize_gaussian_only, optimize_mf_superimposed, optimize_proposed,
    plan_time_switching, DesignProblem,
};
use isac_core::experiments::{
    np_detection_probability, roc_table, run_mc_validation, run_pd_map, run_qq, run_tradeoff,
    ExperimentKind, ExperimentSpec, GridSpecDb,
};
use isac_core::model::{db_to_linear, load_scenario, sample_channel_set, sensing_snrs, Scenario};
use isac_core::{OperatingPoint, TailProb};

#[derive(Parser)]
#[command(
    name = "isac",
    about = "Bistatic ISAC detection: closed-form analysis, beamforming optimization, Monte Carlo validation",
    version
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Scenario file (JSON); defaults to the baseline configuration.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Master seed for channels and Monte Carlo trials.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Monte Carlo trials per batch.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Independent channel realizations for averaged sweeps.
    #[arg(long, global = true)]
    realizations: Option<usize>,
}

#[derive(Args, Clone)]
struct GridArgs {
    #[arg(long, allow_hyphen_values = true)]
    grid_min_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    grid_max_db: Option<f64>,
    #[arg(long)]
    grid_step_db: Option<f64>,
}

impl GridArgs {
    fn apply(&self, grid: &mut GridSpecDb) {
        if let Some(v) = self.grid_min_db {
            grid.min_db = v;
        }
        if let Some(v) = self.grid_max_db {
            grid.max_db = v;
        }
        if let Some(v) = self.grid_step_db {
            grid.step_db = v;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Detection-probability map over the received-SNR plane with Monte
    /// Carlo spot checks.
    PdMap {
        #[command(flatten)]
        grid: GridArgs,
        /// False-alarm probability of the map.
        #[arg(long, default_value_t = 1e-4)]
        p_fa: f64,
        /// Trials per spot check.
        #[arg(long, default_value_t = 20_000)]
        spot_trials: usize,
    },
    /// Exact vs. asymptotic detection probabilities over the SNR grid.
    ApproxQq {
        #[command(flatten)]
        grid: GridArgs,
        /// Moderate default so the compared probabilities populate the
        /// mid-range instead of saturating at 0/1.
        #[arg(long, default_value_t = 1e-1)]
        p_fa: f64,
        /// Frame lengths to compare.
        #[arg(long = "l", value_delimiter = ',', default_values_t = [10usize, 1024])]
        l_values: Vec<usize>,
    },
    /// Rate/detection tradeoff across the four transmit schemes.
    Tradeoff {
        /// Rate thresholds in bits/slot.
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 2.0, 4.0, 6.0, 8.0, 10.0])]
        thresholds: Vec<f64>,
        #[arg(long, default_value_t = 1e-4)]
        p_fa: f64,
    },
    /// Monte Carlo validation of the closed-form probabilities; exits
    /// nonzero if any |z| exceeds 4.
    McValidate {
        #[command(flatten)]
        grid: GridArgs,
        /// Frame lengths in the validation grid.
        #[arg(long = "l", value_delimiter = ',', default_values_t = [8usize, 64])]
        l_values: Vec<usize>,
        /// False-alarm targets.
        #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-1])]
        p_fa_targets: Vec<f64>,
    },
    /// One beamforming run on a sampled channel: all four schemes, power
    /// splits, detection probabilities, and optimizer diagnostics.
    Solve {
        /// Communication SINR threshold in dB (overrides the scenario).
        #[arg(long, allow_hyphen_values = true)]
        gamma0_db: Option<f64>,
        #[arg(long, default_value_t = 1e-4)]
        p_fa: f64,
        /// Write per-iteration optimizer records as line-delimited JSON.
        #[arg(long)]
        dump_iterates: Option<PathBuf>,
    },
    /// Receiver operating characteristic at one operating point.
    Roc {
        #[arg(long, allow_hyphen_values = true, default_value_t = -5.0)]
        gamma_c_db: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = -5.0)]
        gamma_s_db: f64,
        #[arg(long, default_value_t = 64)]
        l: usize,
        /// Log-spaced false-alarm grid: smallest exponent.
        #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
        pfa_log_min: f64,
        #[arg(long, default_value_t = -0.3, allow_hyphen_values = true)]
        pfa_log_max: f64,
        #[arg(long, default_value_t = 20)]
        pfa_points: usize,
    },
}

fn load(common: &CommonArgs) -> Result<Scenario> {
    match &common.scenario {
        Some(path) => load_scenario(path).with_context(|| format!("loading {}", path.display())),
        None => Ok(Scenario::default()),
    }
}

fn build_spec(kind: ExperimentKind, common: &CommonArgs) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::new(kind, load(common)?, common.seed);
    if let Some(t) = common.trials {
        spec.n_trials = t;
    }
    if let Some(r) = common.realizations {
        spec.n_realizations = r;
    }
    Ok(spec)
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    let common = cli.common;
    match cli.command {
        Command::PdMap {
            grid,
            p_fa,
            spot_trials,
        } => {
            let mut spec = build_spec(ExperimentKind::PdMap, &common)?;
            grid.apply(&mut spec.gamma_grid);
            spec.p_fa = p_fa;
            spec.mc_spot_trials = spot_trials;
            let out = run_pd_map(&spec)?;
            let path = out.table.write_csv(&common.out)?;
            println!("wrote {}", path.display());
            if let (Some(gs), Some(gc)) = (out.crossing_gamma_s_db, out.crossing_gamma_c_db) {
                println!(
                    "P_D >= 0.99 crossings: gamma_s = {gs} dB (at gamma_c = -30 dB), gamma_c = {gc} dB (at gamma_s = -30 dB)"
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ApproxQq {
            grid,
            p_fa,
            l_values,
        } => {
            let mut spec = build_spec(ExperimentKind::ApproxQq, &common)?;
            grid.apply(&mut spec.gamma_grid);
            spec.p_fa = p_fa;
            spec.l_values = l_values;
            let out = run_qq(&spec)?;
            let path = out.table.write_csv(&common.out)?;
            println!("wrote {}", path.display());
            for (l, dev) in &out.max_deviation {
                println!("L = {l}: max |approx - exact| = {dev:.6}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Tradeoff { thresholds, p_fa } => {
            let mut spec = build_spec(ExperimentKind::Tradeoff, &common)?;
            spec.rate_thresholds = thresholds;
            spec.p_fa = p_fa;
            let out = run_tradeoff(&spec)?;
            let path = out.table.write_csv(&common.out)?;
            println!("wrote {}", path.display());
            if out.gate_failures.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                for failure in &out.gate_failures {
                    eprintln!("gate failure: {failure}");
                }
                Ok(ExitCode::FAILURE)
            }
        }
        Command::McValidate {
            grid,
            l_values,
            p_fa_targets,
        } => {
            let mut spec = build_spec(ExperimentKind::McValidate, &common)?;
            grid.apply(&mut spec.gamma_grid);
            spec.l_values = l_values;
            spec.p_fa_targets = p_fa_targets;
            let out = run_mc_validation(&spec)?;
            let path = out.table.write_csv(&common.out)?;
            println!("wrote {} (max |z| = {:.3})", path.display(), out.max_abs_z);
            if out.gate_failures.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                for failure in &out.gate_failures {
                    eprintln!("gate failure: {failure}");
                }
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Solve {
            gamma0_db,
            p_fa,
            dump_iterates,
        } => {
            let scenario = load(&common)?;
            let mut config = scenario.config.clone();
            if let Some(db) = gamma0_db {
                config.gamma_0 = db_to_linear(db);
            }
            let channels = sample_channel_set(&scenario.channel, &config, common.seed)?;
            let p_fa = TailProb::new(p_fa).map_err(|e| anyhow::anyhow!(e.to_string()))?;
            let problem = DesignProblem {
                config: config.clone(),
                channels: channels.clone(),
                p_fa,
            };

            let feas = feasibility_check(&problem);
            if !feas.feasible {
                bail!(
                    "infeasible: gamma_0 = {:.4} exceeds max achievable SINR {:.4}",
                    config.gamma_0,
                    feas.max_sinr
                );
            }

            let (design, op, diag) = optimize_proposed(&problem)?;
            let mut summary = serde_json::json!({
                "max_sinr": feas.max_sinr,
                "proposed": scheme_summary(&design, &op, p_fa)?,
                "diagnostics": {
                    "iterations": diag.iterations,
                    "converged": diag.converged,
                    "selected": diag.selected,
                    "objective_trace": diag.objective_trace,
                    "warnings": diag.warnings,
                },
            });
            if let Ok(design) = optimize_gaussian_only(&problem) {
                let op = sensing_snrs(&design, channels.alpha, &channels.a, &config);
                summary["gaussian_only"] = scheme_summary(&design, &op, p_fa)?;
            }
            if let Ok(design) = optimize_mf_superimposed(&problem) {
                let op = sensing_snrs(&design, channels.alpha, &channels.a, &config);
                summary["mf_superimposed"] = scheme_summary(&design, &op, p_fa)?;
            }
            let rate_threshold = (1.0 + config.gamma_0).log2();
            if let Ok(plan) = plan_time_switching(&problem, rate_threshold) {
                summary["time_switching"] = serde_json::json!({
                    "l_s": plan.l_s,
                    "l_c": plan.l_c,
                    "p_d": plan.p_d.value(),
                });
            }

            std::fs::create_dir_all(&common.out)?;
            let path = common.out.join("solve.json");
            std::fs::write(&path, serde_json::to_string_pretty(&summary)?)?;
            println!("wrote {}", path.display());

            if let Some(dump) = dump_iterates {
                let mut lines = String::new();
                for rec in &diag.records {
                    lines.push_str(&serde_json::to_string(rec)?);
                    lines.push('\n');
                }
                std::fs::write(&dump, lines)?;
                println!("wrote {}", dump.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Roc {
            gamma_c_db,
            gamma_s_db,
            l,
            pfa_log_min,
            pfa_log_max,
            pfa_points,
        } => {
            if pfa_points < 2 {
                bail!("need at least two false-alarm grid points");
            }
            let op = OperatingPoint::new(db_to_linear(gamma_c_db), db_to_linear(gamma_s_db), l)?;
            let pfa_values: Vec<f64> = (0..pfa_points)
                .map(|k| {
                    let t = k as f64 / (pfa_points - 1) as f64;
                    10f64.powf(pfa_log_min + t * (pfa_log_max - pfa_log_min))
                })
                .collect();
            let table = roc_table(&op, &pfa_values, common.trials.unwrap_or(0), common.seed)?;
            let path = table.write_csv(&common.out)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn scheme_summary(
    design: &isac_core::BeamformerDesign,
    op: &OperatingPoint,
    p_fa: TailProb,
) -> Result<serde_json::Value> {
    Ok(serde_json::json!({
        "w_power": design.comm_power(),
        "r0_power": design.deterministic_power(),
        "gamma_c": op.gamma_c(),
        "gamma_s": op.gamma_s(),
        "p_d": np_detection_probability(op, p_fa)?.value(),
    }))
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
