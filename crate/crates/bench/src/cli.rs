//! Command-line interface.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use pdsg::problems::certify_constants;
use pdsg::problems::sizing::{scenario_count_discarding, scenario_count_robust};
use pdsg::Oracle;

use crate::config::{ExperimentConfig, Method};
use crate::error::BenchError;
use crate::harness::{self, RunPlan};

#[derive(Debug, Parser)]
#[command(name = "pdsg", version, about = "Primal-dual stochastic gradient benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an instance file and print its constants.
    Generate(GenerateArgs),
    /// Run one method over one or more seeds and write a CSV.
    Solve(ExperimentArgs),
    /// Run two or more methods on shared seeds; writes a combined CSV and a summary.
    Compare(ExperimentArgs),
    /// Check a parameter schedule against the step-size conditions.
    ValidateSchedule(ExperimentArgs),
    /// Scenario counts for sampled chance-constrained and robust programs.
    ScenarioSize(SizeArgs),
}

#[derive(Debug, Args, Default)]
pub struct ProblemArgs {
    /// Key = value configuration file, applied before the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Instance family: qcqp or scenario_lp.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Number of objective samples.
    #[arg(long = "N")]
    pub big_n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub second_stage_dim: Option<usize>,
    /// Instance generation seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ProblemArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        push(&mut v, "family", &self.family);
        push(&mut v, "n", &self.n);
        push(&mut v, "p", &self.p);
        push(&mut v, "N", &self.big_n);
        push(&mut v, "m", &self.m);
        push(&mut v, "second_stage_dim", &self.second_stage_dim);
        push(&mut v, "seed", &self.seed);
        v
    }
}

fn push<T: ToString>(v: &mut Vec<(&'static str, String)>, key: &'static str, val: &Option<T>) {
    if let Some(x) = val {
        v.push((key, x.to_string()));
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Output instance file.
    #[arg(long)]
    pub out: PathBuf,
    /// Sample points used for the sigma estimate.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
}

#[derive(Debug, Args, Default)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Load this instance file instead of generating one.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Method, or comma-separated methods for compare: pdsg, mirror_prox, reference.
    #[arg(long)]
    pub method: Option<String>,
    /// fixed_horizon, anytime or strongly_convex.
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Strong-convexity modulus override.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub mp_alpha: Option<f64>,
    #[arg(long)]
    pub mp_rho: Option<f64>,
    #[arg(long)]
    pub epochs: Option<u64>,
    /// Measurement cadence in epochs.
    #[arg(long)]
    pub cadence: Option<u64>,
    /// Comma-separated run seeds.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV file name inside the output directory.
    #[arg(long)]
    pub csv: Option<String>,
    /// Run even when the schedule validator reports a violation.
    #[arg(long)]
    pub force: bool,
}

impl ExperimentArgs {
    pub fn to_config(&self) -> Result<ExperimentConfig, BenchError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.problem.config {
            cfg.apply_file(path)?;
        }
        let mut v = self.problem.overrides();
        push(&mut v, "instance", &self.instance.as_ref().map(|p| p.display().to_string()));
        push(&mut v, "method", &self.method);
        push(&mut v, "schedule", &self.schedule);
        push(&mut v, "alpha", &self.alpha);
        push(&mut v, "rho", &self.rho);
        push(&mut v, "mu", &self.mu);
        push(&mut v, "mp_alpha", &self.mp_alpha);
        push(&mut v, "mp_rho", &self.mp_rho);
        push(&mut v, "epochs", &self.epochs);
        push(&mut v, "cadence", &self.cadence);
        push(&mut v, "seeds", &self.seeds);
        push(&mut v, "out", &self.out.as_ref().map(|p| p.display().to_string()));
        push(&mut v, "csv", &self.csv);
        if self.force {
            v.push(("force", "true".into()));
        }
        for (k, val) in v {
            cfg.set(k, &val)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SizeArgs {
    #[arg(long)]
    pub n: u64,
    /// Violation level.
    #[arg(long)]
    pub tau: f64,
    /// Confidence parameter.
    #[arg(long)]
    pub eps: f64,
    /// Number of discarded samples.
    #[arg(long, default_value_t = 0)]
    pub p: u64,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cmd: Command) -> Result<(), BenchError> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => experiment(a.to_config()?, false),
        Command::Compare(a) => experiment(a.to_config()?, true),
        Command::ValidateSchedule(a) => validate(a.to_config()?),
        Command::ScenarioSize(a) => scenario_size(a),
    }
}

fn generate(a: GenerateArgs) -> Result<(), BenchError> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &a.problem.config {
        cfg.apply_file(path)?;
    }
    for (k, v) in a.problem.overrides() {
        cfg.set(k, &v)?;
    }
    cfg.validate()?;
    let inst = harness::generate(&cfg)?;
    harness::write_instance_file(&a.out, &inst)?;
    let c = certify_constants(&inst, a.samples, cfg.instance_seed);
    println!("wrote {}", a.out.display());
    println!("F = {:.6e}", c.f_bound);
    println!("G = {:.6e}", c.g_bound);
    println!("sigma = {:.6e} (empirical, {} samples)", c.sigma, a.samples);
    if c.mu_computed {
        println!("mu = {:.6e}", c.mu);
    } else {
        println!("mu = not computed (n > {})", pdsg::problems::constants::EIGEN_DIM_LIMIT);
    }
    Ok(())
}

fn validate(cfg: ExperimentConfig) -> Result<(), BenchError> {
    let (inst, _) = harness::prepare_instance(&cfg)?;
    let consts = harness::validation_constants(&inst);
    let m = inst.num_constraints();
    let sched = harness::build_schedule(&cfg, m, &consts);
    let report = harness::check_schedule(&cfg, &sched, m, &consts);
    println!("schedule {} with m = {m}, G = {:.6e}", sched.descriptor(), consts.g_bound);
    print!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(BenchError::Schedule(report.to_string()))
    }
}

fn experiment(cfg: ExperimentConfig, compare: bool) -> Result<(), BenchError> {
    if compare && cfg.methods.len() < 2 {
        return Err(BenchError::Usage("compare needs at least two methods, e.g. --method pdsg,mirror_prox".into()));
    }
    if !compare && cfg.methods.len() != 1 {
        return Err(BenchError::Usage("solve runs a single method; use compare for several".into()));
    }
    fs::create_dir_all(&cfg.out).map_err(|e| BenchError::io(&cfg.out, e))?;
    let (inst, path) = harness::prepare_instance(&cfg)?;
    let consts = harness::validation_constants(&inst);
    let m = inst.num_constraints();
    let schedule = harness::build_schedule(&cfg, m, &consts);
    if cfg.methods.contains(&Method::Pdsg) {
        let report = harness::check_schedule(&cfg, &schedule, m, &consts);
        if !report.passed() {
            if cfg.force {
                log::warn!("schedule validation failed, continuing because of --force:\n{report}");
            } else {
                return Err(BenchError::Schedule(report.to_string()));
            }
        }
    }
    let reference = harness::reference_for(&inst, &path)?;
    let plan = RunPlan { inst: &inst, cfg: &cfg, schedule, reference: &reference, label: path.display().to_string() };
    let runs = plan.run_all(true);

    let csv_path = cfg.out.join(&cfg.csv_name);
    let file = fs::File::create(&csv_path).map_err(|e| BenchError::io(&csv_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    harness::write_csv(&mut w, &runs).and_then(|_| w.flush()).map_err(|e| BenchError::io(&csv_path, e))?;

    if compare {
        let summary = harness::summarize(&runs);
        let stem = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let sum_path = cfg.out.join(format!("{stem}_summary.csv"));
        let file = fs::File::create(&sum_path).map_err(|e| BenchError::io(&sum_path, e))?;
        harness::write_summary(file, &summary).map_err(|e| BenchError::io(&sum_path, e))?;
        println!("{:<12} {:<17} {:>5} {:>14} {:>14}", "method", "point", "seeds", "mean_obj_err", "mean_infeas");
        for s in &summary {
            println!(
                "{:<12} {:<17} {:>5} {:>14.6e} {:>14.6e}",
                s.method.as_str(),
                s.point.as_str(),
                s.seeds,
                s.mean_obj_err,
                s.mean_infeas
            );
        }
    }
    println!("wrote {}", csv_path.display());

    let failed: Vec<_> = runs
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|f| format!("{} seed {}: {}", r.method, r.seed, f.message)))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(BenchError::Divergence(failed.join("; ")))
    }
}

fn scenario_size(a: SizeArgs) -> Result<(), BenchError> {
    let robust = scenario_count_robust(a.n, a.tau, a.eps).map_err(usage_or_core)?;
    let discarding = scenario_count_discarding(a.n, a.tau, a.eps, a.p).map_err(usage_or_core)?;
    println!("discarding N = {discarding}");
    println!("robust m = {robust}");
    Ok(())
}

fn usage_or_core(e: pdsg::Error) -> BenchError {
    match e {
        pdsg::Error::InvalidArgument(msg) => BenchError::Usage(msg),
        other => BenchError::Core(other),
    }
}
