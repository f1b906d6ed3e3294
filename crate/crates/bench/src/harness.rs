//! Instance preparation, the cached reference solve and multi-seed runs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use pdsg::baselines::{
    default_z_max, full_batch_reference, run_mirror_prox, run_reference, MirrorProxConfig, ReferenceConfig,
};
use pdsg::metrics::Recorder;
use pdsg::problems::{certify_constants, gen_qcqp, gen_scenario_lp, io, TheoryConstants};
use pdsg::solver::{run, validate_schedule, RunFailure, RunOptions, ValidationReport};
use pdsg::{Oracle, ParamSchedule, QcqpData, RunRecord, ScheduleKind};

use crate::config::{ExperimentConfig, Family, Method};
use crate::error::BenchError;

/// Generates the configured instance.
pub fn generate(cfg: &ExperimentConfig) -> Result<QcqpData, BenchError> {
    let inst = match cfg.family {
        Family::Qcqp => gen_qcqp(cfg.n, cfg.p, cfg.big_n, cfg.m, cfg.instance_seed),
        Family::ScenarioLp => {
            let s2 = cfg.second_stage_dim.unwrap_or((cfg.n / 2).max(1));
            gen_scenario_lp(cfg.n, cfg.m, s2, cfg.instance_seed)
        }
    };
    inst.map_err(|e| BenchError::Usage(e.to_string()))
}

pub fn default_instance_name(cfg: &ExperimentConfig) -> String {
    match cfg.family {
        Family::Qcqp => format!("qcqp_n{}_p{}_N{}_m{}_s{}.pdsg", cfg.n, cfg.p, cfg.big_n, cfg.m, cfg.instance_seed),
        Family::ScenarioLp => format!(
            "scenario_lp_n{}_m{}_d{}_s{}.pdsg",
            cfg.n,
            cfg.m,
            cfg.second_stage_dim.unwrap_or((cfg.n / 2).max(1)),
            cfg.instance_seed
        ),
    }
}

pub fn write_instance_file(path: &Path, inst: &QcqpData) -> Result<(), BenchError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    fs::write(path, io::to_bytes(inst)).map_err(|e| BenchError::io(path, e))
}

/// Loads `cfg.instance` or generates the instance and stores it in the output directory.
/// Returns the instance with the file it lives in.
pub fn prepare_instance(cfg: &ExperimentConfig) -> Result<(QcqpData, PathBuf), BenchError> {
    if let Some(path) = &cfg.instance {
        let inst = io::read_instance(path).map_err(|e| match e {
            pdsg::Error::Io(source) => BenchError::io(path, source),
            other => BenchError::Core(other),
        })?;
        return Ok((inst, path.clone()));
    }
    let inst = generate(cfg)?;
    let path = cfg.out.join(default_instance_name(cfg));
    write_instance_file(&path, &inst)?;
    Ok((inst, path))
}

pub fn instance_hash(inst: &QcqpData) -> String {
    hex::encode(Sha256::digest(io::to_bytes(inst)))
}

/// Reference solution as stored in the cache.
#[derive(Debug, Clone, PartialEq)]
pub struct CachedReference {
    pub hash: String,
    pub converged: bool,
    pub f0: f64,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

impl CachedReference {
    fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ");
        format!(
            "sha256 {}\nconverged {}\nf0 {:.16e}\nx {}\nz {}\n",
            self.hash,
            self.converged,
            self.f0,
            join(&self.x),
            join(&self.z)
        )
    }

    fn from_text(text: &str) -> Option<Self> {
        let mut hash = None;
        let mut converged = None;
        let mut f0 = None;
        let mut x = None;
        let mut z = None;
        let floats = |rest: &str| rest.split_whitespace().map(|t| t.parse().ok()).collect::<Option<Vec<f64>>>();
        for line in text.lines() {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "sha256" => hash = Some(rest.to_string()),
                "converged" => converged = rest.parse().ok(),
                "f0" => f0 = rest.parse().ok(),
                "x" => x = floats(rest),
                "z" => z = floats(rest),
                _ => return None,
            }
        }
        Some(Self { hash: hash?, converged: converged?, f0: f0?, x: x?, z: z? })
    }
}

pub fn reference_cache_path(instance_path: &Path) -> PathBuf {
    let mut name = instance_path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".ref");
    instance_path.with_file_name(name)
}

/// Returns the cached reference next to `instance_path` when its hash matches, otherwise
/// solves and rewrites the cache.
pub fn reference_for(inst: &QcqpData, instance_path: &Path) -> Result<CachedReference, BenchError> {
    let hash = instance_hash(inst);
    let cache = reference_cache_path(instance_path);
    if let Ok(text) = fs::read_to_string(&cache) {
        match CachedReference::from_text(&text) {
            Some(r) if r.hash == hash && r.x.len() == inst.dim() && r.z.len() == inst.num_constraints() => {
                log::info!("using cached reference {}", cache.display());
                return Ok(r);
            }
            _ => log::info!("reference cache {} is stale", cache.display()),
        }
    }
    let r = solve_reference(inst, hash)?;
    fs::write(&cache, r.to_text()).map_err(|e| BenchError::io(&cache, e))?;
    Ok(r)
}

fn solve_reference(inst: &QcqpData, hash: String) -> Result<CachedReference, BenchError> {
    let cfg = ReferenceConfig { tol: 1e-9, ..ReferenceConfig::for_instance(inst) };
    let sol = full_batch_reference(inst, &cfg)?;
    if !sol.converged {
        log::warn!("reference did not converge; KKT residual {:e}", sol.kkt.max());
    }
    Ok(CachedReference { hash, converged: sol.converged, f0: sol.f0, x: sol.x, z: sol.z })
}

/// Constants used for schedule validation; sigma is not estimated here.
pub fn validation_constants(inst: &QcqpData) -> TheoryConstants {
    certify_constants(inst, 0, 0)
}

pub fn iterations(cfg: &ExperimentConfig, m: usize) -> u64 {
    cfg.epochs * m as u64
}

pub fn build_schedule(cfg: &ExperimentConfig, m: usize, consts: &TheoryConstants) -> ParamSchedule {
    let k = iterations(cfg, m);
    match cfg.schedule {
        ScheduleKind::FixedHorizon => ParamSchedule::fixed_horizon(cfg.alpha, cfg.rho, k),
        ScheduleKind::Anytime => ParamSchedule::anytime(cfg.alpha, cfg.rho),
        ScheduleKind::StronglyConvex => {
            ParamSchedule::strongly_convex(cfg.alpha, cfg.rho, k, cfg.mu.unwrap_or(consts.mu))
        }
    }
}

pub fn check_schedule(
    cfg: &ExperimentConfig,
    sched: &ParamSchedule,
    m: usize,
    consts: &TheoryConstants,
) -> ValidationReport {
    validate_schedule(sched, m, consts.g_bound, cfg.mu.unwrap_or(consts.mu), iterations(cfg, m))
}

/// Why a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailureInfo {
    pub k: u64,
    pub epoch: f64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub method: Method,
    pub seed: u64,
    pub record: RunRecord,
    pub failure: Option<RunFailureInfo>,
}

/// Everything a batch of runs shares.
pub struct RunPlan<'a> {
    pub inst: &'a QcqpData,
    pub cfg: &'a ExperimentConfig,
    pub schedule: ParamSchedule,
    pub reference: &'a CachedReference,
    pub label: String,
}

impl RunPlan<'_> {
    pub fn run_one(&self, method: Method, seed: u64) -> SeedRun {
        let m = self.inst.num_constraints();
        let k = iterations(self.cfg, m);
        let f0 = self.reference.f0;
        let mut opts = RunOptions { cadence: self.cfg.cadence * m as u64, x0: None, instance_label: self.label.clone() };
        let (result, per_epoch) = match method {
            Method::Pdsg => {
                let mut rec = Recorder::new(self.inst, f0);
                (run(self.inst, &self.schedule, k, seed, &opts, &mut rec), m as f64)
            }
            Method::MirrorProx => {
                let mp = MirrorProxConfig::new(self.cfg.mp_alpha, self.cfg.mp_rho, k, default_z_max(&self.reference.z));
                let mut rec = Recorder::new(self.inst, f0);
                (run_mirror_prox(self.inst, &mp, k, seed, &opts, &mut rec), m as f64)
            }
            Method::Reference => {
                // one reference iteration is one full pass, counted as one epoch
                opts.cadence = self.cfg.cadence;
                let mut rec = Recorder::new(self.inst, f0).with_iters_per_epoch(1.0);
                rec.check_call_accounting = false;
                let rcfg = ReferenceConfig::for_instance(self.inst);
                (run_reference(self.inst, &rcfg, self.cfg.epochs, &opts, &mut rec), 1.0)
            }
        };
        match result {
            Ok(out) => {
                let mut record = out.record;
                record.meta.seed = seed;
                SeedRun { method, seed, record, failure: None }
            }
            Err(RunFailure { error, mut record, state }) => {
                let k = state.map(|s| s.k).unwrap_or(0);
                record.meta.seed = seed;
                SeedRun {
                    method,
                    seed,
                    record,
                    failure: Some(RunFailureInfo { k, epoch: k as f64 / per_epoch, message: error.to_string() }),
                }
            }
        }
    }

    /// Runs every (method, seed) pair, concurrently across pairs when `parallel` is set.
    /// Results are ordered by method then seed as listed in the configuration.
    pub fn run_all(&self, parallel: bool) -> Vec<SeedRun> {
        let jobs: Vec<(Method, u64)> =
            self.cfg.methods.iter().flat_map(|&m| self.cfg.seeds.iter().map(move |&s| (m, s))).collect();
        if parallel {
            jobs.par_iter().map(|&(m, s)| self.run_one(m, s)).collect()
        } else {
            jobs.iter().map(|&(m, s)| self.run_one(m, s)).collect()
        }
    }
}

pub const CSV_HEADER: &str = "method,seed,k,epoch,point,obj_err,infeas,z_norm";

pub fn write_csv<W: Write>(mut w: W, runs: &[SeedRun]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in runs {
        for row in &r.record.rows {
            writeln!(
                w,
                "{},{},{},{:.16e},{},{:.16e},{:.16e},{:.16e}",
                r.method, r.seed, row.k, row.epoch, row.point, row.obj_err, row.infeas, row.z_norm
            )?;
        }
        if let Some(f) = &r.failure {
            writeln!(w, "{},{},{},{:.16e},DIVERGED,NaN,NaN,NaN", r.method, r.seed, f.k, f.epoch)?;
        }
    }
    Ok(())
}

/// Final-row means for one (method, point) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub point: pdsg::PointTag,
    pub seeds: usize,
    pub mean_obj_err: f64,
    pub mean_infeas: f64,
}

/// Means over seeds of the last recorded row of each (method, point).
pub fn summarize(runs: &[SeedRun]) -> Vec<SummaryRow> {
    let mut methods: Vec<Method> = Vec::new();
    for r in runs {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    let mut out = Vec::new();
    for method in methods {
        for point in pdsg::PointTag::ALL {
            let finals: Vec<_> =
                runs.iter().filter(|r| r.method == method).filter_map(|r| r.record.last_for(point)).collect();
            if finals.is_empty() {
                continue;
            }
            let c = finals.len() as f64;
            out.push(SummaryRow {
                method,
                point,
                seeds: finals.len(),
                mean_obj_err: finals.iter().map(|r| r.obj_err).sum::<f64>() / c,
                mean_infeas: finals.iter().map(|r| r.infeas).sum::<f64>() / c,
            });
        }
    }
    out
}

pub fn write_summary<W: Write>(mut w: W, rows: &[SummaryRow]) -> std::io::Result<()> {
    writeln!(w, "method,point,seeds,mean_obj_err,mean_infeas")?;
    for s in rows {
        writeln!(w, "{},{},{},{:.16e},{:.16e}", s.method, s.point, s.seeds, s.mean_obj_err, s.mean_infeas)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg(dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            n: 4,
            p: 3,
            big_n: 10,
            m: 10,
            epochs: 3,
            seeds: vec![3, 1, 2],
            methods: vec![Method::Pdsg, Method::MirrorProx],
            out: dir.to_path_buf(),
            ..Default::default()
        }
    }

    #[test]
    fn sequential_and_parallel_runs_match() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(dir.path());
        let (inst, path) = prepare_instance(&cfg).unwrap();
        let reference = reference_for(&inst, &path).unwrap();
        let consts = validation_constants(&inst);
        let plan = RunPlan {
            inst: &inst,
            cfg: &cfg,
            schedule: build_schedule(&cfg, inst.num_constraints(), &consts),
            reference: &reference,
            label: String::new(),
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&mut a, &plan.run_all(false)).unwrap();
        write_csv(&mut b, &plan.run_all(true)).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        // 2 methods x 3 seeds x 3 epochs x 3 points
        assert_eq!(text.lines().count(), 1 + 54);
        assert!(text.lines().nth(1).unwrap().starts_with("pdsg,3,10,"));
    }

    #[test]
    fn reference_cache_roundtrip_and_invalidation() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(dir.path());
        let (inst, path) = prepare_instance(&cfg).unwrap();
        let first = reference_for(&inst, &path).unwrap();
        let cache = reference_cache_path(&path);
        assert!(cache.exists());
        assert_eq!(CachedReference::from_text(&fs::read_to_string(&cache).unwrap()).unwrap(), first);
        // a cache for another instance is ignored and replaced
        let other = gen_qcqp(4, 3, 10, 10, 99).unwrap();
        let second = reference_for(&other, &path).unwrap();
        assert_ne!(second.hash, first.hash);
        assert_eq!(reference_for(&other, &path).unwrap(), second);
    }

    #[test]
    fn summary_means_match_final_rows() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(dir.path());
        let (inst, path) = prepare_instance(&cfg).unwrap();
        let reference = reference_for(&inst, &path).unwrap();
        let consts = validation_constants(&inst);
        let plan = RunPlan {
            inst: &inst,
            cfg: &cfg,
            schedule: build_schedule(&cfg, inst.num_constraints(), &consts),
            reference: &reference,
            label: String::new(),
        };
        let runs = plan.run_all(true);
        let summary = summarize(&runs);
        assert_eq!(summary.len(), 6);
        for s in &summary {
            let finals: Vec<f64> = runs
                .iter()
                .filter(|r| r.method == s.method)
                .map(|r| r.record.last_for(s.point).unwrap().obj_err)
                .collect();
            assert_eq!(s.seeds, 3);
            assert!((s.mean_obj_err - finals.iter().sum::<f64>() / 3.0).abs() <= 1e-15 * s.mean_obj_err.max(1.0));
        }
    }
}
