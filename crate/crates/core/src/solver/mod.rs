//! The primal-dual stochastic gradient iteration.
//!
//! One iteration at `(x^k, z^k)`:
//!
//! 1. draw `i` uniformly from the constraints, query a stochastic objective subgradient
//!    `g0` and `(f_i(x^k), grad f_i(x^k))`;
//! 2. `x^{k+1} = Proj_X(x^k - alpha_k (g0 + [beta_k f_i(x^k) + z_i]_+ grad f_i(x^k)))`;
//! 3. draw `j` independently, query `f_j(x^{k+1})` and set
//!    `z_j += rho_k max(-z_j / beta_k, f_j(x^{k+1}))`.
//!
//! Random draws happen in the order `i`, objective sample, `j` from a single ChaCha8
//! stream per run.

mod schedule;

pub use schedule::{
    validate_schedule, ConditionCheck, ParamSchedule, ScheduleKind, StepParams, ValidationReport,
    CHECK_ALPHA_MU, CHECK_BETA_GE_RHO, CHECK_PRODUCT, CHECK_STEP_RATIO,
};

use std::ops::ControlFlow;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::auglag::dual_step;
use crate::error::{check_len, Error, Result};
use crate::linalg::norm_inf;
use crate::metrics::{RunMeta, RunRecord};
use crate::problems::{CallCounts, Oracle};

/// Abort threshold on `||z||_inf`.
pub const DUAL_BLOWUP: f64 = 1e12;

/// Iterates, counters and ergodic accumulators of a run.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    /// Index of the next iteration; starts at 1.
    pub k: u64,
    sum_plain: Vec<f64>,
    count: u64,
    sum_weighted: Vec<f64>,
    weight_sum: f64,
    pub calls: CallCounts,
    rng: ChaCha8Rng,
    check_dual_sign: bool,
    warned: bool,
    grad_buf: Vec<f64>,
    cons_buf: Vec<f64>,
}

impl SolverState {
    /// State with `x^1 = x0`, `z^1 = 0`.
    pub fn new(x0: Vec<f64>, m: usize, seed: u64) -> Self {
        let n = x0.len();
        Self {
            x: x0,
            z: vec![0.0; m],
            k: 1,
            sum_plain: vec![0.0; n],
            count: 0,
            sum_weighted: vec![0.0; n],
            weight_sum: 0.0,
            calls: CallCounts::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            check_dual_sign: true,
            warned: false,
            grad_buf: vec![0.0; n],
            cons_buf: vec![0.0; n],
        }
    }

    /// Starts from the oracle's default point.
    pub fn initial<O: Oracle + ?Sized>(inst: &O, seed: u64) -> Self {
        Self::new(inst.initial_point(), inst.num_constraints(), seed)
    }

    /// Completed iterations.
    pub fn iterations(&self) -> u64 {
        self.k - 1
    }

    /// `(1/K) sum_k x^{k+1}`; the current iterate when nothing has been averaged yet.
    pub fn avg_plain(&self) -> Vec<f64> {
        if self.count == 0 {
            return self.x.clone();
        }
        let c = self.count as f64;
        self.sum_plain.iter().map(|s| s / c).collect()
    }

    /// `(sum_k alpha_k x^{k+1}) / (sum_k alpha_k)`.
    pub fn avg_weighted(&self) -> Vec<f64> {
        if self.weight_sum == 0.0 {
            return self.x.clone();
        }
        self.sum_weighted.iter().map(|s| s / self.weight_sum).collect()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }

    /// Whether every step so far kept `rho_k <= beta_k`, i.e. dual nonnegativity is guaranteed.
    pub fn dual_sign_guaranteed(&self) -> bool {
        self.check_dual_sign
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub(crate) fn accumulate(&mut self, weight: f64) {
        for ((sp, sw), xi) in self.sum_plain.iter_mut().zip(self.sum_weighted.iter_mut()).zip(&self.x) {
            *sp += xi;
            *sw += weight * xi;
        }
        self.count += 1;
        self.weight_sum += weight;
    }

    pub(crate) fn note_params(&mut self, p: &StepParams) {
        if p.rho > p.beta {
            if !self.warned {
                log::warn!(
                    "rho_k = {} exceeds beta_k = {} at k = {}; dual iterates may turn negative",
                    p.rho,
                    p.beta,
                    self.k
                );
                self.warned = true;
            }
            self.check_dual_sign = false;
        }
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { k: self.k, reason: "non-finite primal iterate".into() });
        }
        if self.z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { k: self.k, reason: "non-finite dual iterate".into() });
        }
        let zi = norm_inf(&self.z);
        if zi > DUAL_BLOWUP {
            return Err(Error::Divergence { k: self.k, reason: format!("||z||_inf = {zi:e} exceeds {DUAL_BLOWUP:e}") });
        }
        Ok(())
    }
}

fn check_params(p: &StepParams) -> Result<()> {
    if [p.alpha, p.rho, p.beta].iter().all(|v| v.is_finite() && *v > 0.0) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("step parameters must be positive: {p:?}")))
    }
}

/// Primal half-step shared by PDSG and mirror-prox: draws `i`, queries the objective and
/// constraint `i` at the current point, and moves `x` in place. Returns nothing; the
/// ergodic accumulators are not touched.
pub(crate) fn primal_update<O: Oracle + ?Sized>(state: &mut SolverState, inst: &O, p: &StepParams) {
    let m = inst.num_constraints();
    let i = state.rng.random_range(0..m);
    let mut g0 = std::mem::take(&mut state.grad_buf);
    let mut gi = std::mem::take(&mut state.cons_buf);
    inst.stochastic_objective_grad(&state.x, &mut state.rng, &mut g0);
    let fi = inst.constraint_and_grad(i, &state.x, &mut gi);
    state.calls.stochastic_objective += 1;
    state.calls.constraint_value_and_grad += 1;
    let mult = (p.beta * fi + state.z[i]).max(0.0);
    for ((xv, g), d) in state.x.iter_mut().zip(&g0).zip(&gi) {
        *xv -= p.alpha * (g + mult * d);
    }
    inst.domain().project_in_place(&mut state.x);
    state.grad_buf = g0;
    state.cons_buf = gi;
}

/// One PDSG iteration, in place.
pub fn pdsg_step<O: Oracle + ?Sized>(state: &mut SolverState, inst: &O, p: StepParams) -> Result<()> {
    check_params(&p)?;
    check_len(inst.dim(), state.x.len())?;
    check_len(inst.num_constraints(), state.z.len())?;
    state.note_params(&p);

    primal_update(state, inst, &p);

    let j = state.rng.random_range(0..inst.num_constraints());
    let fj = inst.constraint(j, &state.x);
    state.calls.constraint_value += 1;
    let zj = state.z[j];
    state.z[j] = dual_step(zj, fj, p.rho, p.beta);

    if state.check_dual_sign {
        debug_assert!(state.z[j] >= 0.0, "dual iterate turned negative at k={}", state.k);
    }
    state.accumulate(p.alpha);
    state.check_finite()?;
    state.k += 1;
    Ok(())
}

/// Receives the state at the configured cadence and may stop the run early.
pub trait Monitor {
    fn observe(&mut self, state: &SolverState, record: &mut RunRecord) -> ControlFlow<()>;
}

/// Monitor that records nothing.
pub struct NoMonitor;

impl Monitor for NoMonitor {
    fn observe(&mut self, _state: &SolverState, _record: &mut RunRecord) -> ControlFlow<()> {
        ControlFlow::Continue(())
    }
}

impl<F: FnMut(&SolverState, &mut RunRecord) -> ControlFlow<()>> Monitor for F {
    fn observe(&mut self, state: &SolverState, record: &mut RunRecord) -> ControlFlow<()> {
        self(state, record)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Monitor cadence in iterations; 0 disables monitoring.
    pub cadence: u64,
    /// Starting point; defaults to the oracle's initial point.
    pub x0: Option<Vec<f64>>,
    /// Free-form instance description stored in the record metadata.
    pub instance_label: String,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: SolverState,
    pub record: RunRecord,
    /// True when the monitor stopped the run before the budget was spent.
    pub stopped_early: bool,
}

/// A failed run together with everything recorded before the failure.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub record: RunRecord,
    pub state: Option<SolverState>,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<Error> for RunFailure {
    fn from(error: Error) -> Self {
        Self { error, record: RunRecord::default(), state: None }
    }
}

/// Drives `iters` applications of `step` with monitoring; shared by all methods.
pub(crate) fn drive<O, S>(
    inst: &O,
    iters: u64,
    seed: u64,
    opts: &RunOptions,
    descriptor: String,
    monitor: &mut dyn Monitor,
    mut step: S,
) -> std::result::Result<RunOutcome, RunFailure>
where
    O: Oracle + ?Sized,
    S: FnMut(&mut SolverState) -> Result<()>,
{
    let start = Instant::now();
    let x0 = match &opts.x0 {
        Some(x) => {
            check_len(inst.dim(), x.len())?;
            let mut x = x.clone();
            inst.domain().project_in_place(&mut x);
            x
        }
        None => inst.initial_point(),
    };
    let mut state = SolverState::new(x0, inst.num_constraints(), seed);
    let mut record = RunRecord {
        rows: Vec::new(),
        meta: RunMeta { seed, schedule: descriptor, instance: opts.instance_label.clone(), wall_clock_secs: 0.0 },
    };
    let mut stopped_early = false;
    for _ in 0..iters {
        if let Err(error) = step(&mut state) {
            record.meta.wall_clock_secs = start.elapsed().as_secs_f64();
            return Err(RunFailure { error, record, state: Some(state) });
        }
        if opts.cadence > 0 && state.iterations() % opts.cadence == 0 {
            if let ControlFlow::Break(()) = monitor.observe(&state, &mut record) {
                stopped_early = state.iterations() < iters;
                break;
            }
        }
    }
    record.meta.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(RunOutcome { state, record, stopped_early })
}

/// Runs `iters` PDSG iterations from `x^1` (origin when known feasible, else box center)
/// and `z^1 = 0`.
///
/// Fixed-horizon schedules must have `horizon == iters`; strongly convex schedules need
/// `horizon >= iters`.
pub fn run<O: Oracle + ?Sized>(
    inst: &O,
    sched: &ParamSchedule,
    iters: u64,
    seed: u64,
    opts: &RunOptions,
    monitor: &mut dyn Monitor,
) -> std::result::Result<RunOutcome, RunFailure> {
    match (sched.kind, sched.horizon) {
        (ScheduleKind::FixedHorizon, Some(h)) if h != iters && iters > 0 => {
            return Err(Error::Config(format!("fixed-horizon schedule built for K={h} but run asked for {iters}")).into())
        }
        (ScheduleKind::StronglyConvex, Some(h)) if h < iters => {
            return Err(Error::Config(format!("strongly convex schedule built for K={h} but run asked for {iters}")).into())
        }
        (ScheduleKind::FixedHorizon | ScheduleKind::StronglyConvex, None) => {
            return Err(Error::Config(format!("{} schedule requires a horizon", sched.kind)).into())
        }
        _ => {}
    }
    if !(sched.alpha > 0.0 && sched.rho > 0.0) {
        return Err(Error::Config("alpha and rho must be positive".into()).into());
    }
    let sched = *sched;
    drive(inst, iters, seed, opts, sched.descriptor(), monitor, |state| {
        let p = sched.params(state.k);
        pdsg_step(state, inst, p)
    })
}
