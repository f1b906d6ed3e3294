//! Comparison methods.
//!
//! - Stochastic mirror-prox, single-step variant: the primal step has the same form as
//!   PDSG with a fixed penalty, while the dual coordinate step evaluates the sampled
//!   constraint at the *old* primal point and projects onto `[0, z_max]`.
//! - A deterministic full-batch primal-dual method with exact objective gradients and
//!   all constraints per iteration, used as ground truth for `(x*, z*, f0*)`.

use rand::Rng;

use crate::auglag::{dual_step, psi_unchecked};
use crate::error::{check_len, Error, Result};
use crate::linalg::{axpy, dist_sq, norm_inf, norm_sq};
use crate::metrics::{kkt_residual, KktResidual};
use crate::problems::Oracle;
use crate::solver::{drive, primal_update, Monitor, RunFailure, RunOptions, RunOutcome, SolverState, StepParams};

/// Stochastic mirror-prox configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorProxConfig {
    /// Fixed penalty parameter.
    pub beta: f64,
    /// Dual box `[0, z_max]^m`.
    pub z_max: f64,
    pub alpha: f64,
    pub rho: f64,
    /// Steps are `alpha/sqrt(K)` and `rho/sqrt(K)`.
    pub horizon: u64,
}

impl MirrorProxConfig {
    /// Constant steps `alpha/sqrt(K)`, `rho/sqrt(K)` and penalty `rho/sqrt(K)`.
    pub fn new(alpha: f64, rho: f64, horizon: u64, z_max: f64) -> Self {
        let s = (horizon.max(1) as f64).sqrt();
        Self { beta: rho / s, z_max, alpha, rho, horizon }
    }

    pub fn params(&self, _k: u64) -> StepParams {
        let s = (self.horizon.max(1) as f64).sqrt();
        StepParams { alpha: self.alpha / s, rho: self.rho / s, beta: self.beta }
    }

    pub fn descriptor(&self) -> String {
        format!(
            "mirror_prox(alpha={},rho={},K={},beta={},z_max={})",
            self.alpha, self.rho, self.horizon, self.beta, self.z_max
        )
    }
}

/// `max(10, 10 ||z||_inf)`
pub fn default_z_max(z: &[f64]) -> f64 {
    (10.0 * norm_inf(z)).max(10.0)
}

/// One mirror-prox iteration, in place. Uses the same random draw order and oracle
/// budget as a PDSG step.
pub fn mirror_prox_step<O: Oracle + ?Sized>(state: &mut SolverState, inst: &O, cfg: &MirrorProxConfig) -> Result<()> {
    check_len(inst.dim(), state.x.len())?;
    check_len(inst.num_constraints(), state.z.len())?;
    if !(cfg.z_max > 0.0) {
        return Err(Error::InvalidArgument(format!("z_max must be positive, got {}", cfg.z_max)));
    }
    let p = cfg.params(state.k);
    if !(p.alpha > 0.0 && p.rho > 0.0 && p.beta > 0.0) {
        return Err(Error::InvalidArgument(format!("step parameters must be positive: {p:?}")));
    }
    let x_old = state.x.clone();
    primal_update(state, inst, &p);

    let j = state.rng().random_range(0..inst.num_constraints());
    let fj = inst.constraint(j, &x_old);
    state.calls.constraint_value += 1;
    let zj = state.z[j];
    state.z[j] = dual_step(zj, fj, p.rho, p.beta).clamp(0.0, cfg.z_max);

    state.accumulate(p.alpha);
    state.check_finite()?;
    state.k += 1;
    Ok(())
}

pub fn run_mirror_prox<O: Oracle + ?Sized>(
    inst: &O,
    cfg: &MirrorProxConfig,
    iters: u64,
    seed: u64,
    opts: &RunOptions,
    monitor: &mut dyn Monitor,
) -> std::result::Result<RunOutcome, RunFailure> {
    let cfg = *cfg;
    drive(inst, iters, seed, opts, cfg.descriptor(), monitor, |state| mirror_prox_step(state, inst, &cfg))
}

/// One deterministic full-batch iteration with explicit parameters:
///
/// ```text
/// x+ = Proj_X(x - alpha (grad f0(x) + (1/m) sum_i [beta f_i(x) + z_i]_+ grad f_i(x)))
/// z_i += rho max(-z_i/beta, f_i(x+))   for every i
/// ```
///
/// With a single constraint and a deterministic objective this coincides with a PDSG step.
pub fn full_batch_step<O: Oracle + ?Sized>(state: &mut SolverState, inst: &O, p: StepParams) -> Result<()> {
    check_len(inst.dim(), state.x.len())?;
    check_len(inst.num_constraints(), state.z.len())?;
    let g = aug_lagrangian_grad(inst, &state.x, &state.z, p.beta);
    count_full_pass(state, inst.num_constraints());
    axpy(-p.alpha, &g, &mut state.x);
    inst.domain().project_in_place(&mut state.x);
    dual_full_update(state, inst, p.rho, p.beta);
    state.accumulate(p.alpha);
    state.check_finite()?;
    state.k += 1;
    Ok(())
}

fn count_full_pass(state: &mut SolverState, m: usize) {
    state.calls.exact_objective += 1;
    state.calls.constraint_value_and_grad += m as u64;
}

fn dual_full_update<O: Oracle + ?Sized>(state: &mut SolverState, inst: &O, rho: f64, beta: f64) {
    for j in 0..inst.num_constraints() {
        let fj = inst.constraint(j, &state.x);
        let zj = state.z[j];
        state.z[j] = dual_step(zj, fj, rho, beta);
    }
    state.calls.constraint_value += inst.num_constraints() as u64;
}

/// Gradient of `f0(x) + Psi_beta(x, z)`.
fn aug_lagrangian_grad<O: Oracle + ?Sized>(inst: &O, x: &[f64], z: &[f64], beta: f64) -> Vec<f64> {
    let n = inst.dim();
    let m = inst.num_constraints();
    let mut g = vec![0.0; n];
    inst.objective_grad(x, &mut g);
    let mut gj = vec![0.0; n];
    let inv_m = 1.0 / m as f64;
    for j in 0..m {
        let fj = inst.constraint_and_grad(j, x, &mut gj);
        let e = psi_unchecked(fj, z[j], beta);
        if e.du > 0.0 {
            axpy(inv_m * e.du, &gj, &mut g);
        }
    }
    g
}

/// Configuration of the deterministic reference method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceConfig {
    /// Penalty `beta`; also the dual step `rho`.
    pub beta: f64,
    /// Fixed primal step. `None` selects the step by backtracking on the augmented
    /// Lagrangian at every iteration.
    pub alpha: Option<f64>,
    pub max_iter: u64,
    /// Stop when every KKT residual is at most `tol`.
    pub tol: f64,
    /// KKT residuals are evaluated every `check_every` multiplier updates.
    pub check_every: u64,
}

impl ReferenceConfig {
    /// Defaults scaled to the constraint count: `beta = m`.
    pub fn for_instance<O: Oracle + ?Sized>(inst: &O) -> Self {
        Self { beta: inst.num_constraints() as f64, alpha: None, max_iter: 200_000, tol: 1e-7, check_every: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub f0: f64,
    pub converged: bool,
    pub iterations: u64,
    pub kkt: KktResidual,
}

/// Deterministic full-batch solver.
///
/// With a fixed `alpha` every iteration is [`full_batch_step`] with `rho = beta`. Otherwise
/// each iteration is one projected gradient step on `f0 + Psi_beta(., z)` with a
/// backtracking step size, and the multipliers are updated (all coordinates, `rho = beta`)
/// once the gradient mapping falls below an inner tolerance that shrinks after every
/// update.
pub struct ReferenceSolver {
    cfg: ReferenceConfig,
    step: f64,
    inner_tol: f64,
    dual_updates: u64,
}

impl ReferenceSolver {
    pub fn new(cfg: ReferenceConfig) -> Self {
        Self { cfg, step: cfg.alpha.unwrap_or(1.0), inner_tol: 1e-1, dual_updates: 0 }
    }

    /// Current primal step.
    pub fn current_step(&self) -> f64 {
        self.step
    }

    /// Number of multiplier updates so far.
    pub fn dual_updates(&self) -> u64 {
        self.dual_updates
    }

    pub fn step<O: Oracle + ?Sized>(&mut self, state: &mut SolverState, inst: &O) -> Result<()> {
        let beta = self.cfg.beta;
        if let Some(alpha) = self.cfg.alpha {
            self.dual_updates += 1;
            return full_batch_step(state, inst, StepParams { alpha, rho: beta, beta });
        }
        let g = aug_lagrangian_grad(inst, &state.x, &state.z, beta);
        count_full_pass(state, inst.num_constraints());
        // accept when the local gradient Lipschitz estimate is at most 1/alpha; unlike a
        // sufficient-decrease test this stays reliable when value changes reach rounding level
        let mut alpha = self.step * 2.0;
        let mut trial = state.x.clone();
        let mut d = vec![0.0; trial.len()];
        loop {
            trial.copy_from_slice(&state.x);
            axpy(-alpha, &g, &mut trial);
            inst.domain().project_in_place(&mut trial);
            for ((di, t), x) in d.iter_mut().zip(&trial).zip(&state.x) {
                *di = t - x;
            }
            let gt = aug_lagrangian_grad(inst, &trial, &state.z, beta);
            if alpha * dist_sq(&gt, &g).sqrt() <= norm_sq(&d).sqrt() || alpha < 1e-16 {
                break;
            }
            alpha *= 0.5;
        }
        self.step = alpha;
        state.x.copy_from_slice(&trial);
        if norm_sq(&d).sqrt() / alpha <= self.inner_tol {
            dual_full_update(state, inst, beta, beta);
            self.dual_updates += 1;
            self.inner_tol = (self.inner_tol * 0.2).max(self.cfg.tol * 1e-2);
        }
        state.accumulate(alpha);
        state.check_finite()?;
        state.k += 1;
        Ok(())
    }
}

/// Ground-truth solve: iterates until every KKT residual is at most `cfg.tol` or
/// `cfg.max_iter` is spent, and returns the iterate with the smallest worst residual.
/// Residuals are evaluated after multiplier updates.
pub fn full_batch_reference<O: Oracle + ?Sized>(inst: &O, cfg: &ReferenceConfig) -> Result<ReferenceSolution> {
    if !(cfg.beta > 0.0) || cfg.alpha.is_some_and(|a| !(a > 0.0)) {
        return Err(Error::InvalidArgument("reference parameters must be positive".into()));
    }
    let mut solver = ReferenceSolver::new(*cfg);
    let mut state = SolverState::initial(inst, 0);
    let check_every = cfg.check_every.max(1);
    let mut best = (kkt_residual(inst, &state.x, &state.z), state.x.clone(), state.z.clone());
    let mut converged = best.0.max() <= cfg.tol;
    let mut seen = 0;
    while !converged && state.iterations() < cfg.max_iter {
        solver.step(&mut state, inst)?;
        let updates = solver.dual_updates();
        if updates > seen && updates % check_every == 0 {
            seen = updates;
            let r = kkt_residual(inst, &state.x, &state.z);
            if r.max() < best.0.max() {
                best = (r, state.x.clone(), state.z.clone());
            }
            converged = r.max() <= cfg.tol;
        }
    }
    let (kkt, x, z) = best;
    let f0 = inst.objective(&x);
    if !converged {
        log::warn!("reference solve stopped at {} iterations with KKT residual {:e}", state.iterations(), kkt.max());
    }
    Ok(ReferenceSolution { f0, converged, iterations: state.iterations(), kkt, x, z })
}

/// Runs the reference iteration under the shared driver so that it can be monitored
/// like the stochastic methods. One iteration touches every constraint.
pub fn run_reference<O: Oracle + ?Sized>(
    inst: &O,
    cfg: &ReferenceConfig,
    iters: u64,
    opts: &RunOptions,
    monitor: &mut dyn Monitor,
) -> std::result::Result<RunOutcome, RunFailure> {
    let mut solver = ReferenceSolver::new(*cfg);
    let desc = format!("reference(beta={})", cfg.beta);
    drive(inst, iters, 0, opts, desc, monitor, |state| solver.step(state, inst))
}

/// Squared distance helper used by callers comparing against the reference.
pub fn dist_to_reference(x: &[f64], sol: &ReferenceSolution) -> f64 {
    dist_sq(x, &sol.x)
}
