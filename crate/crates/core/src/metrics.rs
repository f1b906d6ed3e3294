//! Exact full-pass measurements of objective error, infeasibility and KKT residuals.
//!
//! Measurements never touch solver state or its random stream, and are not counted
//! against the solver's oracle budget.

use std::fmt;
use std::ops::ControlFlow;

use crate::linalg::{axpy, norm};
use crate::problems::Oracle;
use crate::solver::{Monitor, SolverState};

/// Which point a row was measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointTag {
    Last,
    ErgodicPlain,
    ErgodicWeighted,
}

impl PointTag {
    pub const ALL: [PointTag; 3] = [PointTag::Last, PointTag::ErgodicPlain, PointTag::ErgodicWeighted];

    pub fn as_str(self) -> &'static str {
        match self {
            PointTag::Last => "last",
            PointTag::ErgodicPlain => "ergodic_plain",
            PointTag::ErgodicWeighted => "ergodic_weighted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    pub fn point_of(self, state: &SolverState) -> Vec<f64> {
        match self {
            PointTag::Last => state.x.clone(),
            PointTag::ErgodicPlain => state.avg_plain(),
            PointTag::ErgodicWeighted => state.avg_weighted(),
        }
    }
}

impl fmt::Display for PointTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRow {
    /// Completed iterations.
    pub k: u64,
    pub epoch: f64,
    pub obj_err: f64,
    pub infeas: f64,
    pub z_norm: f64,
    pub point: PointTag,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMeta {
    pub seed: u64,
    pub schedule: String,
    pub instance: String,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    pub rows: Vec<RunRow>,
    pub meta: RunMeta,
}

impl RunRecord {
    pub fn rows_for(&self, point: PointTag) -> impl Iterator<Item = &RunRow> {
        self.rows.iter().filter(move |r| r.point == point)
    }

    pub fn last_for(&self, point: PointTag) -> Option<&RunRow> {
        self.rows_for(point).last()
    }
}

/// `(1/m) sum_j [f_j(x)]_+`
pub fn infeasibility<O: Oracle + ?Sized>(inst: &O, x: &[f64]) -> f64 {
    let m = inst.num_constraints();
    (0..m).map(|j| inst.constraint(j, x).max(0.0)).sum::<f64>() / m as f64
}

/// `|f0(x) - f0_ref|` with the exact objective.
pub fn objective_error<O: Oracle + ?Sized>(inst: &O, x: &[f64], f0_ref: f64) -> f64 {
    (inst.objective(x) - f0_ref).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResidual {
    /// Norm of the Lagrangian gradient after zeroing components that point out of the box
    /// at active bounds.
    pub stationarity: f64,
    /// `(1/m) sum_i |z_i f_i(x)|`
    pub complementarity: f64,
    pub primal_infeas: f64,
    /// `||[-z]_+||`
    pub dual_infeas: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.complementarity).max(self.primal_infeas).max(self.dual_infeas)
    }
}

/// Gradient of `f0(x) + (1/m) sum_i z_i f_i(x)`, with the exact objective gradient.
pub fn lagrangian_grad<O: Oracle + ?Sized>(inst: &O, x: &[f64], z: &[f64], fvals: &mut [f64]) -> Vec<f64> {
    let n = inst.dim();
    let m = inst.num_constraints();
    let mut g = vec![0.0; n];
    inst.objective_grad(x, &mut g);
    let mut gj = vec![0.0; n];
    for j in 0..m {
        fvals[j] = inst.constraint_and_grad(j, x, &mut gj);
        if z[j] != 0.0 {
            axpy(z[j] / m as f64, &gj, &mut g);
        }
    }
    g
}

/// KKT residuals of `(x, z)` for the scaled Lagrangian `f0 + (1/m) sum z_i f_i`.
pub fn kkt_residual<O: Oracle + ?Sized>(inst: &O, x: &[f64], z: &[f64]) -> KktResidual {
    let m = inst.num_constraints();
    let mut fvals = vec![0.0; m];
    let mut g = lagrangian_grad(inst, x, z, &mut fvals);
    let dom = inst.domain();
    for (d, gd) in g.iter_mut().enumerate() {
        // at a lower bound the normal cone absorbs positive gradient, at an upper bound negative
        let at_lo = x[d] <= dom.lo()[d];
        let at_hi = x[d] >= dom.hi()[d];
        if (at_lo && *gd > 0.0) || (at_hi && *gd < 0.0) {
            *gd = 0.0;
        }
    }
    let complementarity = z.iter().zip(&fvals).map(|(zi, fi)| (zi * fi).abs()).sum::<f64>() / m as f64;
    let primal_infeas = fvals.iter().map(|f| f.max(0.0)).sum::<f64>() / m as f64;
    let dual_infeas = z.iter().map(|v| (-v).max(0.0).powi(2)).sum::<f64>().sqrt();
    KktResidual { stationarity: norm(&g), complementarity, primal_infeas, dual_infeas }
}

/// Monitor that measures every requested point against a reference objective value.
pub struct Recorder<'a, O: Oracle + ?Sized> {
    inst: &'a O,
    f0_ref: f64,
    iters_per_epoch: f64,
    points: Vec<PointTag>,
    /// Stop once `obj_err + infeas` of the first tracked point drops below this.
    pub stop_below: Option<f64>,
    /// Assert that constraint queries equal two per iteration.
    pub check_call_accounting: bool,
}

impl<'a, O: Oracle + ?Sized> Recorder<'a, O> {
    /// Records all three points; one epoch is `m` iterations.
    pub fn new(inst: &'a O, f0_ref: f64) -> Self {
        Self {
            inst,
            f0_ref,
            iters_per_epoch: inst.num_constraints() as f64,
            points: PointTag::ALL.to_vec(),
            stop_below: None,
            check_call_accounting: true,
        }
    }

    pub fn with_points(mut self, points: &[PointTag]) -> Self {
        self.points = points.to_vec();
        self
    }

    pub fn with_iters_per_epoch(mut self, per_epoch: f64) -> Self {
        self.iters_per_epoch = per_epoch;
        self
    }

    pub fn measure(&self, state: &SolverState, point: PointTag) -> RunRow {
        let x = point.point_of(state);
        let k = state.iterations();
        RunRow {
            k,
            epoch: k as f64 / self.iters_per_epoch,
            obj_err: objective_error(self.inst, &x, self.f0_ref),
            infeas: infeasibility(self.inst, &x),
            z_norm: norm(&state.z),
            point,
        }
    }
}

impl<O: Oracle + ?Sized> Monitor for Recorder<'_, O> {
    fn observe(&mut self, state: &SolverState, record: &mut RunRecord) -> ControlFlow<()> {
        if self.check_call_accounting {
            let queried = state.calls.constraint_value + state.calls.constraint_value_and_grad;
            let m = self.inst.num_constraints() as f64;
            let by_calls = queried as f64 / (2.0 * m);
            let by_iters = state.iterations() as f64 / m;
            assert!(
                (by_calls - by_iters).abs() <= 1e-12 * by_iters.max(1.0),
                "epoch accounting drifted: {by_calls} vs {by_iters}"
            );
        }
        let mut stop = false;
        for (idx, &p) in self.points.iter().enumerate() {
            let row = self.measure(state, p);
            if idx == 0 {
                if let Some(tol) = self.stop_below {
                    stop = row.obj_err + row.infeas < tol;
                }
            }
            record.rows.push(row);
        }
        if stop {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    }
}
