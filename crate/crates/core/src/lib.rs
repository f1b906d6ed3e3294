//! Primal-dual stochastic gradient (PDSG) method for stochastic convex programs
//! with many functional constraints.
//!
//! The problem solved is
//!
//! ```text
//! minimize    f0(x) = E[F0(x; xi)]
//! subject to  f_j(x) <= 0,  j = 1..m,   x in X (a box)
//! ```
//!
//! Each PDSG iteration touches one stochastic objective subgradient, the value and
//! subgradient of one sampled constraint, and the value of a second sampled
//! constraint. Modules:
//!
//! - [`auglag`]: scalar augmented-Lagrangian penalty and its aggregate.
//! - [`problems`]: oracle abstraction, random QCQP and scenario-LP generators,
//!   constant certification, scenario sizing.
//! - [`solver`]: the PDSG loop, parameter schedules and the schedule validator.
//! - [`baselines`]: stochastic mirror-prox and a deterministic full-batch reference.
//! - [`theory`]: dual-boundedness constants and rate envelopes.
//! - [`metrics`]: objective error, infeasibility, KKT residuals, run records.

pub mod auglag;
pub mod baselines;
mod error;
pub mod linalg;
pub mod metrics;
pub mod problems;
pub mod solver;
pub mod theory;

pub use error::{Error, Result};
pub use metrics::{PointTag, RunRecord, RunRow};
pub use problems::{BoxDomain, Oracle, QcqpData};
pub use solver::{ParamSchedule, ScheduleKind, SolverState};
