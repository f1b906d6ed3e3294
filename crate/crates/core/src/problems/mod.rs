//! Problem instances exposed through first-order oracles.

mod affine;
pub mod constants;
mod counting;
pub mod io;
mod qcqp;
pub mod sizing;

pub use affine::AffineProblem;
pub use constants::{certify_constants, TheoryConstants};
pub use counting::{CallCounts, CountingOracle};
pub use qcqp::{gen_qcqp, gen_scenario_lp, gen_scenario_lp_with, QcqpData, ScenarioLpParams};

use rand::{Rng, RngCore};

use crate::error::{check_len, Error, Result};

/// Axis-aligned box `X = prod_j [lo_j, hi_j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_len(lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(Error::InvalidArgument("box must have at least one coordinate".into()));
        }
        for (j, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !(l <= h) || l.is_nan() || h.is_nan() {
                return Err(Error::InvalidArgument(format!("box coordinate {j}: lo {l} > hi {h}")));
            }
        }
        Ok(Self { lo, hi })
    }

    /// `[-r, r]^n`
    pub fn symmetric(n: usize, r: f64) -> Result<Self> {
        Self::new(vec![-r; n], vec![r; n])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lo).zip(&self.hi).all(|((v, l), h)| l <= v && v <= h)
    }

    /// Euclidean projection, in place.
    pub fn project_in_place(&self, x: &mut [f64]) {
        for ((v, l), h) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(*l, *h);
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// `max_{x in X} ||x||`.
    pub fn radius(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| {
                let r = l.abs().max(h.abs());
                r * r
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Uniform sample from the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| if l == h { *l } else { rng.random_range(*l..=*h) })
            .collect()
    }
}

/// Componentwise clamp of `x` into `[lo, hi]`, the nearest point of the box.
pub fn project_box(x: &[f64], lo: &[f64], hi: &[f64]) -> Result<Vec<f64>> {
    check_len(x.len(), lo.len())?;
    check_len(x.len(), hi.len())?;
    if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
        return Err(Error::InvalidArgument("box requires lo <= hi".into()));
    }
    Ok(x.iter().zip(lo).zip(hi).map(|((v, l), h)| v.clamp(*l, *h)).collect())
}

/// First-order oracle for `min f0(x) s.t. f_j(x) <= 0, x in X`.
///
/// Gradient outputs are written into caller-provided buffers of length `dim()`.
/// Constraint indices are zero-based.
pub trait Oracle: Sync {
    fn dim(&self) -> usize;

    fn num_constraints(&self) -> usize;

    fn domain(&self) -> &BoxDomain;

    /// Exact objective value.
    fn objective(&self, x: &[f64]) -> f64;

    /// Exact objective (sub)gradient.
    fn objective_grad(&self, x: &[f64], grad: &mut [f64]);

    /// Unbiased stochastic objective subgradient. Consumes randomness from `rng`.
    fn stochastic_objective_grad(&self, x: &[f64], rng: &mut dyn RngCore, grad: &mut [f64]);

    fn constraint(&self, j: usize, x: &[f64]) -> f64;

    /// Constraint value and a subgradient.
    fn constraint_and_grad(&self, j: usize, x: &[f64], grad: &mut [f64]) -> f64;

    /// Whether the origin is known to be strictly feasible.
    fn origin_feasible(&self) -> bool {
        false
    }

    /// Default starting point: the origin when it is known feasible, else the box center.
    fn initial_point(&self) -> Vec<f64> {
        if self.origin_feasible() && self.domain().contains(&vec![0.0; self.dim()]) {
            vec![0.0; self.dim()]
        } else {
            self.domain().center()
        }
    }

    /// All constraint values at `x`.
    fn constraint_values(&self, x: &[f64]) -> Vec<f64> {
        (0..self.num_constraints()).map(|j| self.constraint(j, x)).collect()
    }
}
