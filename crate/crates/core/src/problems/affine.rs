use rand::RngCore;

use super::{BoxDomain, Oracle};
use crate::error::{check_len, Error, Result};
use crate::linalg::dot;

/// Linear objective `c^T x` with affine constraints `a_j^T x - b_j <= 0` over a box.
///
/// The objective oracle is deterministic (zero variance), which makes this
/// family handy for hand-checkable traces.
#[derive(Debug, Clone)]
pub struct AffineProblem {
    cost: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    domain: BoxDomain,
}

impl AffineProblem {
    pub fn new(cost: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>, domain: BoxDomain) -> Result<Self> {
        check_len(domain.dim(), cost.len())?;
        check_len(rows.len(), rhs.len())?;
        if rows.is_empty() {
            return Err(Error::InvalidArgument("at least one constraint is required".into()));
        }
        for r in &rows {
            check_len(cost.len(), r.len())?;
        }
        Ok(Self { cost, rows, rhs, domain })
    }
}

impl Oracle for AffineProblem {
    fn dim(&self) -> usize {
        self.cost.len()
    }

    fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    fn objective(&self, x: &[f64]) -> f64 {
        dot(&self.cost, x)
    }

    fn objective_grad(&self, _x: &[f64], grad: &mut [f64]) {
        grad.copy_from_slice(&self.cost);
    }

    fn stochastic_objective_grad(&self, _x: &[f64], _rng: &mut dyn RngCore, grad: &mut [f64]) {
        grad.copy_from_slice(&self.cost);
    }

    fn constraint(&self, j: usize, x: &[f64]) -> f64 {
        dot(&self.rows[j], x) - self.rhs[j]
    }

    fn constraint_and_grad(&self, j: usize, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.copy_from_slice(&self.rows[j]);
        self.constraint(j, x)
    }

    fn origin_feasible(&self) -> bool {
        self.rhs.iter().all(|b| *b > 0.0)
    }
}
