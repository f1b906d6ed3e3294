use std::sync::atomic::{AtomicU64, Ordering};

use rand::RngCore;

use super::{BoxDomain, Oracle};

/// Number of oracle queries of each kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CallCounts {
    pub stochastic_objective: u64,
    pub exact_objective: u64,
    pub constraint_value: u64,
    pub constraint_value_and_grad: u64,
}

/// Wraps an oracle and counts every query made through it.
pub struct CountingOracle<'a, O: Oracle + ?Sized> {
    inner: &'a O,
    stochastic: AtomicU64,
    exact: AtomicU64,
    value: AtomicU64,
    value_grad: AtomicU64,
}

impl<'a, O: Oracle + ?Sized> CountingOracle<'a, O> {
    pub fn new(inner: &'a O) -> Self {
        Self {
            inner,
            stochastic: AtomicU64::new(0),
            exact: AtomicU64::new(0),
            value: AtomicU64::new(0),
            value_grad: AtomicU64::new(0),
        }
    }

    pub fn counts(&self) -> CallCounts {
        CallCounts {
            stochastic_objective: self.stochastic.load(Ordering::Relaxed),
            exact_objective: self.exact.load(Ordering::Relaxed),
            constraint_value: self.value.load(Ordering::Relaxed),
            constraint_value_and_grad: self.value_grad.load(Ordering::Relaxed),
        }
    }
}

impl<O: Oracle + ?Sized> Oracle for CountingOracle<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn num_constraints(&self) -> usize {
        self.inner.num_constraints()
    }

    fn domain(&self) -> &BoxDomain {
        self.inner.domain()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.exact.fetch_add(1, Ordering::Relaxed);
        self.inner.objective(x)
    }

    fn objective_grad(&self, x: &[f64], grad: &mut [f64]) {
        self.exact.fetch_add(1, Ordering::Relaxed);
        self.inner.objective_grad(x, grad)
    }

    fn stochastic_objective_grad(&self, x: &[f64], rng: &mut dyn RngCore, grad: &mut [f64]) {
        self.stochastic.fetch_add(1, Ordering::Relaxed);
        self.inner.stochastic_objective_grad(x, rng, grad)
    }

    fn constraint(&self, j: usize, x: &[f64]) -> f64 {
        self.value.fetch_add(1, Ordering::Relaxed);
        self.inner.constraint(j, x)
    }

    fn constraint_and_grad(&self, j: usize, x: &[f64], grad: &mut [f64]) -> f64 {
        self.value_grad.fetch_add(1, Ordering::Relaxed);
        self.inner.constraint_and_grad(j, x, grad)
    }

    fn origin_feasible(&self) -> bool {
        self.inner.origin_feasible()
    }

    fn initial_point(&self) -> Vec<f64> {
        self.inner.initial_point()
    }
}
