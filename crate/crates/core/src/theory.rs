//! Dual-boundedness constants and convergence-rate envelopes.
//!
//! All functions are pure and take the distance `||x1 - x*||` and the reference
//! multipliers as inputs. `alpha` and `rho` are the schedule constants, before the
//! per-iteration scaling.

use crate::error::{Error, Result};
use crate::solver::ScheduleKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryInputs {
    pub alpha: f64,
    pub rho: f64,
    /// Iteration budget K.
    pub horizon: u64,
    pub m: usize,
    pub f_bound: f64,
    pub g_bound: f64,
    pub sigma: f64,
    pub mu: f64,
    /// `||x1 - x*||`
    pub dist0: f64,
    /// `||z*||`
    pub zstar_norm: f64,
    /// `||1 + z*||`
    pub zstar_plus1_norm: f64,
}

impl TheoryInputs {
    /// Fills both multiplier norms from `z*`.
    pub fn with_zstar(mut self, zstar: &[f64]) -> Self {
        self.zstar_norm = zstar.iter().map(|z| z * z).sum::<f64>().sqrt();
        self.zstar_plus1_norm = zstar.iter().map(|z| (1.0 + z) * (1.0 + z)).sum::<f64>().sqrt();
        self
    }

    fn validate(&self) -> Result<()> {
        let vals = [
            self.alpha,
            self.rho,
            self.f_bound,
            self.g_bound,
            self.sigma,
            self.mu,
            self.dist0,
            self.zstar_norm,
            self.zstar_plus1_norm,
        ];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) || self.alpha <= 0.0 || self.rho <= 0.0 {
            return Err(Error::InvalidArgument(format!("theory inputs must be finite, nonnegative, alpha and rho positive: {self:?}")));
        }
        if self.m == 0 || self.horizon == 0 {
            return Err(Error::InvalidArgument("m and K must be positive".into()));
        }
        Ok(())
    }

    /// Denominator `m - c alpha rho G^2` of the kind's product condition.
    fn slack(&self, kind: ScheduleKind) -> Result<f64> {
        let c = kind.product_constant();
        let s = self.m as f64 - c * self.alpha * self.rho * self.g_bound * self.g_bound;
        if s > 0.0 {
            Ok(s)
        } else {
            Err(Error::InfeasibleBound(format!(
                "{kind} requires alpha*rho < m/({c} G^2); alpha*rho = {}, m = {}, G = {}",
                self.alpha * self.rho,
                self.m,
                self.g_bound
            )))
        }
    }

    fn noise(&self) -> f64 {
        4.0 * self.g_bound * self.g_bound + self.sigma * self.sigma
    }

    fn fg2(&self) -> f64 {
        (self.f_bound * self.g_bound).powi(2)
    }
}

/// `C1 = 2 rho/alpha d^2 + 4 ||z*||^2 + 8 alpha rho (4G^2 + s^2) + 32 alpha rho^3 F^2 G^2 / K`
pub fn c1(t: &TheoryInputs) -> f64 {
    let (a, r) = (t.alpha, t.rho);
    2.0 * r / a * t.dist0.powi(2) + 4.0 * t.zstar_norm.powi(2) + 8.0 * a * r * t.noise() + 32.0 * a * r.powi(3) * t.fg2() / t.horizon as f64
}

/// `C2 = 2 rho/alpha d^2 + 4 ||z*||^2 + 17 alpha rho (4G^2 + s^2) + 39 alpha rho^3 F^2 G^2`
pub fn c2(t: &TheoryInputs) -> f64 {
    let (a, r) = (t.alpha, t.rho);
    2.0 * r / a * t.dist0.powi(2) + 4.0 * t.zstar_norm.powi(2) + 17.0 * a * r * t.noise() + 39.0 * a * r.powi(3) * t.fg2()
}

/// `C3 = 2 rho/ln(K+1) (2/alpha - mu) d^2 + 4 ||z*||^2 + 8 alpha rho (4G^2 + s^2)
///       + 32 alpha rho^3 F^2 G^2 / ln(K+1)^2`
pub fn c3(t: &TheoryInputs) -> f64 {
    let (a, r) = (t.alpha, t.rho);
    let l = (t.horizon as f64 + 1.0).ln();
    2.0 * r / l * (2.0 / a - t.mu) * t.dist0.powi(2)
        + 4.0 * t.zstar_norm.powi(2)
        + 8.0 * a * r * t.noise()
        + 32.0 * a * r.powi(3) * t.fg2() / (l * l)
}

fn dual_constant(kind: ScheduleKind, t: &TheoryInputs) -> f64 {
    match kind {
        ScheduleKind::FixedHorizon => c1(t),
        ScheduleKind::Anytime => c2(t),
        ScheduleKind::StronglyConvex => c3(t),
    }
}

/// Bound on `E ||z^k||^2`: `C / (1 - c alpha rho G^2 / m)` with `c` the kind's product constant.
pub fn dual_bound(kind: ScheduleKind, t: &TheoryInputs) -> Result<f64> {
    t.validate()?;
    let slack = t.slack(kind)?;
    Ok(dual_constant(kind, t) * t.m as f64 / slack)
}

/// `phi1`, `phi2` or `phi3` for the kind.
pub fn phi(kind: ScheduleKind, t: &TheoryInputs) -> Result<f64> {
    t.validate()?;
    let slack = t.slack(kind)?;
    let (a, r) = (t.alpha, t.rho);
    let d2 = t.dist0.powi(2);
    let g2 = t.g_bound.powi(2);
    let kf = t.horizon as f64;
    Ok(match kind {
        ScheduleKind::FixedHorizon => {
            d2 / (2.0 * a) + 2.0 * a * t.noise() + 8.0 * a * (r * r * t.fg2() / kf + g2 * c1(t) / slack)
        }
        ScheduleKind::Anytime => {
            d2 / (2.0 * a) + 5.0 * a * t.noise() + 10.0 * a * r * r * t.fg2() + 17.0 * a * g2 * c2(t) / slack
        }
        ScheduleKind::StronglyConvex => {
            let l = (kf + 1.0).ln();
            (2.0 - a * t.mu) / (2.0 * a * l) * d2
                + 2.0 * a * t.noise()
                + 8.0 * a * (r * r * t.fg2() / (l * l) + g2 * c3(t) / slack)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEnvelope {
    /// Bound on `E |f0(xbar) - f0(x*)|`.
    pub obj_bound: f64,
    /// Bound on `E (1/m) sum [f_i(xbar)]_+`.
    pub infeas_bound: f64,
    /// Bound on `E ||x^{K+1} - x*||^2`; strongly convex kind only.
    pub last_iterate_bound: Option<f64>,
}

/// Leading factor of the kind's ergodic rate at budget `K`.
pub fn rate_prefactor(kind: ScheduleKind, big_k: u64) -> f64 {
    let kf = big_k as f64;
    match kind {
        ScheduleKind::FixedHorizon => 1.0 / kf.sqrt(),
        ScheduleKind::Anytime => (kf + 1.0).ln() / (2.0 * ((kf + 2.0).sqrt() - 2f64.sqrt())),
        ScheduleKind::StronglyConvex => (kf + 1.0).ln() / kf,
    }
}

/// Right-hand sides of the rate theorems at budget `K`; `inputs.horizon` is replaced by `K`.
pub fn rate_envelope(kind: ScheduleKind, inputs: &TheoryInputs, big_k: u64) -> Result<RateEnvelope> {
    if big_k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    let t = TheoryInputs { horizon: big_k, ..*inputs };
    let ph = phi(kind, &t)?;
    let pref = rate_prefactor(kind, big_k);
    let zs2 = t.zstar_norm.powi(2);
    let obj_bound = pref * (2.0 * ph + 9.0 * zs2 / (2.0 * t.rho));
    let infeas_bound = pref * (ph + t.zstar_plus1_norm.powi(2) / (2.0 * t.rho));
    let last_iterate_bound = (kind == ScheduleKind::StronglyConvex).then(|| {
        let kf = big_k as f64;
        2.0 * t.alpha * (kf + 1.0).ln() / (kf + 1.0) * (ph + zs2 / (2.0 * t.rho))
    });
    Ok(RateEnvelope { obj_bound, infeas_bound, last_iterate_bound })
}

/// All dual constants and rate constants for one set of inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryBounds {
    pub inputs: TheoryInputs,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// `None` where the kind's product condition fails.
    pub phi1: Option<f64>,
    pub phi2: Option<f64>,
    pub phi3: Option<f64>,
}

impl TheoryBounds {
    pub fn compute(inputs: &TheoryInputs) -> Result<Self> {
        inputs.validate()?;
        Ok(Self {
            inputs: *inputs,
            c1: c1(inputs),
            c2: c2(inputs),
            c3: c3(inputs),
            phi1: phi(ScheduleKind::FixedHorizon, inputs).ok(),
            phi2: phi(ScheduleKind::Anytime, inputs).ok(),
            phi3: phi(ScheduleKind::StronglyConvex, inputs).ok(),
        })
    }
}
