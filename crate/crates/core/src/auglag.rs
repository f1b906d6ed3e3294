//! Augmented-Lagrangian penalty primitives.
//!
//! For a constraint value `u = f_i(x)` and multiplier `v = z_i`, the scalar
//! penalty is
//!
//! ```text
//! psi_beta(u, v) = u v + (beta/2) u^2     if beta u + v >= 0
//!                = -v^2 / (2 beta)        otherwise
//! ```
//!
//! and the aggregate is `Psi_beta(x, z) = (1/m) sum_i psi_beta(f_i(x), z_i)`.
//! The penalty is convex in `u` (hence in `x` for convex `f_i`) and concave in `v`.

use crate::error::{check_len, Error, Result};

/// Value of `psi_beta(u, v)` together with both partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyEval {
    pub value: f64,
    /// Outer factor of the u-subgradient, `[beta u + v]_+`.
    pub du: f64,
    /// Partial derivative in `v`, `max(u, -v/beta)`.
    pub dv: f64,
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("penalty beta must be positive and finite, got {beta}")))
    }
}

/// Evaluates the scalar penalty. Ties on the switching surface `beta u + v = 0`
/// take the quadratic branch.
pub fn psi(u: f64, v: f64, beta: f64) -> Result<PenaltyEval> {
    check_beta(beta)?;
    if !u.is_finite() || !v.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite penalty input u={u}, v={v}")));
    }
    Ok(psi_unchecked(u, v, beta))
}

#[inline]
pub(crate) fn psi_unchecked(u: f64, v: f64, beta: f64) -> PenaltyEval {
    let s = beta * u + v;
    if s >= 0.0 {
        PenaltyEval { value: u * v + 0.5 * beta * u * u, du: s, dv: u }
    } else {
        PenaltyEval { value: -v * v / (2.0 * beta), du: 0.0, dv: -v / beta }
    }
}

/// `Psi_beta = (1/m) sum_i psi_beta(fvals[i], z[i])`.
pub fn big_psi(fvals: &[f64], z: &[f64], beta: f64) -> Result<f64> {
    check_len(fvals.len(), z.len())?;
    if fvals.is_empty() {
        return Err(Error::InvalidArgument("at least one constraint value is required".into()));
    }
    let mut acc = 0.0;
    for (&u, &v) in fvals.iter().zip(z) {
        acc += psi(u, v, beta)?.value;
    }
    Ok(acc / fvals.len() as f64)
}

/// Stochastic subgradient of the augmented Lagrangian in `x` for one sampled
/// constraint: `g0 + [beta f_i + z_i]_+ grad f_i`.
pub fn primal_stoch_subgrad(
    g0: &[f64],
    fval_i: f64,
    gradf_i: &[f64],
    z_i: f64,
    beta: f64,
) -> Result<Vec<f64>> {
    check_len(g0.len(), gradf_i.len())?;
    check_beta(beta)?;
    let mult = (beta * fval_i + z_i).max(0.0);
    Ok(g0.iter().zip(gradf_i).map(|(g, d)| g + mult * d).collect())
}

/// Dual coordinate step `z + rho max(-z/beta, f)`.
///
/// Written as `max(z (1 - rho/beta), z + rho f)` so that `rho = beta` gives an exact
/// zero rather than a rounding residue of either sign.
#[inline]
pub fn dual_step(z: f64, f: f64, rho: f64, beta: f64) -> f64 {
    (z * (1.0 - rho / beta)).max(z + rho * f)
}

/// Lagrangian gap `f0(xbar) - f0(x) + (1/m) sum_i z_i f_i(xbar)`.
///
/// The point `xbar` itself only enters through the precomputed values.
pub fn gap_phi(f0_xbar: f64, f0_x: f64, fvals_xbar: &[f64], z: &[f64]) -> Result<f64> {
    check_len(z.len(), fvals_xbar.len())?;
    if z.is_empty() {
        return Err(Error::InvalidArgument("at least one constraint value is required".into()));
    }
    let coupling: f64 = z.iter().zip(fvals_xbar).map(|(zi, fi)| zi * fi).sum();
    Ok(f0_xbar - f0_x + coupling / z.len() as f64)
}
