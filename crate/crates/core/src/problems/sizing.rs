//! Scenario-count formulas for sampled chance-constrained and robust programs.

use crate::error::{Error, Result};

/// Search ceiling for [`scenario_count_discarding`].
pub const MAX_SCENARIOS: u64 = 1_000_000_000;

fn check_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must lie in (0, 1), got {v}")))
    }
}

/// Natural log of the sampling-and-discarding violation bound
///
/// ```text
/// C(p+n-1, p) * sum_{i=0}^{p+n-1} C(N, i) tau^i (1-tau)^(N-i)
/// ```
///
/// evaluated term by term in log space.
pub fn log_discarding_bound(n: u64, tau: f64, p: u64, big_n: u64) -> f64 {
    let k = p + n - 1;
    let mut log_choose = 0.0;
    for t in 1..=p {
        log_choose += ((n - 1 + t) as f64).ln() - (t as f64).ln();
    }
    let nf = big_n as f64;
    let log_ratio = tau.ln() - (-tau).ln_1p();
    let mut term = nf * (-tau).ln_1p();
    let mut max = term;
    let mut terms = Vec::with_capacity(k.min(big_n) as usize + 1);
    terms.push(term);
    for i in 0..k.min(big_n) {
        term += (nf - i as f64).ln() - ((i + 1) as f64).ln() + log_ratio;
        max = max.max(term);
        terms.push(term);
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    log_choose + max + sum.ln()
}

/// Smallest `N >= p + n` whose discarding bound is at most `eps`.
///
/// The bound is nonincreasing in `N`, so the search doubles from `p + n` and then
/// bisects.
pub fn scenario_count_discarding(n: u64, tau: f64, eps: f64, p: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    check_unit("tau", tau)?;
    check_unit("eps", eps)?;
    let log_eps = eps.ln();
    let ok = |big_n: u64| log_discarding_bound(n, tau, p, big_n) <= log_eps;

    let start = p + n;
    if start > MAX_SCENARIOS {
        return Err(Error::Capacity(format!("p + n = {start} exceeds {MAX_SCENARIOS}")));
    }
    if ok(start) {
        return Ok(start);
    }
    let mut lo = start; // violates
    let mut hi = start;
    loop {
        if hi == MAX_SCENARIOS {
            return Err(Error::Capacity(format!("no N <= {MAX_SCENARIOS} satisfies the bound")));
        }
        hi = (hi.saturating_mul(2)).min(MAX_SCENARIOS);
        if ok(hi) {
            break;
        }
        lo = hi;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `ceil(n / (tau eps) - 1)`, the sample size for tau-level robust feasibility with
/// confidence `1 - eps`.
///
/// Quotients within 1e-9 (relative) of an integer are snapped to it before the ceiling,
/// so decimal inputs such as 0.01 are not pushed up by representation error.
pub fn scenario_count_robust(n: u64, tau: f64, eps: f64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    check_unit("tau", tau)?;
    check_unit("eps", eps)?;
    let raw = n as f64 / (tau * eps) - 1.0;
    let nearest = raw.round();
    let v = if (raw - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) { nearest } else { raw.ceil() };
    if !v.is_finite() || v >= u64::MAX as f64 {
        return Err(Error::Capacity(format!("scenario count {raw} overflows")));
    }
    Ok(v.max(1.0) as u64)
}
