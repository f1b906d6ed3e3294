use std::fmt;

/// Relative slack allowed when comparing the two sides of an inequality that holds
/// with equality in exact arithmetic.
const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    /// `alpha_k = alpha/sqrt(K)`, `rho_k = rho/sqrt(K)`.
    FixedHorizon,
    /// `alpha_k = alpha/(sqrt(k+1) ln(k+1))`, same shape for `rho_k`.
    Anytime,
    /// `alpha_k = alpha/(k+1)`, `rho_k = rho/ln(K+1)`.
    StronglyConvex,
}

impl ScheduleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::FixedHorizon => "fixed_horizon",
            Self::Anytime => "anytime",
            Self::StronglyConvex => "strongly_convex",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fixed_horizon" | "fixed" => Some(Self::FixedHorizon),
            "anytime" => Some(Self::Anytime),
            "strongly_convex" | "strong" => Some(Self::StronglyConvex),
            _ => None,
        }
    }

    /// Constant `c` in the product condition `alpha rho < m / (c G^2)`.
    pub fn product_constant(self) -> f64 {
        match self {
            Self::FixedHorizon | Self::StronglyConvex => 32.0,
            Self::Anytime => 68.0,
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Step sizes for one iteration. `beta` is the penalty parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub alpha: f64,
    pub rho: f64,
    pub beta: f64,
}

/// Parameter sequences `{alpha_k, rho_k, beta_k}`; every built-in kind sets `beta_k = rho_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSchedule {
    pub kind: ScheduleKind,
    pub alpha: f64,
    pub rho: f64,
    /// Iteration budget K; required for fixed-horizon and strongly convex schedules.
    pub horizon: Option<u64>,
    /// Strong-convexity modulus assumed by the schedule.
    pub mu: f64,
}

impl ParamSchedule {
    pub fn fixed_horizon(alpha: f64, rho: f64, horizon: u64) -> Self {
        Self { kind: ScheduleKind::FixedHorizon, alpha, rho, horizon: Some(horizon), mu: 0.0 }
    }

    pub fn anytime(alpha: f64, rho: f64) -> Self {
        Self { kind: ScheduleKind::Anytime, alpha, rho, horizon: None, mu: 0.0 }
    }

    pub fn strongly_convex(alpha: f64, rho: f64, horizon: u64, mu: f64) -> Self {
        Self { kind: ScheduleKind::StronglyConvex, alpha, rho, horizon: Some(horizon), mu }
    }

    /// Parameters of iteration `k >= 1`.
    pub fn params(&self, k: u64) -> StepParams {
        debug_assert!(k >= 1);
        let kf = k as f64;
        let (alpha, rho) = match self.kind {
            ScheduleKind::FixedHorizon => {
                let s = (self.horizon.unwrap_or(1) as f64).sqrt();
                (self.alpha / s, self.rho / s)
            }
            ScheduleKind::Anytime => {
                let d = (kf + 1.0).sqrt() * (kf + 1.0).ln();
                (self.alpha / d, self.rho / d)
            }
            ScheduleKind::StronglyConvex => {
                let big_k = self.horizon.unwrap_or(k) as f64;
                (self.alpha / (kf + 1.0), self.rho / (big_k + 1.0).ln())
            }
        };
        StepParams { alpha, rho, beta: rho }
    }

    pub fn descriptor(&self) -> String {
        let mut s = format!("{}(alpha={},rho={}", self.kind, self.alpha, self.rho);
        if let Some(k) = self.horizon {
            s.push_str(&format!(",K={k}"));
        }
        if self.kind == ScheduleKind::StronglyConvex {
            s.push_str(&format!(",mu={}", self.mu));
        }
        s.push(')');
        s
    }
}

/// One named condition of the schedule validator.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// First iteration index where a per-iteration inequality fails.
    pub first_violation: Option<u64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<ConditionCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            write!(f, "{status} {}: {}", c.name, c.detail)?;
            if let Some(k) = c.first_violation {
                write!(f, " (first violation at k={k})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub const CHECK_BETA_GE_RHO: &str = "beta_ge_rho";
pub const CHECK_STEP_RATIO: &str = "step_ratio";
pub const CHECK_PRODUCT: &str = "product_bound";
pub const CHECK_ALPHA_MU: &str = "alpha_ge_inv_mu";

/// Checks the parameter condition
///
/// ```text
/// rho_k / alpha_k >= rho_{k+1} (1/alpha_{k+1} - mu),   beta_k >= rho_k
/// ```
///
/// for `k = 1..K-1`, the kind's product condition `alpha rho < m / (c G^2)` and, for the
/// strongly convex kind, `alpha >= 1/mu`. The strongly convex kind uses the schedule's
/// own `mu`; the other kinds use the supplied problem modulus.
pub fn validate_schedule(sched: &ParamSchedule, m: usize, g_bound: f64, mu: f64, horizon: u64) -> ValidationReport {
    let mu_eff = match sched.kind {
        ScheduleKind::StronglyConvex => sched.mu,
        _ => mu,
    };
    let mut beta_fail = None;
    let mut ratio_fail = None;
    for k in 1..horizon.max(1) {
        let p = sched.params(k);
        let q = sched.params(k + 1);
        if beta_fail.is_none() && p.beta < p.rho * (1.0 - REL_TOL) {
            beta_fail = Some(k);
        }
        let lhs = p.rho / p.alpha;
        let rhs = q.rho * (1.0 / q.alpha - mu_eff);
        if ratio_fail.is_none() && lhs < rhs - REL_TOL * lhs.abs().max(rhs.abs()) {
            ratio_fail = Some(k);
        }
        if beta_fail.is_some() && ratio_fail.is_some() {
            break;
        }
    }
    if horizon == 1 {
        let p = sched.params(1);
        if p.beta < p.rho * (1.0 - REL_TOL) {
            beta_fail = Some(1);
        }
    }

    let mut checks = vec![
        ConditionCheck {
            name: CHECK_BETA_GE_RHO,
            passed: beta_fail.is_none(),
            first_violation: beta_fail,
            detail: "beta_k >= rho_k".into(),
        },
        ConditionCheck {
            name: CHECK_STEP_RATIO,
            passed: ratio_fail.is_none(),
            first_violation: ratio_fail,
            detail: format!("rho_k/alpha_k >= rho_(k+1) (1/alpha_(k+1) - mu), mu={mu_eff}"),
        },
    ];

    let c = sched.kind.product_constant();
    let limit = m as f64 / (c * g_bound * g_bound);
    let prod = sched.alpha * sched.rho;
    checks.push(ConditionCheck {
        name: CHECK_PRODUCT,
        passed: prod < limit,
        first_violation: None,
        detail: format!("alpha*rho = {prod} < m/({c} G^2) = {limit}"),
    });

    if sched.kind == ScheduleKind::StronglyConvex {
        let ok = sched.mu > 0.0 && sched.alpha * sched.mu >= 1.0 - REL_TOL;
        checks.push(ConditionCheck {
            name: CHECK_ALPHA_MU,
            passed: ok,
            first_violation: None,
            detail: format!("alpha = {} >= 1/mu = {}", sched.alpha, 1.0 / sched.mu),
        });
    }

    ValidationReport { checks }
}
