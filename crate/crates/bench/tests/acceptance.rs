//! Acceptance suite. Prints one PASS/FAIL line per criterion and a summary.
//!
//! The process exits 0 regardless of the outcome so that `cargo test` reports build and
//! harness problems separately from numerical results; set `ACCEPTANCE_STRICT=1` to exit
//! with status 1 when any criterion fails.

use std::ops::ControlFlow;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pdsg::auglag::{big_psi, psi};
use pdsg::baselines::{
    default_z_max, full_batch_reference, run_mirror_prox, MirrorProxConfig, ReferenceConfig, ReferenceSolution,
};
use pdsg::linalg::{dist_sq, norm, norm_sq};
use pdsg::metrics::{Recorder, RunRecord};
use pdsg::problems::sizing::{scenario_count_discarding, scenario_count_robust};
use pdsg::problems::{certify_constants, gen_qcqp, gen_scenario_lp, AffineProblem, TheoryConstants};
use pdsg::solver::{pdsg_step, run, validate_schedule, RunOptions, StepParams, CHECK_ALPHA_MU, CHECK_PRODUCT};
use pdsg::theory::{dual_bound, TheoryInputs};
use pdsg::{BoxDomain, Oracle, ParamSchedule, PointTag, QcqpData, ScheduleKind, SolverState};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

/// Largest `a` with `a^2 < m / (c G^2)`, capped at 1.
fn largest_valid(m: usize, g: f64, c: f64) -> f64 {
    ((m as f64 / (c * g * g)).sqrt() * (1.0 - 1e-9)).min(1.0)
}

fn line_problem() -> AffineProblem {
    // min x  s.t.  -x - 1 <= 0,  x in [-10, 10]
    AffineProblem::new(vec![1.0], vec![vec![-1.0]], vec![1.0], BoxDomain::symmetric(1, 10.0).unwrap()).unwrap()
}

fn reference(inst: &QcqpData, tol: f64) -> ReferenceSolution {
    full_batch_reference(inst, &ReferenceConfig { tol, ..ReferenceConfig::for_instance(inst) }).expect("reference solve")
}

/// Canonical desk instance: QCQP n=20, p=15, N=m=200, instance seed 0.
struct Desk {
    inst: QcqpData,
    consts: TheoryConstants,
    reference: ReferenceSolution,
    alpha: f64,
    iters: u64,
}

fn desk() -> &'static Desk {
    static DESK: OnceLock<Desk> = OnceLock::new();
    DESK.get_or_init(|| {
        let inst = gen_qcqp(20, 15, 200, 200, 0).unwrap();
        let consts = certify_constants(&inst, 20, 0);
        let reference = reference(&inst, 1e-9);
        let m = inst.num_constraints();
        let alpha = largest_valid(m, consts.g_bound, ScheduleKind::FixedHorizon.product_constant());
        Desk { inst, consts, reference, alpha, iters: 50 * m as u64 }
    })
}

impl Desk {
    fn m(&self) -> u64 {
        self.inst.num_constraints() as u64
    }

    fn schedule(&self) -> ParamSchedule {
        ParamSchedule::fixed_horizon(self.alpha, self.alpha, self.iters)
    }

    /// Ergodic (plain) rows, one per epoch.
    fn pdsg_epochs(&self, seed: u64) -> RunRecord {
        let opts = RunOptions { cadence: self.m(), ..Default::default() };
        let mut rec = Recorder::new(&self.inst, self.reference.f0).with_points(&[PointTag::ErgodicPlain]);
        run(&self.inst, &self.schedule(), self.iters, seed, &opts, &mut rec).expect("pdsg run").record
    }
}

fn c1_penalty() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ev = |u: f64, v: f64, b: f64| psi(u, v, b).unwrap();
    let (mut cont, mut fd, mut shape) = (0.0_f64, 0.0_f64, 0usize);
    let h = 1e-6;
    for _ in 0..1000 {
        let beta = 10f64.powf(rng.random_range(-1.0..1.0));
        let v: f64 = rng.random_range(-10.0..10.0);
        let u0 = -v / beta;
        let limit = -v * v / (2.0 * beta);
        for u in [u0.next_down(), u0, u0.next_up()] {
            cont = cont.max((ev(u, v, beta).value - limit).abs() / limit.abs().max(f64::MIN_POSITIVE));
        }

        let u: f64 = rng.random_range(-10.0..10.0);
        let p = ev(u, v, beta);
        let du = (ev(u + h, v, beta).value - ev(u - h, v, beta).value) / (2.0 * h);
        let dv = (ev(u, v + h, beta).value - ev(u, v - h, beta).value) / (2.0 * h);
        fd = fd.max((du - p.du).abs()).max((dv - p.dv).abs());

        let t: f64 = rng.random();
        let (u1, u2): (f64, f64) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let (a, b) = (ev(u1, v, beta).value, ev(u2, v, beta).value);
        if ev(t * u1 + (1.0 - t) * u2, v, beta).value > t * a + (1.0 - t) * b + 1e-12 * (a.abs() + b.abs() + 1.0) {
            shape += 1;
        }
        let (v1, v2): (f64, f64) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let (a, b) = (ev(u, v1, beta).value, ev(u, v2, beta).value);
        if ev(u, t * v1 + (1.0 - t) * v2, beta).value < t * a + (1.0 - t) * b - 1e-12 * (a.abs() + b.abs() + 1.0) {
            shape += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        cont <= 1e-12 && fd <= 1e-5 && shape == 0 && secs < 1.0,
        format!("continuity rel {cont:.1e}, FD err {fd:.1e}, shape violations {shape}, {secs:.2}s"),
    )
}

fn c2_hand_trace() -> Outcome {
    let inst = line_problem();
    let p = StepParams { alpha: 1.0, rho: 1.0, beta: 1.0 };
    let want_x = [-1.0, -2.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0];
    let want_z = [0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
    let mut s = SolverState::new(vec![0.0], 1, 0);
    let mut err: f64 = 0.0;
    for k in 0..10 {
        pdsg_step(&mut s, &inst, p).unwrap();
        err = err.max((s.x[0] - want_x[k]).abs()).max((s.z[0] - want_z[k]).abs());
    }
    Outcome::new(err <= 1e-12, format!("max deviation over 10 steps {err:.1e}"))
}

fn small_family(seed: u64) -> QcqpData {
    gen_qcqp(10, 8, 50, 50, seed).unwrap()
}

fn c3_dual_sign() -> Outcome {
    let k = 10_000;
    let mut min_z = f64::INFINITY;
    for seed in 1..=20 {
        let inst = small_family(seed);
        let g = certify_constants(&inst, 0, 0).g_bound;
        let m = inst.num_constraints();
        let fixed = largest_valid(m, g, ScheduleKind::FixedHorizon.product_constant());
        let anytime = largest_valid(m, g, ScheduleKind::Anytime.product_constant());
        let sc_rho = m as f64 / (32.0 * g * g) * (1.0 - 1e-9);
        let schedules = [
            ParamSchedule::fixed_horizon(fixed, fixed, k),
            ParamSchedule::anytime(anytime, anytime),
            ParamSchedule::strongly_convex(1.0, sc_rho, k, 1.0),
        ];
        for sched in &schedules {
            let mut watch = |s: &SolverState, _: &mut RunRecord| {
                min_z = s.z.iter().fold(min_z, |a, &b| a.min(b));
                ControlFlow::Continue(())
            };
            let opts = RunOptions { cadence: 1, ..Default::default() };
            run(&inst, sched, k, seed, &opts, &mut watch).expect("run");
        }
    }
    Outcome::new(min_z >= 0.0, format!("min z over 20 instances x 3 schedules x 1e4 steps = {min_z:e}"))
}

/// Shrinks a random box point toward the (strictly feasible) origin until feasible.
fn feasible_point(inst: &QcqpData, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let mut x = inst.domain().sample(rng);
    let t: f64 = rng.random();
    x.iter_mut().for_each(|v| *v *= t);
    loop {
        let f = inst.constraint_values(&x);
        if f.iter().all(|&v| v <= 0.0) {
            return (x, f);
        }
        x.iter_mut().for_each(|v| *v *= 0.5);
    }
}

fn c4_lemmas() -> Outcome {
    let start = Instant::now();
    let samples = 10_000;
    let (mut worst_ratio, mut bound_viol, mut psi_viol, mut psi_max) = (0.0_f64, 0usize, 0usize, f64::NEG_INFINITY);
    for seed in 1..=5 {
        let inst = small_family(seed);
        let c = certify_constants(&inst, 0, 0);
        let (ff, gg) = (c.f_bound, c.g_bound);
        let m = inst.num_constraints();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut grad = vec![0.0; inst.dim()];
        for _ in 0..samples {
            let x = inst.domain().sample(&mut rng);
            let beta = 10f64.powf(rng.random_range(-3.0..3.0));
            let scale = 10f64.powf(rng.random_range(-2.0..3.0));
            let z: Vec<f64> = (0..m).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
            let mut lhs = 0.0;
            for (j, zj) in z.iter().enumerate() {
                let f = inst.constraint_and_grad(j, &x, &mut grad);
                lhs += (beta * f + zj).max(0.0).powi(2) * norm_sq(&grad);
            }
            lhs /= m as f64;
            let rhs = 2.0 * (beta * ff * gg).powi(2) + 2.0 * gg * gg / m as f64 * norm_sq(&z);
            worst_ratio = worst_ratio.max(lhs / rhs);
            if lhs > rhs {
                bound_viol += 1;
            }

            let (_, f) = feasible_point(&inst, &mut rng);
            let zp: Vec<f64> = z.iter().map(|v| v.abs()).collect();
            let val = big_psi(&f, &zp, beta).unwrap();
            psi_max = psi_max.max(val);
            if val > 0.0 {
                psi_viol += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        bound_viol == 0 && psi_viol == 0 && secs < 30.0,
        format!(
            "penalty-gradient bound: {bound_viol} violations (max lhs/rhs {worst_ratio:.3}); Psi <= 0: {psi_viol} violations (max {psi_max:.2e}); 5 instances x 1e4 samples, {secs:.1}s"
        ),
    )
}

fn c5_validator() -> Outcome {
    let inst = gen_qcqp(20, 15, 200, 200, 0).unwrap();
    let g = certify_constants(&inst, 0, 0).g_bound;
    let m = inst.num_constraints();
    let k = 100_000;
    let mu = 1.0;
    let fixed = largest_valid(m, g, ScheduleKind::FixedHorizon.product_constant());
    let anytime = largest_valid(m, g, ScheduleKind::Anytime.product_constant());
    let sc_rho = m as f64 * mu / (32.0 * g * g) * (1.0 - 1e-9);
    let good = [
        ParamSchedule::fixed_horizon(fixed, fixed, k),
        ParamSchedule::anytime(anytime, anytime),
        ParamSchedule::strongly_convex(1.0 / mu, sc_rho, k, mu),
    ];
    let mut notes = Vec::new();
    let mut pass = true;
    for s in &good {
        let r = validate_schedule(s, m, g, 0.0, k);
        if !r.passed() {
            pass = false;
            notes.push(format!("{} rejected: {}", s.kind, r.to_string().trim()));
        }
    }
    let failed_names = |s: &ParamSchedule| -> Vec<&'static str> {
        validate_schedule(s, m, g, 0.0, k).failed().map(|c| c.name).collect()
    };
    let small_alpha = failed_names(&ParamSchedule::strongly_convex(0.5 / mu, sc_rho, k, mu));
    let big_product = failed_names(&ParamSchedule::fixed_horizon(2.0 * fixed, 2.0 * fixed, k));
    if !small_alpha.contains(&CHECK_ALPHA_MU) {
        pass = false;
    }
    if !big_product.contains(&CHECK_PRODUCT) {
        pass = false;
    }
    notes.push(format!("alpha < 1/mu flagged {small_alpha:?}; oversized product flagged {big_product:?}"));
    Outcome::new(pass, format!("3 valid schedules at K=1e5 {}; {}", if pass { "accepted" } else { "checked" }, notes.join("; ")))
}

fn c6_desk() -> Outcome {
    let start = Instant::now();
    let d = desk();
    let mp_cfg = MirrorProxConfig::new(1.0, 1.0, d.iters, default_z_max(&d.reference.z));
    let opts = RunOptions { cadence: d.m(), ..Default::default() };
    let (mut i1, mut i50, mut o1, mut o50) = (0.0, 0.0, 0.0, 0.0);
    let mut wins = 0;
    for seed in 0..5 {
        let rows = d.pdsg_epochs(seed).rows;
        let mut rec = Recorder::new(&d.inst, d.reference.f0).with_points(&[PointTag::ErgodicPlain]);
        let mp = run_mirror_prox(&d.inst, &mp_cfg, d.iters, seed, &opts, &mut rec).expect("mirror-prox run").record.rows;
        let (first, last, mp_last) = (rows[0], rows[rows.len() - 1], mp[mp.len() - 1]);
        i1 += first.infeas / 5.0;
        i50 += last.infeas / 5.0;
        o1 += first.obj_err / 5.0;
        o50 += last.obj_err / 5.0;
        if last.obj_err < mp_last.obj_err && last.infeas < mp_last.infeas {
            wins += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let infeas_ok = i50 <= 0.05 * i1;
    let obj_ok = o50 <= 0.2 * o1;
    let wins_ok = wins >= 4;
    Outcome::new(
        infeas_ok && obj_ok && wins_ok && secs < 60.0,
        format!(
            "alpha=rho={:.3e}; (a) infeas {i1:.3e} -> {i50:.3e} [{}]; (b) obj_err {o1:.3e} -> {o50:.3e} ratio {:.3} [{}]; (c) beats mirror-prox in {wins}/5 seeds [{}]; {secs:.1}s",
            d.alpha,
            if infeas_ok { "ok" } else { "fail" },
            o50 / o1,
            if obj_ok { "ok" } else { "fail" },
            if wins_ok { "ok" } else { "fail" },
        ),
    )
}

fn c7_rate_slope() -> Outcome {
    let d = desk();
    let seeds = 10;
    let mut total = vec![0.0; 50];
    for seed in 0..seeds {
        for (t, row) in total.iter_mut().zip(d.pdsg_epochs(seed).rows) {
            *t += (row.obj_err + row.infeas) / seeds as f64;
        }
    }
    let pts: Vec<(f64, f64)> = (5..=50).map(|e| ((e as f64).ln(), total[e - 1].ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Outcome::new(slope <= -0.35, format!("log-log slope over epochs 5-50 = {slope:.3} (10 seeds)"))
}

fn c8_strongly_convex() -> Outcome {
    let inst = gen_scenario_lp(10, 50, 5, 0).unwrap();
    let c = certify_constants(&inst, 0, 0);
    let m = inst.num_constraints();
    let mu = 1.0;
    let rho = m as f64 / (32.0 * c.g_bound * c.g_bound) * (1.0 - 1e-9);
    let r = reference(&inst, 1e-10);
    let k0 = 50 * m as u64;
    let mut means = Vec::new();
    for k in [k0, 4 * k0] {
        let sched = ParamSchedule::strongly_convex(1.0 / mu, rho, k, mu);
        let mut total = 0.0;
        for seed in 0..10 {
            let out = run(&inst, &sched, k, seed, &RunOptions::default(), &mut pdsg::solver::NoMonitor).expect("run");
            total += dist_sq(&out.state.x, &r.x) / 10.0;
        }
        means.push(total);
    }
    let ratio = means[1] / means[0];
    Outcome::new(
        ratio <= 0.5,
        format!("mean ||x - x*||^2: K0={k0} {:.3e}, 4K0 {:.3e}, ratio {ratio:.3}", means[0], means[1]),
    )
}

fn c9_dual_envelope() -> Outcome {
    let d = desk();
    let seeds = 20;
    let mut mean_sq = vec![0.0; d.iters as usize];
    for seed in 0..seeds {
        let mut watch = |s: &SolverState, _: &mut RunRecord| {
            mean_sq[s.iterations() as usize - 1] += norm_sq(&s.z) / seeds as f64;
            ControlFlow::Continue(())
        };
        let opts = RunOptions { cadence: 1, ..Default::default() };
        run(&d.inst, &d.schedule(), d.iters, seed, &opts, &mut watch).expect("run");
    }
    let x1 = d.inst.initial_point();
    let inputs = TheoryInputs {
        alpha: d.alpha,
        rho: d.alpha,
        horizon: d.iters,
        m: d.inst.num_constraints(),
        f_bound: d.consts.f_bound,
        g_bound: d.consts.g_bound,
        sigma: d.consts.sigma,
        mu: 0.0,
        dist0: dist_sq(&x1, &d.reference.x).sqrt(),
        zstar_norm: 0.0,
        zstar_plus1_norm: 0.0,
    }
    .with_zstar(&d.reference.z);
    let bound = dual_bound(ScheduleKind::FixedHorizon, &inputs).expect("dual bound");
    let worst = mean_sq.iter().cloned().fold(0.0, f64::max);
    Outcome::new(
        worst <= bound,
        format!("max_k mean ||z^k||^2 = {worst:.3e} vs bound {bound:.3e} (||z*|| = {:.3e})", norm(&d.reference.z)),
    )
}

fn c10_oracle() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let (mut worst_kkt, mut worst_gap) = (0.0_f64, 0.0_f64);
    for t in 0..10u64 {
        let n = 2 + (t % 4) as usize;
        let m = 3 + (t % 8) as usize;
        let inst = gen_qcqp(n, n, 2 * n, m, 1000 + t).unwrap();
        let r = full_batch_reference(&inst, &ReferenceConfig::for_instance(&inst)).expect("reference");
        worst_kkt = worst_kkt.max(r.kkt.max());
        let k = 200 * m as u64;
        let out =
            run(&inst, &ParamSchedule::fixed_horizon(1.0, 1.0, k), k, t, &RunOptions::default(), &mut pdsg::solver::NoMonitor)
                .expect("run");
        let gap = (inst.objective(&out.state.avg_plain()) - r.f0).abs();
        worst_gap = worst_gap.max(gap);
        if r.kkt.max() > 1e-5 || gap > 1e-2 {
            pass = false;
            notes.push(format!("instance {t} (n={n}, m={m}): kkt {:.1e}, gap {gap:.1e}", r.kkt.max()));
        }
    }
    let line = line_problem();
    let r = full_batch_reference(&line, &ReferenceConfig::for_instance(&line)).expect("reference");
    let line_err = (r.x[0] + 1.0).abs();
    pass &= line_err <= 1e-6;
    notes.insert(0, format!("max KKT {worst_kkt:.1e}, max |f0(xbar) - f0*| {worst_gap:.1e}, 1-D |x - x*| {line_err:.1e}"));
    Outcome::new(pass, notes.join("; "))
}

/// Log of `C(p+n-1, p) sum_{i<=p+n-1} C(N,i) tau^i (1-tau)^(N-i)`, summed directly.
fn discarding_bound_ln(n: u64, tau: f64, p: u64, big_n: u64) -> f64 {
    let ln_choose = |a: u64, b: u64| -> f64 { (0..b).map(|t| ((a - t) as f64).ln() - ((t + 1) as f64).ln()).sum() };
    let terms: Vec<f64> = (0..=(p + n - 1).min(big_n))
        .map(|i| ln_choose(big_n, i) + i as f64 * tau.ln() + (big_n - i) as f64 * (-tau).ln_1p())
        .collect();
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    ln_choose(p + n - 1, p) + top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

fn c11_sizing() -> Outcome {
    let robust = scenario_count_robust(100, 0.01, 0.01).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut bad = Vec::new();
    for _ in 0..20 {
        let n = rng.random_range(1..=20u64);
        let tau = rng.random_range(0.01..0.2);
        let eps = 10f64.powf(rng.random_range(-6.0..-1.0));
        let p = rng.random_range(0..=5u64);
        let big_n = scenario_count_discarding(n, tau, eps, p).unwrap();
        let meets = discarding_bound_ln(n, tau, p, big_n) <= eps.ln();
        let minimal = big_n == n + p || discarding_bound_ln(n, tau, p, big_n - 1) > eps.ln();
        if !(meets && minimal) {
            bad.push(format!("(n={n}, tau={tau:.3}, eps={eps:.1e}, p={p}) -> {big_n}"));
        }
    }
    Outcome::new(
        robust == 999_999 && bad.is_empty(),
        format!("robust count {robust}; discarding minimality failures {}{}", bad.len(), if bad.is_empty() { String::new() } else { format!(": {}", bad.join(", ")) }),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("penalty primitives", c1_penalty),
        ("hand trace", c2_hand_trace),
        ("dual nonnegativity", c3_dual_sign),
        ("penalty lemmas", c4_lemmas),
        ("schedule validator", c5_validator),
        ("desk reproduction", c6_desk),
        ("rate order", c7_rate_slope),
        ("strongly convex rate", c8_strongly_convex),
        ("dual envelope", c9_dual_envelope),
        ("oracle equivalence", c10_oracle),
        ("scenario sizing", c11_sizing),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let mut passed = 0;
    let mut ran = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(i + 1))) {
            continue;
        }
        ran += 1;
        let out = check();
        if out.pass {
            passed += 1;
        }
        println!("{} {:>2} {name}: {}", if out.pass { "PASS" } else { "FAIL" }, i + 1, out.detail);
    }
    println!("acceptance: {passed}/{ran} passed");
    if passed < ran && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
