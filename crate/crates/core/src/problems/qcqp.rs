use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{BoxDomain, Oracle};
use crate::error::{check_len, Error, Result};
use crate::linalg::{axpy, dot, matvec, matvec_t_add, norm_sq};

/// Dense QCQP data
///
/// ```text
/// minimize    (1/2N) sum_i ||H_i x - c_i||^2
/// subject to  (1/2) x^T Q_j x + a_j^T x <= b_j,   j = 1..m,   x in X
/// ```
///
/// All matrices are row-major. The objective is also kept in Gram form
/// `(1/2) x^T A x - v^T x + k` so that exact values and gradients cost O(n^2).
#[derive(Debug, Clone)]
pub struct QcqpData {
    n: usize,
    p: usize,
    big_n: usize,
    m: usize,
    h: Vec<f64>,
    c: Vec<f64>,
    q: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    domain: BoxDomain,
    seed: Option<u64>,
    gram: Vec<f64>,
    lin: Vec<f64>,
    offset: f64,
    quad_zero: Vec<bool>,
}

impl QcqpData {
    /// Assembles an instance from raw arrays; `h` holds N blocks of `p x n`, `q` holds m
    /// blocks of `n x n`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        n: usize,
        p: usize,
        big_n: usize,
        m: usize,
        h: Vec<f64>,
        c: Vec<f64>,
        q: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
        domain: BoxDomain,
        seed: Option<u64>,
    ) -> Result<Self> {
        if n == 0 || p == 0 || big_n == 0 || m == 0 {
            return Err(Error::InvalidArgument(format!(
                "all dimensions must be positive (n={n}, p={p}, N={big_n}, m={m})"
            )));
        }
        check_len(big_n * p * n, h.len())?;
        check_len(big_n * p, c.len())?;
        check_len(m * n * n, q.len())?;
        check_len(m * n, a.len())?;
        check_len(m, b.len())?;
        check_len(n, domain.dim())?;

        let mut gram = vec![0.0; n * n];
        let mut lin = vec![0.0; n];
        let mut offset = 0.0;
        for i in 0..big_n {
            let hi = &h[i * p * n..(i + 1) * p * n];
            let ci = &c[i * p..(i + 1) * p];
            for r in 0..p {
                let row = &hi[r * n..(r + 1) * n];
                for (s, rs) in row.iter().enumerate() {
                    if *rs != 0.0 {
                        axpy(*rs, row, &mut gram[s * n..(s + 1) * n]);
                    }
                }
                axpy(ci[r], row, &mut lin);
            }
            offset += norm_sq(ci);
        }
        let inv = 1.0 / big_n as f64;
        gram.iter_mut().for_each(|v| *v *= inv);
        lin.iter_mut().for_each(|v| *v *= inv);
        offset *= 0.5 * inv;
        let quad_zero = q.chunks(n * n).map(|blk| blk.iter().all(|v| *v == 0.0)).collect();

        Ok(Self { n, p, big_n, m, h, c, q, a, b, domain, seed, gram, lin, offset, quad_zero })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of objective samples N.
    pub fn num_samples(&self) -> usize {
        self.big_n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn h_block(&self, i: usize) -> &[f64] {
        &self.h[i * self.p * self.n..(i + 1) * self.p * self.n]
    }

    pub fn c_block(&self, i: usize) -> &[f64] {
        &self.c[i * self.p..(i + 1) * self.p]
    }

    pub fn q_block(&self, j: usize) -> &[f64] {
        &self.q[j * self.n * self.n..(j + 1) * self.n * self.n]
    }

    pub fn a_row(&self, j: usize) -> &[f64] {
        &self.a[j * self.n..(j + 1) * self.n]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `(1/N) sum_i H_i^T H_i`
    pub fn gram(&self) -> &[f64] {
        &self.gram
    }

    /// `(1/N) sum_i H_i^T c_i`
    pub fn gram_rhs(&self) -> &[f64] {
        &self.lin
    }

    pub(crate) fn raw_h(&self) -> &[f64] {
        &self.h
    }

    pub(crate) fn raw_c(&self) -> &[f64] {
        &self.c
    }

    pub(crate) fn raw_q(&self) -> &[f64] {
        &self.q
    }

    pub(crate) fn raw_a(&self) -> &[f64] {
        &self.a
    }

    /// Stochastic gradient of sample `i`: `H_i^T (H_i x - c_i)`.
    pub fn sample_grad(&self, i: usize, x: &[f64], grad: &mut [f64]) {
        let hi = self.h_block(i);
        let ci = self.c_block(i);
        let mut resid = vec![0.0; self.p];
        matvec(hi, self.p, self.n, x, &mut resid);
        for (r, c) in resid.iter_mut().zip(ci) {
            *r -= c;
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        matvec_t_add(hi, self.p, self.n, &resid, grad);
    }

    fn quad_form_grad(&self, j: usize, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let aj = self.a_row(j);
        let mut val = dot(aj, x) - self.b[j];
        match grad {
            Some(g) => {
                if self.quad_zero[j] {
                    g.copy_from_slice(aj);
                } else {
                    matvec(self.q_block(j), self.n, self.n, x, g);
                    val += 0.5 * dot(g, x);
                    axpy(1.0, aj, g);
                }
            }
            None => {
                if !self.quad_zero[j] {
                    let qj = self.q_block(j);
                    let mut quad = 0.0;
                    for r in 0..self.n {
                        quad += x[r] * dot(&qj[r * self.n..(r + 1) * self.n], x);
                    }
                    val += 0.5 * quad;
                }
            }
        }
        val
    }
}

impl Oracle for QcqpData {
    fn dim(&self) -> usize {
        self.n
    }

    fn num_constraints(&self) -> usize {
        self.m
    }

    fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.n];
        matvec(&self.gram, self.n, self.n, x, &mut ax);
        0.5 * dot(&ax, x) - dot(&self.lin, x) + self.offset
    }

    fn objective_grad(&self, x: &[f64], grad: &mut [f64]) {
        matvec(&self.gram, self.n, self.n, x, grad);
        axpy(-1.0, &self.lin, grad);
    }

    fn stochastic_objective_grad(&self, x: &[f64], rng: &mut dyn RngCore, grad: &mut [f64]) {
        let i = rng.random_range(0..self.big_n);
        self.sample_grad(i, x, grad);
    }

    fn constraint(&self, j: usize, x: &[f64]) -> f64 {
        self.quad_form_grad(j, x, None)
    }

    fn constraint_and_grad(&self, j: usize, x: &[f64], grad: &mut [f64]) -> f64 {
        self.quad_form_grad(j, x, Some(grad))
    }

    fn origin_feasible(&self) -> bool {
        self.b.iter().all(|b| *b > 0.0)
    }
}

fn normal_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn uniform_rhs(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(0.1..1.1)).collect()
}

/// Random convex QCQP over `[-10, 10]^n`.
///
/// `H_i`, `c_i`, `a_j` have i.i.d. standard normal entries, `Q_j = M_j M_j^T / n`
/// with standard normal `M_j`, and `b_j ~ U[0.1, 1.1]`, so the origin is strictly
/// feasible. Draw order is H, c, Q, a, b from one ChaCha8 stream seeded by `seed`.
pub fn gen_qcqp(n: usize, p: usize, big_n: usize, m: usize, seed: u64) -> Result<QcqpData> {
    if n == 0 || p == 0 || big_n == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "all dimensions must be positive (n={n}, p={p}, N={big_n}, m={m})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = normal_vec(&mut rng, big_n * p * n);
    let c = normal_vec(&mut rng, big_n * p);
    let mut q = vec![0.0; m * n * n];
    let scale = 1.0 / n as f64;
    for blk in q.chunks_mut(n * n) {
        let mj = normal_vec(&mut rng, n * n);
        for r in 0..n {
            for s in r..n {
                let v = scale * dot(&mj[r * n..(r + 1) * n], &mj[s * n..(s + 1) * n]);
                blk[r * n + s] = v;
                blk[s * n + r] = v;
            }
        }
    }
    let a = normal_vec(&mut rng, m * n);
    let b = uniform_rhs(&mut rng, m);
    QcqpData::from_parts(n, p, big_n, m, h, c, q, a, b, BoxDomain::symmetric(n, 10.0)?, Some(seed))
}

/// Parameters of the flattened two-stage scenario family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioLpParams {
    /// Total decision dimension; the last `second_stage_dim` coordinates form the recourse block.
    pub n: usize,
    /// Number of scenario constraints, also the number of objective scenarios.
    pub m: usize,
    pub second_stage_dim: usize,
    /// Strong-convexity modulus of the quadratic regularizer.
    pub mu: f64,
    /// Scale of the first-stage linear cost.
    pub cost_scale: f64,
    pub seed: u64,
}

impl ScenarioLpParams {
    pub fn new(n: usize, m: usize, second_stage_dim: usize, seed: u64) -> Self {
        Self { n, m, second_stage_dim, mu: 1.0, cost_scale: 1.0, seed }
    }
}

/// Scenario-LP family with unit modulus; see [`gen_scenario_lp_with`].
pub fn gen_scenario_lp(n: usize, m: usize, second_stage_dim: usize, seed: u64) -> Result<QcqpData> {
    gen_scenario_lp_with(ScenarioLpParams::new(n, m, second_stage_dim, seed))
}

/// Flattened two-stage scenario problem with affine constraints
/// `a_j^T x <= b_j` and a strongly convex stochastic objective.
///
/// Scenario `i` contributes the least-squares block `H_i = [sqrt(mu) I; h_i^T]`, giving
///
/// ```text
/// f0(x) = (mu/2) ||x||^2 + mean_i(t_i)^T x + (1/2N) sum_i (h_i^T x - s_i)^2 + const
/// ```
///
/// where `t_i` carries a fixed first-stage cost and a scenario-dependent recourse cost.
/// Constraint rows and `h_i` are Gaussian with entries of variance `1/n`; `b_j ~ U[0.1, 1.1]`
/// so the origin is strictly feasible. The result is stored in [`QcqpData`] form with
/// `Q_j = 0`, `p = n + 1` and `N = m`.
pub fn gen_scenario_lp_with(params: ScenarioLpParams) -> Result<QcqpData> {
    let ScenarioLpParams { n, m, second_stage_dim, mu, cost_scale, seed } = params;
    if n == 0 || m == 0 || second_stage_dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "dimensions must be positive (n={n}, m={m}, second_stage_dim={second_stage_dim})"
        )));
    }
    if second_stage_dim > n {
        return Err(Error::InvalidArgument(format!(
            "second_stage_dim {second_stage_dim} exceeds decision dimension {n}"
        )));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    let first = n - second_stage_dim;
    let p = n + 1;
    let big_n = m;
    let row_scale = 1.0 / (n as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let first_cost: Vec<f64> = normal_vec(&mut rng, first).into_iter().map(|v| cost_scale * v).collect();
    let sqrt_mu = mu.sqrt();
    let mut h = vec![0.0; big_n * p * n];
    let mut c = vec![0.0; big_n * p];
    for i in 0..big_n {
        let blk = &mut h[i * p * n..(i + 1) * p * n];
        for r in 0..n {
            blk[r * n + r] = sqrt_mu;
        }
        let hi = normal_vec(&mut rng, n);
        for (dst, v) in blk[n * n..].iter_mut().zip(hi) {
            *dst = row_scale * v;
        }
        let recourse = normal_vec(&mut rng, second_stage_dim);
        let ci = &mut c[i * p..(i + 1) * p];
        // target -cost/sqrt(mu) makes the linear term exactly cost^T x
        for (r, cost) in first_cost.iter().enumerate() {
            ci[r] = -cost / sqrt_mu;
        }
        for (r, v) in recourse.into_iter().enumerate() {
            ci[first + r] = -cost_scale * v / sqrt_mu;
        }
        ci[n] = rng.sample::<f64, _>(StandardNormal);
    }
    let a: Vec<f64> = normal_vec(&mut rng, m * n).into_iter().map(|v| row_scale * v).collect();
    let b = uniform_rhs(&mut rng, m);
    let q = vec![0.0; m * n * n];
    QcqpData::from_parts(n, p, big_n, m, h, c, q, a, b, BoxDomain::symmetric(n, 10.0)?, Some(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    fn fd_grad(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..x.len())
            .map(|k| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[k] += h;
                xm[k] -= h;
                (f(&xp) - f(&xm)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn rejects_zero_dims() {
        assert!(gen_qcqp(0, 1, 1, 1, 0).is_err());
        assert!(gen_qcqp(2, 1, 1, 0, 0).is_err());
        assert!(gen_scenario_lp(0, 2, 1, 0).is_err());
        assert!(gen_scenario_lp(2, 2, 3, 0).is_err());
    }

    #[test]
    fn single_sample_has_zero_variance() {
        let inst = gen_qcqp(2, 1, 1, 1, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = [0.3, -1.2];
        let mut g = [0.0; 2];
        let mut s = [0.0; 2];
        inst.objective_grad(&x, &mut g);
        for _ in 0..5 {
            inst.stochastic_objective_grad(&x, &mut rng, &mut s);
            assert!((g[0] - s[0]).abs() < 1e-12 && (g[1] - s[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn origin_is_strictly_feasible() {
        for seed in 0..5 {
            let inst = gen_qcqp(4, 3, 5, 30, seed).unwrap();
            assert!(inst.origin_feasible());
            for j in 0..inst.m() {
                let f = inst.constraint(j, &[0.0; 4]);
                assert_eq!(f, -inst.b()[j]);
                assert!((-1.1..=-0.1).contains(&f));
            }
        }
        let lp = gen_scenario_lp(2, 2, 1, 4).unwrap();
        assert!((0..2).all(|j| lp.constraint(j, &[0.0, 0.0]) < 0.0));
    }

    #[test]
    fn q_blocks_are_symmetric_psd() {
        let inst = gen_qcqp(5, 2, 2, 6, 11).unwrap();
        for j in 0..inst.m() {
            let q = nalgebra::DMatrix::from_row_slice(5, 5, inst.q_block(j));
            assert_eq!(q, q.transpose());
            let eig = q.symmetric_eigen();
            assert!(eig.eigenvalues.iter().all(|v| *v >= -1e-10));
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let inst = gen_qcqp(6, 4, 7, 5, 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let x = inst.domain().sample(&mut rng);
            let x: Vec<f64> = x.iter().map(|v| v * 0.1).collect();
            let mut g = vec![0.0; 6];
            inst.objective_grad(&x, &mut g);
            let fd = fd_grad(|y| inst.objective(y), &x);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-5 * (1.0 + a.abs()), "{a} vs {b}");
            }
            for j in 0..inst.m() {
                let mut gj = vec![0.0; 6];
                let v = inst.constraint_and_grad(j, &x, &mut gj);
                assert!((v - inst.constraint(j, &x)).abs() < 1e-12);
                let fd = fd_grad(|y| inst.constraint(j, y), &x);
                for (a, b) in gj.iter().zip(&fd) {
                    assert!((a - b).abs() < 1e-5 * (1.0 + a.abs()));
                }
            }
        }
    }

    #[test]
    fn gram_form_matches_direct_sum() {
        let inst = gen_qcqp(5, 3, 8, 2, 2).unwrap();
        let x = [0.5, -0.25, 1.0, 2.0, -1.5];
        let mut direct = 0.0;
        for i in 0..8 {
            let mut r = vec![0.0; 3];
            matvec(inst.h_block(i), 3, 5, &x, &mut r);
            for (ri, ci) in r.iter_mut().zip(inst.c_block(i)) {
                *ri -= ci;
            }
            direct += norm_sq(&r);
        }
        direct /= 16.0;
        assert!((inst.objective(&x) - direct).abs() < 1e-10 * direct.abs().max(1.0));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = gen_qcqp(4, 2, 6, 7, 99).unwrap();
        let b = gen_qcqp(4, 2, 6, 7, 99).unwrap();
        assert_eq!(a.raw_h(), b.raw_h());
        assert_eq!(a.raw_q(), b.raw_q());
        assert_eq!(a.b(), b.b());
        let c = gen_qcqp(4, 2, 6, 7, 100).unwrap();
        assert_ne!(a.raw_h(), c.raw_h());
    }

    #[test]
    fn scenario_objective_has_modulus_mu() {
        let inst = gen_scenario_lp_with(ScenarioLpParams { mu: 2.5, ..ScenarioLpParams::new(6, 20, 2, 3) }).unwrap();
        let g = nalgebra::DMatrix::from_row_slice(6, 6, inst.gram());
        let min = g.symmetric_eigen().eigenvalues.min();
        assert!(min >= 2.5 - 1e-10);
        // affine constraints: gradient is the row itself
        let mut gj = vec![0.0; 6];
        inst.constraint_and_grad(3, &[1.0; 6], &mut gj);
        assert_eq!(gj, inst.a_row(3));
        assert!(norm(inst.a_row(0)) > 0.0);
    }
}
