//! Problem constants used by the step-size conditions and the theoretical bounds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Oracle, QcqpData};
use crate::linalg::{dist_sq, frobenius, norm};

/// Largest dimension for which the smallest Hessian eigenvalue is computed.
pub const EIGEN_DIM_LIMIT: usize = 200;

/// Bounds `|f_j(x)| <= F`, `||grad f_j(x)|| <= G` over X, the objective gradient noise
/// level `sigma` and the strong-convexity modulus `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    pub f_bound: f64,
    pub g_bound: f64,
    /// Empirical, never certified.
    pub sigma: f64,
    pub mu: f64,
    /// False when `mu` was not computed and is reported as 0.
    pub mu_computed: bool,
}

/// Closed-form certified `F`, `G` for a QCQP (spectral norms bounded by Frobenius norms),
/// an empirical `sigma` (largest per-point standard deviation of the sampled gradient over
/// `samples` uniform points of X) and the smallest eigenvalue of the objective Hessian on
/// instances with `n <= EIGEN_DIM_LIMIT`.
pub fn certify_constants(inst: &QcqpData, samples: usize, rng_seed: u64) -> TheoryConstants {
    let radius = inst.domain().radius();
    let mut f_bound: f64 = 0.0;
    let mut g_bound: f64 = 0.0;
    for j in 0..inst.m() {
        let qn = frobenius(inst.q_block(j));
        let an = norm(inst.a_row(j));
        f_bound = f_bound.max(0.5 * qn * radius * radius + an * radius + inst.b()[j].abs());
        g_bound = g_bound.max(qn * radius + an);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = inst.n();
    let big_n = inst.num_samples();
    let mut sigma: f64 = 0.0;
    let mut mean = vec![0.0; n];
    let mut g = vec![0.0; n];
    for _ in 0..samples {
        let x = inst.domain().sample(&mut rng);
        inst.objective_grad(&x, &mut mean);
        let mut acc = 0.0;
        for i in 0..big_n {
            inst.sample_grad(i, &x, &mut g);
            acc += dist_sq(&g, &mean);
        }
        sigma = sigma.max((acc / big_n as f64).sqrt());
    }

    let (mu, mu_computed) = if n <= EIGEN_DIM_LIMIT {
        let a = nalgebra::DMatrix::from_row_slice(n, n, inst.gram());
        (a.symmetric_eigen().eigenvalues.min().max(0.0), true)
    } else {
        (0.0, false)
    };

    TheoryConstants { f_bound, g_bound, sigma, mu, mu_computed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{gen_qcqp, BoxDomain};
    use rand::Rng;

    #[test]
    fn closed_form_single_affine_constraint() {
        let inst = QcqpData::from_parts(
            2,
            1,
            1,
            1,
            vec![1.0, 0.0],
            vec![0.0],
            vec![0.0; 4],
            vec![1.0, 0.0],
            vec![1.0],
            BoxDomain::symmetric(2, 10.0).unwrap(),
            None,
        )
        .unwrap();
        let k = certify_constants(&inst, 3, 0);
        assert_eq!(k.g_bound, 1.0);
        assert!((k.f_bound - (10.0 * 2f64.sqrt() + 1.0)).abs() < 1e-12);
        assert_eq!(k.sigma, 0.0);
    }

    #[test]
    fn bounds_hold_at_sampled_points() {
        let inst = gen_qcqp(5, 3, 4, 20, 8).unwrap();
        let k = certify_constants(&inst, 4, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut g = vec![0.0; 5];
        for _ in 0..10_000 {
            let j = rng.random_range(0..inst.m());
            let x = inst.domain().sample(&mut rng);
            let v = inst.constraint_and_grad(j, &x, &mut g);
            assert!(v.abs() <= k.f_bound);
            assert!(norm(&g) <= k.g_bound);
        }
        assert!(k.mu_computed);
        assert!(k.sigma > 0.0);
    }
}
