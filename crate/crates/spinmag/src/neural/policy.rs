//! Tanh-squashed Gaussian policy head with exact log-probabilities.
//!
//! The actor network outputs (mu, log_sigma) per action dimension. Actions
//! are sampled by reparametrization, u = mu + sigma * xi with xi standard
//! normal, then squashed as a = tanh(u). The log-density picks up the exact
//! change-of-variables correction, stabilized by a small epsilon:
//!
//! ```text
//! log pi(a) = sum_k [ log N(u_k; mu_k, sigma_k) - log(1 - tanh(u_k)^2 + eps) ].
//! ```

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::mlp::{Mlp, NeuralError};

/// Clamp range applied to log_sigma before exponentiation.
pub const LOG_SIGMA_MIN: f64 = -20.0;
pub const LOG_SIGMA_MAX: f64 = 2.0;
/// Stabilizer inside the tanh Jacobian correction.
pub const TANH_EPS: f64 = 1e-6;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Head of the actor network: per-dimension mean and clamped log-sigma.
#[derive(Debug, Clone)]
pub struct GaussianPolicyOutput {
    pub mu: DVector<f64>,
    pub log_sigma: DVector<f64>,
}

impl GaussianPolicyOutput {
    /// Splits a raw 2k-dimensional network output into (mu, log_sigma) and
    /// applies the clamp.
    pub fn from_raw(raw: &DVector<f64>) -> Self {
        let k = raw.len() / 2;
        let mu = DVector::from_fn(k, |i, _| raw[i]);
        let log_sigma =
            DVector::from_fn(k, |i, _| raw[k + i].clamp(LOG_SIGMA_MIN, LOG_SIGMA_MAX));
        Self { mu, log_sigma }
    }
}

/// Log-density of the squashed sample given its pre-squash value `u`.
pub fn squashed_log_prob(u: &DVector<f64>, mu: &DVector<f64>, log_sigma: &DVector<f64>) -> f64 {
    let mut lp = 0.0;
    for k in 0..u.len() {
        let sigma = log_sigma[k].exp();
        let z = (u[k] - mu[k]) / sigma;
        let th = u[k].tanh();
        lp += -LN_SQRT_2PI - log_sigma[k] - 0.5 * z * z - (1.0 - th * th + TANH_EPS).ln();
    }
    lp
}

/// Samples an action in (-1, 1)^k with its exact log-probability.
pub fn sample_squashed(
    out: &GaussianPolicyOutput,
    rng: &mut ChaCha8Rng,
) -> (DVector<f64>, f64) {
    let k = out.mu.len();
    let mut u = DVector::zeros(k);
    for i in 0..k {
        let xi: f64 = StandardNormal.sample(rng);
        u[i] = out.mu[i] + out.log_sigma[i].exp() * xi;
    }
    let action = u.map(f64::tanh);
    let lp = squashed_log_prob(&u, &out.mu, &out.log_sigma);
    (action, lp)
}

/// Actor: an MLP whose output is interpreted as a [`GaussianPolicyOutput`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianActor {
    pub net: Mlp,
    pub action_dim: usize,
}

impl GaussianActor {
    pub fn new(net: Mlp) -> Self {
        let action_dim = net.output_dim() / 2;
        Self { net, action_dim }
    }

    pub fn policy_output(&self, obs: &DVector<f64>) -> Result<GaussianPolicyOutput, NeuralError> {
        let raw = self.net.forward(obs)?;
        Ok(GaussianPolicyOutput::from_raw(&raw))
    }

    /// Stochastic action with log-probability.
    pub fn sample(
        &self,
        obs: &DVector<f64>,
        rng: &mut ChaCha8Rng,
    ) -> Result<(DVector<f64>, f64), NeuralError> {
        let out = self.policy_output(obs)?;
        Ok(sample_squashed(&out, rng))
    }

    /// Deterministic action tanh(mu).
    pub fn mean_action(&self, obs: &DVector<f64>) -> Result<DVector<f64>, NeuralError> {
        let out = self.policy_output(obs)?;
        Ok(out.mu.map(f64::tanh))
    }
}

/// Batched sample drawn from the policy heads (one column per sample),
/// keeping everything the losses need to differentiate through the
/// reparametrization.
#[derive(Debug, Clone)]
pub struct BatchSample {
    /// Pre-squash values u = mu + sigma * xi.
    pub u: DMatrix<f64>,
    /// Squashed actions tanh(u).
    pub actions: DMatrix<f64>,
    /// Per-sample log-probabilities (row vector, 1 x batch).
    pub log_probs: DMatrix<f64>,
    /// Noise draws xi.
    pub xi: DMatrix<f64>,
    /// Clamped log-sigma.
    pub log_sigma: DMatrix<f64>,
    /// 1 where the raw log-sigma was inside the clamp range (gradient mask).
    pub sigma_active: DMatrix<f64>,
}

/// Splits raw actor outputs (2k x batch), applies the clamp, and samples.
pub fn sample_batch(raw: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> BatchSample {
    let k = raw.nrows() / 2;
    let b = raw.ncols();
    let mut u = DMatrix::zeros(k, b);
    let mut xi = DMatrix::zeros(k, b);
    let mut log_sigma = DMatrix::zeros(k, b);
    let mut sigma_active = DMatrix::zeros(k, b);
    // Column-major draw order: all dimensions of sample 0, then sample 1, ...
    for col in 0..b {
        for row in 0..k {
            let raw_ls = raw[(k + row, col)];
            let ls = raw_ls.clamp(LOG_SIGMA_MIN, LOG_SIGMA_MAX);
            log_sigma[(row, col)] = ls;
            sigma_active[(row, col)] =
                if (LOG_SIGMA_MIN..=LOG_SIGMA_MAX).contains(&raw_ls) { 1.0 } else { 0.0 };
            let n: f64 = StandardNormal.sample(rng);
            xi[(row, col)] = n;
            u[(row, col)] = raw[(row, col)] + ls.exp() * n;
        }
    }
    let actions = u.map(f64::tanh);
    let mut log_probs = DMatrix::zeros(1, b);
    for col in 0..b {
        let mut lp = 0.0;
        for row in 0..k {
            let ls = log_sigma[(row, col)];
            let z = xi[(row, col)];
            let th = actions[(row, col)];
            lp += -LN_SQRT_2PI - ls - 0.5 * z * z - (1.0 - th * th + TANH_EPS).ln();
        }
        log_probs[(0, col)] = lp;
    }
    BatchSample { u, actions, log_probs, xi, log_sigma, sigma_active }
}

impl BatchSample {
    /// d(log pi)/d(u_k) holding xi fixed: only the tanh correction depends
    /// on u along the reparametrized path.
    pub fn dlogp_du(&self) -> DMatrix<f64> {
        self.actions.zip_map(&self.actions, |a, _| {
            2.0 * a * (1.0 - a * a) / (1.0 - a * a + TANH_EPS)
        })
    }

    /// d(a_k)/d(u_k) = 1 - tanh(u_k)^2.
    pub fn da_du(&self) -> DMatrix<f64> {
        self.actions.map(|a| 1.0 - a * a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn vanishing_sigma_gives_deterministic_tanh_mu() {
        let out = GaussianPolicyOutput {
            mu: DVector::from_vec(vec![0.4, -1.2, 2.0]),
            log_sigma: DVector::from_element(3, LOG_SIGMA_MIN),
        };
        let (a, _) = sample_squashed(&out, &mut rng(0));
        for k in 0..3 {
            assert!((a[k] - out.mu[k].tanh()).abs() < 1e-7);
        }
    }

    #[test]
    fn standard_normal_at_mean_log_density() {
        // mu = 0, sigma = 1, u = 0: Gaussian term -log sqrt(2 pi), tanh
        // correction -log(1 + eps) ~ 0.
        let u = DVector::zeros(1);
        let mu = DVector::zeros(1);
        let ls = DVector::zeros(1);
        let lp = squashed_log_prob(&u, &mu, &ls);
        assert_relative_eq!(lp, -LN_SQRT_2PI - (1.0 + TANH_EPS).ln(), epsilon = 1e-12);
    }

    #[test]
    fn density_normalizes_over_action_interval() {
        // Quadrature of p(a) over (-1, 1) via the u parametrization:
        // integral p_A(tanh u) sech^2(u) du = 1 up to the eps stabilizer.
        let mu = DVector::from_vec(vec![0.3]);
        let ls = DVector::from_vec(vec![-0.5]);
        let n = 400_000;
        let (u_min, u_max) = (-25.0, 25.0);
        let du = (u_max - u_min) / n as f64;
        let mut integral = 0.0;
        for i in 0..n {
            let u = u_min + (i as f64 + 0.5) * du;
            let uv = DVector::from_vec(vec![u]);
            let lp = squashed_log_prob(&uv, &mu, &ls);
            let jac = 1.0 - u.tanh().powi(2);
            integral += lp.exp() * jac * du;
        }
        assert!((integral - 1.0).abs() < 1e-2, "integral = {integral}");
    }

    #[test]
    fn sampled_histogram_matches_density() {
        let mu = DVector::from_vec(vec![0.2]);
        let ls = DVector::from_vec(vec![-0.3]);
        let out = GaussianPolicyOutput { mu: mu.clone(), log_sigma: ls.clone() };
        let mut r = rng(5);
        let bins = 40;
        let mut counts = vec![0usize; bins];
        let n = 200_000;
        for _ in 0..n {
            let (a, _) = sample_squashed(&out, &mut r);
            let idx = (((a[0] + 1.0) / 2.0) * bins as f64) as usize;
            counts[idx.min(bins - 1)] += 1;
        }
        // Compare to the density at bin centers through the u substitution.
        let mut max_dev = 0.0_f64;
        for (i, &cnt) in counts.iter().enumerate() {
            let a = -1.0 + (i as f64 + 0.5) * 2.0 / bins as f64;
            let u = a.atanh();
            let uv = DVector::from_vec(vec![u]);
            let p = squashed_log_prob(&uv, &mu, &ls).exp();
            let expected = p * 2.0 / bins as f64;
            let observed = cnt as f64 / n as f64;
            if expected > 1e-4 {
                max_dev = max_dev.max((observed - expected).abs() / expected);
            }
        }
        assert!(max_dev < 0.1, "max relative deviation {max_dev}");
    }

    #[test]
    fn log_prob_finite_at_extreme_pre_squash_values() {
        let mu = DVector::from_vec(vec![0.0]);
        let ls = DVector::from_vec(vec![0.0]);
        for u in [-40.0, -10.0, 10.0, 40.0] {
            let uv = DVector::from_vec(vec![u]);
            let lp = squashed_log_prob(&uv, &mu, &ls);
            assert!(lp.is_finite(), "u = {u} gave {lp}");
        }
    }

    #[test]
    fn batch_sampling_matches_single_path_formula() {
        let raw = DMatrix::from_column_slice(4, 1, &[0.3, -0.2, -0.7, 0.1]);
        let sample = sample_batch(&raw, &mut rng(9));
        let mu = DVector::from_vec(vec![0.3, -0.2]);
        let ls = DVector::from_vec(vec![-0.7, 0.1]);
        let u = DVector::from_vec(vec![sample.u[(0, 0)], sample.u[(1, 0)]]);
        assert_relative_eq!(
            sample.log_probs[(0, 0)],
            squashed_log_prob(&u, &mu, &ls),
            epsilon = 1e-12
        );
        assert!(sample.actions.iter().all(|a| a.abs() < 1.0));
    }

    #[test]
    fn log_prob_gradients_match_finite_differences() {
        // d(log pi)/d(mu) and d(log pi)/d(log sigma) along the
        // reparametrized path (xi held fixed).
        let mu0 = 0.4;
        let ls0 = -0.6;
        let xi = 0.85;
        let lp = |mu: f64, ls: f64| {
            let u = DVector::from_vec(vec![mu + ls.exp() * xi]);
            squashed_log_prob(&u, &DVector::from_vec(vec![mu]), &DVector::from_vec(vec![ls]))
        };
        let h = 1e-6;
        let fd_mu = (lp(mu0 + h, ls0) - lp(mu0 - h, ls0)) / (2.0 * h);
        let fd_ls = (lp(mu0, ls0 + h) - lp(mu0, ls0 - h)) / (2.0 * h);

        let u = mu0 + ls0.exp() * xi;
        let a = u.tanh();
        let c = 2.0 * a * (1.0 - a * a) / (1.0 - a * a + TANH_EPS);
        let an_mu = c;
        let an_ls = -1.0 + c * ls0.exp() * xi;
        assert!((fd_mu - an_mu).abs() < 1e-6, "{fd_mu} vs {an_mu}");
        assert!((fd_ls - an_ls).abs() < 1e-6, "{fd_ls} vs {an_ls}");
    }
}
