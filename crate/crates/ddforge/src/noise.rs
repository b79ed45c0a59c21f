//! Correlated Ornstein-Uhlenbeck noise model: exponential correlation,
//! Lorentzian spectral density, and exact-discretization path sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{DdError, Result};

/// Parameters of the two-qubit OU noise process.
///
/// `sigma` is the per-qubit amplitude in rad/us, `tau_c` the bath
/// correlation time in us, and `r` the symmetric correlation-coefficient
/// matrix with unit diagonal. The amplitude convention `lambda^2 =
/// 2 sigma^2` ties the closed-form dephasing exponents to `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OUNoiseParams {
    pub sigma: [f64; 2],
    pub tau_c: f64,
    pub r: [[f64; 2]; 2],
}

impl OUNoiseParams {
    pub fn new(sigma: [f64; 2], tau_c: f64, r12: f64) -> Result<Self> {
        let p = Self {
            sigma,
            tau_c,
            r: [[1.0, r12], [r12, 1.0]],
        };
        p.validate()?;
        Ok(p)
    }

    /// Symmetric-case constructor in the (lambda, tau_c, rho)
    /// parameterization, with lambda^2 = 2 sigma^2.
    pub fn symmetric(lambda: f64, tau_c: f64, rho: f64) -> Result<Self> {
        let sigma = lambda / std::f64::consts::SQRT_2;
        Self::new([sigma, sigma], tau_c, rho)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma[0] >= 0.0 && self.sigma[1] >= 0.0) {
            return Err(DdError::InvalidParams("sigma must be >= 0".into()));
        }
        if !(self.tau_c > 0.0) {
            return Err(DdError::InvalidParams("tau_c must be > 0".into()));
        }
        let r12 = self.r[0][1];
        if self.r[1][0] != r12 || self.r[0][0] != 1.0 || self.r[1][1] != 1.0 {
            return Err(DdError::InvalidParams(
                "r must be symmetric with unit diagonal".into(),
            ));
        }
        // 2x2 with unit diagonal is PSD iff |r12| <= 1.
        if !(r12.abs() <= 1.0) {
            return Err(DdError::InvalidParams(format!(
                "|r12| = {} exceeds 1 (r not PSD)",
                r12.abs()
            )));
        }
        Ok(())
    }

    /// Per-qubit amplitude lambda_i = sqrt(2) sigma_i.
    pub fn lambda(&self, i: usize) -> f64 {
        std::f64::consts::SQRT_2 * self.sigma[i]
    }

    /// Long-time dephasing rate Gamma_phi,i = lambda_i^2 tau_c = S_ii(0).
    pub fn gamma_phi(&self, i: usize) -> f64 {
        self.lambda(i).powi(2) * self.tau_c
    }

    pub fn rho(&self) -> f64 {
        self.r[0][1]
    }

    /// C_ij(tau) = sigma_i sigma_j r_ij exp(-|tau|/tau_c), in rad^2/us^2.
    pub fn correlation(&self, i: usize, j: usize, tau: f64) -> f64 {
        self.sigma[i] * self.sigma[j] * self.r[i][j] * (-tau.abs() / self.tau_c).exp()
    }

    /// S_ij(omega) = 2 sigma_i sigma_j r_ij tau_c / (1 + omega^2 tau_c^2).
    pub fn spectral_density(&self, i: usize, j: usize, omega: f64) -> f64 {
        2.0 * self.sigma[i] * self.sigma[j] * self.r[i][j] * self.tau_c
            / (1.0 + omega * omega * self.tau_c * self.tau_c)
    }

    /// Lower Cholesky factor of the amplitude covariance
    /// [[s1^2, s1 s2 r], [s1 s2 r, s2^2]].
    pub(crate) fn cholesky(&self) -> [[f64; 2]; 2] {
        let r12 = self.r[0][1];
        [
            [self.sigma[0], 0.0],
            [self.sigma[1] * r12, self.sigma[1] * (1.0 - r12 * r12).max(0.0).sqrt()],
        ]
    }
}

/// Two correlated stationary OU paths sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct OUPaths {
    pub dt: f64,
    pub values: [Vec<f64>; 2],
}

/// Exact-discretization sampler: stationary start xi(0) ~ N(0, Sigma),
/// update xi(t+dt) = xi(t) e^{-dt/tau_c} + eta with
/// Cov(eta) = Sigma (1 - e^{-2 dt/tau_c}). Deterministic for fixed seed.
pub fn sample_paths(params: &OUNoiseParams, dt: f64, n_steps: usize, seed: u64) -> Result<OUPaths> {
    params.validate()?;
    if !(dt > 0.0) {
        return Err(DdError::InvalidParams("dt must be > 0".into()));
    }
    if n_steps < 1 {
        return Err(DdError::InvalidParams("n_steps must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampler = OUSampler::new(params, &mut rng);
    let mut values = [Vec::with_capacity(n_steps + 1), Vec::with_capacity(n_steps + 1)];
    values[0].push(sampler.xi[0]);
    values[1].push(sampler.xi[1]);
    for _ in 0..n_steps {
        sampler.advance(dt, &mut rng);
        values[0].push(sampler.xi[0]);
        values[1].push(sampler.xi[1]);
    }
    Ok(OUPaths { dt, values })
}

/// Incremental sampler used by the trajectory ensemble, where step sizes
/// vary to land on pulse edges. The exact OU update is valid for any dt.
pub struct OUSampler {
    pub xi: [f64; 2],
    chol: [[f64; 2]; 2],
    tau_c: f64,
}

impl OUSampler {
    pub fn new<R: rand::Rng>(params: &OUNoiseParams, rng: &mut R) -> Self {
        let chol = params.cholesky();
        let n0: f64 = StandardNormal.sample(rng);
        let n1: f64 = StandardNormal.sample(rng);
        Self {
            xi: [chol[0][0] * n0, chol[1][0] * n0 + chol[1][1] * n1],
            chol,
            tau_c: params.tau_c,
        }
    }

    pub fn advance<R: rand::Rng>(&mut self, dt: f64, rng: &mut R) {
        let alpha = (-dt / self.tau_c).exp();
        let w = (1.0 - alpha * alpha).max(0.0).sqrt();
        let n0: f64 = StandardNormal.sample(rng);
        let n1: f64 = StandardNormal.sample(rng);
        self.xi[0] = alpha * self.xi[0] + w * self.chol[0][0] * n0;
        self.xi[1] = alpha * self.xi[1] + w * (self.chol[1][0] * n0 + self.chol[1][1] * n1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_params(r12: f64) -> OUNoiseParams {
        OUNoiseParams::new([1.0, 1.0], 1.0, r12).unwrap()
    }

    #[test]
    fn correlation_values() {
        let p = unit_params(0.5);
        assert_relative_eq!(p.correlation(0, 0, 0.0), 1.0);
        assert_relative_eq!(p.correlation(0, 1, 0.0), 0.5);
        assert_relative_eq!(p.correlation(0, 0, 1.0), (-1.0f64).exp());
    }

    #[test]
    fn correlation_symmetries() {
        let p = OUNoiseParams::new([0.7, 1.3], 0.4, -0.3).unwrap();
        for tau in [-2.0, -0.5, 0.0, 0.1, 3.0] {
            for i in 0..2 {
                for j in 0..2 {
                    assert_relative_eq!(p.correlation(i, j, tau), p.correlation(j, i, tau));
                    assert_relative_eq!(p.correlation(i, j, tau), p.correlation(i, j, -tau));
                }
            }
        }
    }

    #[test]
    fn spectral_density_values() {
        let p = unit_params(0.0);
        assert_relative_eq!(p.spectral_density(0, 0, 0.0), 2.0);
        assert_relative_eq!(p.spectral_density(0, 0, 1.0), 1.0); // half power at 1/tau_c
    }

    #[test]
    fn spectral_density_table_i() {
        // lambda/2pi = 80 kHz => lambda = 2 pi 0.08 rad/us, tau_c = 0.5 us.
        let lambda = 2.0 * std::f64::consts::PI * 0.08;
        let p = OUNoiseParams::symmetric(lambda, 0.5, 0.8).unwrap();
        let s0 = p.spectral_density(0, 0, 0.0);
        assert_relative_eq!(s0, lambda * lambda * 0.5, max_relative = 1e-12);
        assert_relative_eq!(s0, 0.1263, max_relative = 1e-3);
        assert_relative_eq!(s0, p.gamma_phi(0), max_relative = 1e-12);
    }

    #[test]
    fn spectral_density_is_fourier_transform_of_correlation() {
        let p = OUNoiseParams::new([0.9, 1.1], 0.7, 0.4).unwrap();
        let tau_max = 20.0 * p.tau_c;
        let n = 200_000;
        let h = 2.0 * tau_max / n as f64;
        for &omega in &[0.0, 0.5 / p.tau_c, 1.0 / p.tau_c, 4.0 / p.tau_c, 10.0 / p.tau_c] {
            for (i, j) in [(0, 0), (0, 1), (1, 1)] {
                // Simpson's rule over [-20 tau_c, 20 tau_c].
                let f = |tau: f64| p.correlation(i, j, tau) * (omega * tau).cos();
                let mut acc = f(-tau_max) + f(tau_max);
                for k in 1..n {
                    let tau = -tau_max + k as f64 * h;
                    acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(tau);
                }
                let ft = acc * h / 3.0;
                assert_relative_eq!(ft, p.spectral_density(i, j, omega), max_relative = 1e-3);
            }
        }
    }

    #[test]
    fn perfectly_correlated_paths_identical() {
        let p = unit_params(1.0);
        let paths = sample_paths(&p, 0.01, 1000, 7).unwrap();
        for k in 0..paths.values[0].len() {
            assert_relative_eq!(paths.values[0][k], paths.values[1][k], epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_non_psd_r() {
        assert!(OUNoiseParams::new([1.0, 1.0], 1.0, 1.2).is_err());
    }

    #[test]
    fn path_statistics() {
        let p = unit_params(0.0);
        let n = 100_000usize;
        let dt = 0.05;
        let paths = sample_paths(&p, dt, n, 42).unwrap();
        let a = &paths.values[0];
        let b = &paths.values[1];
        let mean_a: f64 = a.iter().sum::<f64>() / a.len() as f64;
        let var_a: f64 = a.iter().map(|x| (x - mean_a).powi(2)).sum::<f64>() / a.len() as f64;
        // Effective sample count for an OU series with step dt.
        let n_eff = (n as f64 * dt / (2.0 * p.tau_c)).min(n as f64);
        let se_var = (2.0f64).sqrt() / n_eff.sqrt();
        assert!(
            (var_a - 1.0).abs() < 3.0 * se_var,
            "variance {var_a} outside 3 SE of 1"
        );
        // Cross-covariance at lag 0 should vanish for r12 = 0.
        let mean_b: f64 = b.iter().sum::<f64>() / b.len() as f64;
        let cov: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - mean_a) * (y - mean_b))
            .sum::<f64>()
            / a.len() as f64;
        assert!(cov.abs() < 3.0 / n_eff.sqrt(), "cross-covariance {cov}");
        // Autocovariance at lag tau_c ~ sigma^2 e^{-1}.
        let lag = (p.tau_c / dt).round() as usize;
        let auto: f64 = a[..a.len() - lag]
            .iter()
            .zip(&a[lag..])
            .map(|(x, y)| (x - mean_a) * (y - mean_a))
            .sum::<f64>()
            / (a.len() - lag) as f64;
        let expect = (-1.0f64).exp();
        assert!(
            (auto - expect).abs() < 3.0 * 1.5 / n_eff.sqrt(),
            "autocovariance {auto} vs {expect}"
        );
    }

    #[test]
    fn seeded_reproducibility() {
        let p = unit_params(0.3);
        let a = sample_paths(&p, 0.01, 100, 9).unwrap();
        let b = sample_paths(&p, 0.01, 100, 9).unwrap();
        assert_eq!(a.values[0], b.values[0]);
        assert_eq!(a.values[1], b.values[1]);
    }
}
