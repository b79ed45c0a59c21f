//! Entanglement metrics: concurrence (Bell, X-state, general Wootters),
//! Bell fidelity, and lifetime extraction from sampled traces.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DdError, Result};
use crate::qmath::{
    eigh4, kron2, mat4_mul, sigma_y, sqrtm_psd, DensityMatrix4, Mat4, ZERO,
};

/// Concurrence and Bell fidelity of a dephased |Psi+> state:
/// C = e^{-chi}, F = (1 + e^{-chi}) / 2.
pub fn bell_concurrence_fidelity(chi: f64) -> (f64, f64) {
    let c = (-chi).exp();
    (c, (1.0 + c) / 2.0)
}

/// Two-qubit X state restricted to the {|01>, |10>} coherence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XState {
    pub populations: [f64; 4],
    pub coherence_01_10: Complex64,
}

impl XState {
    pub fn new(populations: [f64; 4], coherence_01_10: Complex64) -> Result<Self> {
        let sum: f64 = populations.iter().sum();
        if populations.iter().any(|&p| p < -1e-12) || (sum - 1.0).abs() > 1e-9 {
            return Err(DdError::InvalidParams(
                "populations must be nonnegative and sum to 1".into(),
            ));
        }
        if coherence_01_10.norm() > (populations[1] * populations[2]).sqrt() + 1e-9 {
            return Err(DdError::InvalidParams(
                "|rho_{01,10}| exceeds sqrt(p01 p10)".into(),
            ));
        }
        Ok(Self {
            populations,
            coherence_01_10,
        })
    }

    pub fn to_density_matrix(&self) -> DensityMatrix4 {
        let mut m = [[ZERO; 4]; 4];
        for k in 0..4 {
            m[k][k] = Complex64::new(self.populations[k], 0.0);
        }
        m[1][2] = self.coherence_01_10;
        m[2][1] = self.coherence_01_10.conj();
        DensityMatrix4(m)
    }
}

/// C = max{0, 2 |rho_{01,10}| - 2 sqrt(p00 p11)}.
pub fn xstate_concurrence(x: &XState) -> f64 {
    let c = 2.0 * x.coherence_01_10.norm()
        - 2.0 * (x.populations[0] * x.populations[3]).sqrt();
    c.max(0.0)
}

/// Wootters concurrence of an arbitrary two-qubit state:
/// max{0, mu_1 - mu_2 - mu_3 - mu_4} with mu_k the sorted square-rooted
/// eigenvalues of rho (sy x sy) rho* (sy x sy), computed here as the
/// singular values of sqrt(rho) (sy x sy) conj(sqrt(rho)).
pub fn concurrence_general(rho: &DensityMatrix4) -> Result<f64> {
    let (vals, _) = eigh4(rho.matrix());
    if vals[0] < -1e-9 {
        return Err(DdError::InvalidParams(format!(
            "density matrix not PSD: min eigenvalue {}",
            vals[0]
        )));
    }
    let yy = kron2(&sigma_y(), &sigma_y());
    let sqrt_rho = sqrtm_psd(rho.matrix());
    let mut sqrt_rho_conj: Mat4 = sqrt_rho;
    for row in sqrt_rho_conj.iter_mut() {
        for v in row.iter_mut() {
            *v = v.conj();
        }
    }
    let a = mat4_mul(&mat4_mul(&sqrt_rho, &yy), &sqrt_rho_conj);
    // Singular values of a = sqrt of eigenvalues of a^dagger a.
    let mut ada = [[ZERO; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            let mut acc = ZERO;
            for k in 0..4 {
                acc += a[k][r].conj() * a[k][c];
            }
            ada[r][c] = acc;
        }
    }
    let (mut mu, _) = eigh4(&ada);
    for m in mu.iter_mut() {
        *m = m.max(0.0).sqrt();
    }
    // Ascending order: largest is mu[3].
    Ok((mu[3] - mu[2] - mu[1] - mu[0]).max(0.0))
}

/// Entanglement lifetime tau_C (C crosses 1/e) and high-fidelity time
/// T_0.999 (F crosses 0.999); `None` when the trace does not cross
/// inside the scanned window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeReport {
    pub tau_c_us: Option<f64>,
    pub t_0999_us: Option<f64>,
}

/// Monotone (Fritsch-Carlson) cubic Hermite interpolant.
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(DdError::Numerical("need at least two samples".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DdError::Numerical("sample times must be increasing".into()));
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut slope = vec![0.0; n];
        slope[0] = d[0];
        slope[n - 1] = d[n - 2];
        for k in 1..n - 1 {
            if d[k - 1] * d[k] <= 0.0 {
                slope[k] = 0.0;
            } else {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                slope[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
            }
        }
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            slope,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let k = match self
            .x
            .binary_search_by(|v| v.partial_cmp(&t).unwrap())
        {
            Ok(k) => return self.y[k],
            Err(k) => k - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.y[k] + h10 * h * self.slope[k] + h01 * self.y[k + 1] + h11 * h * self.slope[k + 1]
    }
}

/// First downward crossing of `threshold` on the interpolated curve, by
/// bisection inside the bracketing sample interval.
pub fn crossing_time(times: &[f64], values: &[f64], threshold: f64) -> Result<Option<f64>> {
    let interp = MonotoneCubic::new(times, values)?;
    let bracket = times
        .windows(2)
        .zip(values.windows(2))
        .find(|(_, v)| v[0] >= threshold && v[1] < threshold);
    let Some((tw, _)) = bracket else {
        return Ok(None);
    };
    let (mut lo, mut hi) = (tw[0], tw[1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if interp.eval(mid) >= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Extracts tau_C (C = 1/e) and T_0.999 (F = 0.999) from sampled traces.
pub fn lifetimes(times: &[f64], concurrence: &[f64], fidelity: &[f64]) -> Result<LifetimeReport> {
    let tau_c_us = crossing_time(times, concurrence, (-1.0f64).exp())?;
    let t_0999_us = crossing_time(times, fidelity, 0.999)?;
    Ok(LifetimeReport { tau_c_us, t_0999_us })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{mat2_mul, rotation_step, C64, ONE};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bell_pair_values() {
        assert_eq!(bell_concurrence_fidelity(0.0), (1.0, 1.0));
        let (c, f) = bell_concurrence_fidelity(1.0);
        assert_relative_eq!(c, (-1.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(f, (1.0 + (-1.0f64).exp()) / 2.0, max_relative = 1e-12);
        let (c, f) = bell_concurrence_fidelity(1e6);
        assert_abs_diff_eq!(c, 0.0);
        assert_abs_diff_eq!(f, 0.5);
    }

    #[test]
    fn xstate_cases() {
        let bell = XState::new([0.0, 0.5, 0.5, 0.0], C64::new(0.5, 0.0)).unwrap();
        assert_relative_eq!(xstate_concurrence(&bell), 1.0);
        let boundary = XState::new([0.25, 0.25, 0.25, 0.25], C64::new(0.25, 0.0)).unwrap();
        assert_abs_diff_eq!(xstate_concurrence(&boundary), 0.0);
        // p00 = p11 = 0 with |rho| = e^{-chi}/2 reduces to e^{-chi}.
        let chi = 0.7f64;
        let x = XState::new([0.0, 0.5, 0.5, 0.0], C64::new((-chi).exp() / 2.0, 0.0)).unwrap();
        assert_relative_eq!(xstate_concurrence(&x), (-chi).exp(), max_relative = 1e-12);
    }

    #[test]
    fn general_concurrence_bell_and_mixed() {
        let bell = DensityMatrix4::bell_psi_plus();
        assert_relative_eq!(concurrence_general(&bell).unwrap(), 1.0, epsilon = 1e-10);
        let mixed = DensityMatrix4::maximally_mixed();
        assert_abs_diff_eq!(concurrence_general(&mixed).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn general_matches_xstate_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let p01: f64 = rng.random_range(0.1..0.5);
            let p10: f64 = rng.random_range(0.1..0.5);
            let rest = 1.0 - p01 - p10;
            let p00 = rest * rng.random_range(0.0..1.0);
            let p11 = rest - p00;
            let mag = (p01 * p10).sqrt() * rng.random_range(0.0..1.0);
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let x = XState::new([p00, p01, p10, p11], C64::from_polar(mag, phase)).unwrap();
            let general = concurrence_general(&x.to_density_matrix()).unwrap();
            // The full X-state formula has a second branch from the
            // |00>,|11> coherence, zero here, so the restricted formula
            // applies exactly.
            assert_abs_diff_eq!(general, xstate_concurrence(&x), epsilon = 1e-10);
        }
    }

    #[test]
    fn local_unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = DensityMatrix4::bell_psi_plus();
        let base = concurrence_general(&rho).unwrap();
        for _ in 0..20 {
            let mut us = Vec::new();
            for _ in 0..2 {
                let v: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                us.push(rotation_step(v[0], v[1], v[2], theta));
            }
            let u = kron2(&us[0], &us[1]);
            let rotated = mat4_mul(&mat4_mul(&u, rho.matrix()), &crate::qmath::mat4_adjoint(&u));
            let c = concurrence_general(&DensityMatrix4(rotated)).unwrap();
            // Square-rooting near-zero eigenvalues limits accuracy to
            // about sqrt(machine epsilon).
            assert_abs_diff_eq!(c, base, epsilon = 1e-7);
        }
        // Sanity: the 2x2 rotations are unitary.
        let u = rotation_step(0.3, -0.2, 0.9, 1.3);
        let uu = mat2_mul(&crate::qmath::mat2_adjoint(&u), &u);
        assert_abs_diff_eq!(uu[0][0].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!((uu[0][1] * ONE).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_psd() {
        let mut m = DensityMatrix4::maximally_mixed().0;
        m[0][0] = C64::new(-0.1, 0.0);
        m[1][1] = C64::new(0.35, 0.0);
        m[2][2] = C64::new(0.35, 0.0);
        m[3][3] = C64::new(0.4, 0.0);
        assert!(concurrence_general(&DensityMatrix4(m)).is_err());
    }

    #[test]
    fn lifetime_extraction() {
        let times: Vec<f64> = (0..=8000).map(|k| k as f64 * 0.0005).collect();
        let conc: Vec<f64> = times.iter().map(|t| (-t).exp()).collect();
        let fid: Vec<f64> = times.iter().map(|t| (1.0 + (-t).exp()) / 2.0).collect();
        let report = lifetimes(&times, &conc, &fid).unwrap();
        assert_relative_eq!(report.tau_c_us.unwrap(), 1.0, max_relative = 1e-5);
        let expect = -(0.998f64.ln());
        assert_relative_eq!(report.t_0999_us.unwrap(), expect, max_relative = 1e-3);
    }

    #[test]
    fn lifetime_no_crossing() {
        let times = vec![0.0, 1.0, 2.0];
        let flat = vec![0.9, 0.89, 0.88];
        assert_eq!(crossing_time(&times, &flat, (-1.0f64).exp()).unwrap(), None);
    }

    #[test]
    fn lifetime_monotone_in_chi() {
        let times: Vec<f64> = (0..=400).map(|k| k as f64 * 0.01).collect();
        let slow: Vec<f64> = times.iter().map(|t| (-0.5 * t).exp()).collect();
        let fast: Vec<f64> = times.iter().map(|t| (-1.5 * t).exp()).collect();
        let t_slow = crossing_time(&times, &slow, (-1.0f64).exp()).unwrap().unwrap();
        let t_fast = crossing_time(&times, &fast, (-1.0f64).exp()).unwrap().unwrap();
        assert!(t_fast < t_slow);
    }
}
