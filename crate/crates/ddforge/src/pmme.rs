//! Post-Markovian master equation with a correlated dephasing generator
//! and an exponential memory kernel. Populations are conserved and every
//! coherence decouples, so both solvers reduce to scalar problems per
//! matrix element.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DdError, Result};
use crate::filter::{ChiMethod, CoherencePair, DephasingCurve};
use crate::qmath::DensityMatrix4;

/// Markovian generator of correlated pure dephasing: base rate `gamma0`
/// (1/µs) and a symmetric cross-correlation matrix with unit diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingLindbladian {
    pub gamma0: f64,
    pub r: [[f64; 2]; 2],
}

impl DephasingLindbladian {
    pub fn new(gamma0: f64, r12: f64) -> Result<Self> {
        let l = Self {
            gamma0,
            r: [[1.0, r12], [r12, 1.0]],
        };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 >= 0.0) {
            return Err(DdError::InvalidParams("gamma0 must be >= 0".into()));
        }
        if self.r[0][0] != 1.0 || self.r[1][1] != 1.0 || self.r[0][1] != self.r[1][0] {
            return Err(DdError::InvalidParams(
                "correlation matrix must be symmetric with unit diagonal".into(),
            ));
        }
        if self.r[0][1].abs() > 1.0 {
            return Err(DdError::InvalidParams(
                "correlation matrix must be PSD: |r12| <= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn rho(&self) -> f64 {
        self.r[0][1]
    }
}

/// Exponential memory kernel k(t) = e^{-t/tau_c} / tau_c (unit weight,
/// so the tau_c -> 0 limit recovers the memoryless generator).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryKernel {
    pub tau_c: f64,
}

impl MemoryKernel {
    pub fn new(tau_c: f64) -> Result<Self> {
        if !(tau_c > 0.0) {
            return Err(DdError::InvalidParams("tau_c must be > 0".into()));
        }
        Ok(Self { tau_c })
    }
}

/// Per-coherence decay rates mu_{ab} = (gamma0/2) s^T R s, where s holds
/// the half-differences of the sigma_z eigenvalues between basis states
/// a and b. Populations (a = b) get rate zero.
pub fn lindblad_eigenrates(l: &DephasingLindbladian) -> [[f64; 4]; 4] {
    let mut rates = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            if a == b {
                continue;
            }
            let s = CoherencePair::from_basis_pair(a, b).s;
            let quad = s[0] * (l.r[0][0] * s[0] + l.r[0][1] * s[1])
                + s[1] * (l.r[1][0] * s[0] + l.r[1][1] * s[1]);
            rates[a][b] = 0.5 * l.gamma0 * quad;
        }
    }
    rates
}

/// Scalar decay factor c(t)/c(0) for eigenrate `mu` under the exponential
/// kernel. The transform-domain denominator tau_c s^2 + (1 + mu tau_c) s
/// + mu factors exactly into roots -mu and -1/tau_c, giving
///   g(t) = (e^{-mu t} - a e^{-t/tau_c}) / (1 - a),   a = mu tau_c,
/// with the confluent limit e^{-t/tau_c}(1 + t/tau_c) at a = 1.
pub fn pmme_decay_factor(mu: f64, tau_c: f64, t: f64) -> f64 {
    let a = mu * tau_c;
    if (1.0 - a).abs() < 1e-8 {
        let x = t / tau_c;
        return (-x).exp() * (1.0 + x);
    }
    ((-mu * t).exp() - a * (-t / tau_c).exp()) / (1.0 - a)
}

/// Closed-form evolution: each coherence is scaled by its decay factor,
/// populations stay fixed.
pub fn pmme_evolve_analytic(
    l: &DephasingLindbladian,
    k: &MemoryKernel,
    rho0: &DensityMatrix4,
    times: &[f64],
) -> Result<Vec<DensityMatrix4>> {
    l.validate()?;
    let rates = lindblad_eigenrates(l);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t < 0.0 {
            return Err(DdError::InvalidParams("times must be >= 0".into()));
        }
        let mut m = *rho0.matrix();
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    m[a][b] *= pmme_decay_factor(rates[a][b], k.tau_c, t);
                }
            }
        }
        out.push(DensityMatrix4(m));
    }
    Ok(out)
}

/// Volterra time stepper for the scalar coherence equation
///   dc/dt = -mu * (1/tau_c) int_0^t e^{-(1/tau_c + mu)(t - s)} c(s) ds.
/// The exponential kernel lets the history integral update in O(1) per
/// step; a Heun predictor-corrector closes the implicit trapezoid term.
pub fn pmme_evolve_volterra(
    l: &DephasingLindbladian,
    k: &MemoryKernel,
    rho0: &DensityMatrix4,
    dt: f64,
    t_max: f64,
) -> Result<(Vec<f64>, Vec<DensityMatrix4>)> {
    l.validate()?;
    if !(dt > 0.0) || !(t_max >= 0.0) {
        return Err(DdError::InvalidParams("dt > 0 and t_max >= 0 required".into()));
    }
    if dt > k.tau_c / 50.0 {
        return Err(DdError::InvalidParams(format!(
            "dt = {dt} too coarse: need dt <= tau_c/50 = {}",
            k.tau_c / 50.0
        )));
    }
    let rates = lindblad_eigenrates(l);
    let n_steps = (t_max / dt).ceil() as usize;
    let times: Vec<f64> = (0..=n_steps).map(|n| n as f64 * dt).collect();

    // Scalar march per strictly-upper element; lower triangle mirrors.
    let mut factors: Vec<[[f64; 4]; 4]> = vec![[[1.0; 4]; 4]; n_steps + 1];
    for a in 0..4 {
        for b in (a + 1)..4 {
            let mu = rates[a][b];
            let beta = 1.0 / k.tau_c + mu;
            let decay = (-beta * dt).exp();
            let mut c = 1.0f64;
            let mut hist = 0.0f64; // int_0^{t_n} e^{-beta (t_n - s)} c(s) ds
            for n in 0..n_steps {
                let j_n = hist / k.tau_c;
                let c_pred = c - mu * dt * j_n;
                let hist_pred = decay * hist + 0.5 * dt * (decay * c + c_pred);
                let j_pred = hist_pred / k.tau_c;
                let c_next = c - 0.5 * mu * dt * (j_n + j_pred);
                hist = decay * hist + 0.5 * dt * (decay * c + c_next);
                c = c_next;
                factors[n + 1][a][b] = c;
            }
        }
    }

    let trace0 = {
        let m = rho0.matrix();
        (m[0][0] + m[1][1] + m[2][2] + m[3][3]).re
    };
    let mut traj = Vec::with_capacity(n_steps + 1);
    for f in &factors {
        let mut m = *rho0.matrix();
        for a in 0..4 {
            for b in (a + 1)..4 {
                m[a][b] *= f[a][b];
                m[b][a] = m[a][b].conj();
            }
        }
        let trace = (m[0][0] + m[1][1] + m[2][2] + m[3][3]).re;
        if (trace - trace0).abs() > 1e-6 {
            return Err(DdError::Numerical(format!(
                "trace drift {} exceeds 1e-6; reduce dt",
                (trace - trace0).abs()
            )));
        }
        traj.push(DensityMatrix4(m));
    }
    Ok((times, traj))
}

/// Minimum eigenvalue of rho over a trajectory, for positivity auditing.
pub fn min_eigenvalue_along(traj: &[DensityMatrix4]) -> f64 {
    traj.iter()
        .map(|r| r.min_eigenvalue())
        .fold(f64::INFINITY, f64::min)
}

/// Accumulated dephasing chi_PM(t) = -ln |c(t)/c(0)| of one tracked
/// coherence, plus its instantaneous rate from central differences.
/// The curve is truncated where |c/c0| underflows 1e-12.
pub fn chi_pm(times: &[f64], coherence: &[Complex64]) -> Result<(DephasingCurve, Vec<f64>)> {
    if times.len() != coherence.len() || times.is_empty() {
        return Err(DdError::InvalidParams(
            "times and coherence must be equal-length and nonempty".into(),
        ));
    }
    let c0 = coherence[0].norm();
    if c0 < 1e-12 {
        return Err(DdError::InvalidParams("initial coherence is zero".into()));
    }
    let mut t_out = Vec::new();
    let mut chi = Vec::new();
    for (&t, c) in times.iter().zip(coherence) {
        let ratio = c.norm() / c0;
        if ratio < 1e-12 {
            break;
        }
        t_out.push(t);
        chi.push(-ratio.ln());
    }
    let n = chi.len();
    let mut gamma = vec![0.0; n];
    if n >= 2 {
        gamma[0] = (chi[1] - chi[0]) / (t_out[1] - t_out[0]);
        gamma[n - 1] = (chi[n - 1] - chi[n - 2]) / (t_out[n - 1] - t_out[n - 2]);
        for i in 1..n - 1 {
            gamma[i] = (chi[i + 1] - chi[i - 1]) / (t_out[i + 1] - t_out[i - 1]);
        }
    }
    Ok((
        DephasingCurve {
            times: t_out,
            chi,
            method: ChiMethod::Pmme,
        },
        gamma,
    ))
}
