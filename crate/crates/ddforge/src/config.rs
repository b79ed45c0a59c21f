//! Experiment configuration: JSON-loadable, with defaults matching the
//! fluxonium-pair / TLS-bath parameter set used throughout.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{DdError, Result};
use crate::noise::OUNoiseParams;
use crate::swap::SwapModel;
use crate::trajectory::PulseErrorModel;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Noise amplitude lambda / 2 pi, kHz.
    pub lambda_over_2pi_khz: f64,
    pub tau_c_us: f64,
    pub rho: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            lambda_over_2pi_khz: 80.0,
            tau_c_us: 0.5,
            rho: 0.8,
        }
    }
}

impl NoiseConfig {
    /// lambda in rad/µs.
    pub fn lambda(&self) -> f64 {
        std::f64::consts::TAU * self.lambda_over_2pi_khz * 1e-3
    }

    pub fn params(&self) -> Result<OUNoiseParams> {
        OUNoiseParams::symmetric(self.lambda(), self.tau_c_us, self.rho)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwapConfig {
    pub f1_ghz: f64,
    pub f2_ghz: f64,
    pub j_ghz: f64,
    pub gamma_per_ns: f64,
    pub t_max_ns: f64,
    pub n_points: usize,
}

impl Default for SwapConfig {
    fn default() -> Self {
        Self {
            f1_ghz: 0.60,
            f2_ghz: 0.62,
            j_ghz: 0.02,
            gamma_per_ns: 0.001,
            t_max_ns: 200.0,
            n_points: 2000,
        }
    }
}

impl SwapConfig {
    pub fn model(&self) -> Result<SwapModel> {
        SwapModel::new(self.f1_ghz, self.f2_ghz, self.j_ghz, self.gamma_per_ns)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdConfig {
    /// no-dd | cpmg | udd | xy8 | tls-opt
    pub protocol: String,
    pub n_pulses: usize,
    pub t_star_us: f64,
}

impl Default for DdConfig {
    fn default() -> Self {
        Self {
            protocol: "cpmg".into(),
            n_pulses: 8,
            t_star_us: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_traj: usize,
    pub seed: u64,
    pub tau_p_ns: f64,
    pub sigma_eps: f64,
    pub sigma_eps_list: Vec<f64>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_traj: 2000,
            seed: 42,
            tau_p_ns: 10.0,
            sigma_eps: 0.0,
            sigma_eps_list: vec![0.0, 0.01, 0.02, 0.05],
        }
    }
}

impl McConfig {
    pub fn error_model(&self) -> Result<PulseErrorModel> {
        PulseErrorModel::new(self.tau_p_ns, self.sigma_eps)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub noise: NoiseConfig,
    pub swap: SwapConfig,
    pub dd: DdConfig,
    pub mc: McConfig,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| DdError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.params()?;
        self.swap.model()?;
        self.mc.error_model()?;
        if !(self.dd.t_star_us > 0.0) {
            return Err(DdError::Config("dd.t_star_us must be > 0".into()));
        }
        if !(self.swap.t_max_ns > 0.0) || self.swap.n_points < 2 {
            return Err(DdError::Config(
                "swap.t_max_ns must be > 0 and swap.n_points >= 2".into(),
            ));
        }
        if self.mc.n_traj < 100 {
            return Err(DdError::Config("mc.n_traj must be >= 100".into()));
        }
        if self.mc.sigma_eps_list.iter().any(|&s| s < 0.0) {
            return Err(DdError::Config("sigma_eps values must be >= 0".into()));
        }
        let known = ["no-dd", "cpmg", "udd", "xy8", "tls-opt"];
        if !known.contains(&self.dd.protocol.as_str()) {
            return Err(DdError::Config(format!(
                "unknown protocol '{}', expected one of {known:?}",
                self.dd.protocol
            )));
        }
        Ok(())
    }
}
