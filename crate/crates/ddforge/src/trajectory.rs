//! Monte-Carlo ensemble over sampled OU noise paths: ideal instantaneous
//! pulses as an oracle for the analytic theory, and finite-duration
//! error-prone pulses for robustness studies.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DdError, Result};
use crate::metrics::concurrence_general;
use crate::noise::{OUNoiseParams, OUSampler};
use crate::qmath::{
    kron2, mat2_id, mat2_mul, mat4_adjoint, mat4_mul, rotation_step, z_eigenvalue,
    DensityMatrix4, Mat2, Mat4, C64, ZERO,
};
use crate::sequence::{PulseAxis, PulseSequence};

const BELL_PSI_PLUS: [C64; 4] = [
    ZERO,
    C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
    C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
    ZERO,
];

/// Finite pulse duration (ns) and relative rotation-angle error spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseErrorModel {
    pub tau_p_ns: f64,
    pub sigma_eps: f64,
    /// Draw one epsilon per trajectory instead of one per pulse.
    #[serde(default)]
    pub per_sequence: bool,
    /// Hold the noise value fixed inside pulse windows.
    #[serde(default)]
    pub freeze_noise_in_pulse: bool,
}

impl PulseErrorModel {
    pub fn new(tau_p_ns: f64, sigma_eps: f64) -> Result<Self> {
        if !(tau_p_ns >= 0.0) || !(sigma_eps >= 0.0) {
            return Err(DdError::InvalidParams(
                "tau_p and sigma_eps must be >= 0".into(),
            ));
        }
        Ok(Self {
            tau_p_ns,
            sigma_eps,
            per_sequence: false,
            freeze_noise_in_pulse: false,
        })
    }

    pub fn ideal() -> Self {
        Self::new(0.0, 0.0).unwrap()
    }

    fn tau_p_us(&self) -> f64 {
        self.tau_p_ns * 1e-3
    }
}

/// Ensemble average over seeded trajectories, with the per-trajectory
/// states retained for bootstrap resampling.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub n_traj: usize,
    pub mean: Vec<Mat4>,
    per_traj: Vec<Vec<Mat4>>,
}

impl EnsembleResult {
    pub fn mean_state(&self, k: usize) -> DensityMatrix4 {
        DensityMatrix4(self.mean[k])
    }

    fn from_trajectories(times: Vec<f64>, per_traj: Vec<Vec<Mat4>>) -> Self {
        let n_traj = per_traj.len();
        let w = 1.0 / n_traj as f64;
        let mean: Vec<Mat4> = (0..times.len())
            .map(|k| {
                let mut acc = [[ZERO; 4]; 4];
                for traj in &per_traj {
                    for r in 0..4 {
                        for c in 0..4 {
                            acc[r][c] += traj[k][r][c];
                        }
                    }
                }
                for row in acc.iter_mut() {
                    for v in row.iter_mut() {
                        *v *= w;
                    }
                }
                acc
            })
            .collect();
        Self {
            times,
            n_traj,
            mean,
            per_traj,
        }
    }
}

/// Concurrence/fidelity traces of the mean state with bootstrap errors.
#[derive(Debug, Clone)]
pub struct TraceReport {
    pub times: Vec<f64>,
    pub concurrence: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub concurrence_stderr: Vec<f64>,
    pub fidelity_stderr: Vec<f64>,
}

fn validate_run(seq: &PulseSequence, times: &[f64], n_traj: usize) -> Result<()> {
    seq.validate()?;
    if n_traj < 100 {
        return Err(DdError::InvalidParams("n_traj must be >= 100".into()));
    }
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DdError::InvalidParams(
            "sample times must be increasing and nonnegative".into(),
        ));
    }
    if *times.last().unwrap() > seq.total_time + 1e-12 {
        return Err(DdError::InvalidParams(
            "sample times must lie within the sequence duration".into(),
        ));
    }
    Ok(())
}

/// OU parameters whose sampler emits the physical frequency-shift
/// process of amplitude lambda_i = sqrt(2) sigma_i.
fn process_params(params: &OUNoiseParams) -> OUNoiseParams {
    OUNoiseParams {
        sigma: [params.lambda(0), params.lambda(1)],
        tau_c: params.tau_c,
        r: params.r,
    }
}

fn traj_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

fn dephased(rho0: &Mat4, phi: [f64; 2]) -> Mat4 {
    let theta: Vec<f64> = (0..4)
        .map(|b| 0.5 * (z_eigenvalue(b, 0) * phi[0] + z_eigenvalue(b, 1) * phi[1]))
        .collect();
    let mut m = [[ZERO; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            m[a][b] = rho0[a][b] * C64::from_polar(1.0, theta[a] - theta[b]);
        }
    }
    m
}

#[derive(Clone, Copy)]
enum IdealEvent {
    Pulse(usize),
    Sample,
}

fn ideal_events(seq: &PulseSequence, times: &[f64]) -> Vec<(f64, IdealEvent)> {
    let t_last = *times.last().unwrap();
    let mut ev: Vec<(f64, u8, IdealEvent)> = Vec::new();
    for q in 0..2 {
        for p in &seq.qubits[q] {
            if p.time <= t_last {
                ev.push((p.time, 0, IdealEvent::Pulse(q)));
            }
        }
    }
    for &t in times {
        ev.push((t, 1, IdealEvent::Sample));
    }
    ev.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
    ev.into_iter().map(|(t, _, e)| (t, e)).collect()
}

fn simulate_ideal(
    params: &OUNoiseParams,
    events: &[(f64, IdealEvent)],
    rho0: &Mat4,
    dt_max: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Mat4> {
    let mut sampler = OUSampler::new(params, rng);
    let mut phi = [0.0f64; 2];
    let mut sign = [1.0f64, 1.0];
    let mut t = 0.0;
    let mut out = Vec::new();
    for &(te, ev) in events {
        let span = te - t;
        if span > 1e-15 {
            let n_sub = (span / dt_max).ceil().max(1.0) as usize;
            let step = span / n_sub as f64;
            for _ in 0..n_sub {
                let xi0 = sampler.xi;
                sampler.advance(step, rng);
                let xi1 = sampler.xi;
                for q in 0..2 {
                    phi[q] += sign[q] * 0.5 * (xi0[q] + xi1[q]) * step;
                }
            }
        }
        t = te;
        match ev {
            IdealEvent::Pulse(q) => sign[q] = -sign[q],
            IdealEvent::Sample => out.push(dephased(rho0, phi)),
        }
    }
    out
}

/// Ideal-pulse ensemble: each trajectory accrues the random phase
/// phi_i = int xi_i(t) y_i(t) dt on an exact-update OU grid, pulses act
/// as instantaneous sign flips of y (toggling frame), and the dephasing
/// phases are applied to rho0 before averaging.
pub fn run_ideal(
    params: &OUNoiseParams,
    seq: &PulseSequence,
    rho0: &DensityMatrix4,
    times: &[f64],
    n_traj: usize,
    seed: u64,
) -> Result<EnsembleResult> {
    params.validate()?;
    validate_run(seq, times, n_traj)?;
    let proc = process_params(params);
    let events = ideal_events(seq, times);
    let t_last = *times.last().unwrap();
    let dt_max = (params.tau_c / 200.0).min(t_last / 2000.0).max(1e-12);
    let rho = *rho0.matrix();
    let per_traj: Vec<Vec<Mat4>> = (0..n_traj)
        .into_par_iter()
        .map(|idx| {
            let mut rng = traj_rng(seed, idx);
            simulate_ideal(&proc, &events, &rho, dt_max, &mut rng)
        })
        .collect();
    Ok(EnsembleResult::from_trajectories(times.to_vec(), per_traj))
}

struct PulseWindow {
    start: f64,
    end: f64,
    axis: PulseAxis,
    index: usize,
}

#[derive(Clone, Copy)]
enum ErrEvent {
    WindowEnd(usize),
    PointPulse(usize, usize),
    Sample,
    WindowStart(usize, usize),
}

fn axis_unit(axis: PulseAxis) -> (f64, f64) {
    match axis {
        PulseAxis::X => (1.0, 0.0),
        PulseAxis::Y => (0.0, 1.0),
    }
}

fn simulate_with_errors(
    params: &OUNoiseParams,
    windows: &[Vec<PulseWindow>; 2],
    events: &[(f64, ErrEvent)],
    err: &PulseErrorModel,
    rho0: &Mat4,
    dt_max: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Mat4> {
    // Angle errors first so the OU path stream is unaffected by sigma_eps.
    let mut eps: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    if err.per_sequence {
        let draw: f64 = StandardNormal.sample(rng);
        for q in 0..2 {
            eps[q] = vec![err.sigma_eps * draw; windows[q].len()];
        }
    } else {
        for q in 0..2 {
            eps[q] = (0..windows[q].len())
                .map(|_| {
                    let draw: f64 = StandardNormal.sample(rng);
                    err.sigma_eps * draw
                })
                .collect();
        }
    }
    let tau_p = err.tau_p_us();
    let mut sampler = OUSampler::new(params, rng);
    let mut u: [Mat2; 2] = [mat2_id(), mat2_id()];
    let mut pending: [f64; 2] = [0.0, 0.0];
    // (vx, vy) rotation generator while inside a window, frozen xi value.
    let mut in_pulse: [Option<(f64, f64, f64)>; 2] = [None, None];
    let mut t = 0.0;
    let mut out = Vec::new();

    let flush = |u: &mut [Mat2; 2], pending: &mut [f64; 2], q: usize| {
        if pending[q] != 0.0 {
            u[q] = mat2_mul(&rotation_step(0.0, 0.0, pending[q] / 2.0, 1.0), &u[q]);
            pending[q] = 0.0;
        }
    };

    for &(te, ev) in events {
        let span = te - t;
        if span > 1e-15 {
            let n_sub = (span / dt_max).ceil().max(1.0) as usize;
            let step = span / n_sub as f64;
            for _ in 0..n_sub {
                let xi0 = sampler.xi;
                sampler.advance(step, rng);
                let xi1 = sampler.xi;
                for q in 0..2 {
                    match in_pulse[q] {
                        Some((vx, vy, frozen)) => {
                            let xi = if err.freeze_noise_in_pulse {
                                frozen
                            } else {
                                0.5 * (xi0[q] + xi1[q])
                            };
                            u[q] = mat2_mul(&rotation_step(vx, vy, xi / 2.0, step), &u[q]);
                        }
                        None => pending[q] += 0.5 * (xi0[q] + xi1[q]) * step,
                    }
                }
            }
        }
        t = te;
        match ev {
            ErrEvent::WindowEnd(q) => in_pulse[q] = None,
            ErrEvent::PointPulse(q, k) => {
                flush(&mut u, &mut pending, q);
                let (ax, ay) = axis_unit(windows[q][k].axis);
                let half = 0.5 * (1.0 + eps[q][k]) * std::f64::consts::PI;
                u[q] = mat2_mul(&rotation_step(ax * half, ay * half, 0.0, 1.0), &u[q]);
            }
            ErrEvent::WindowStart(q, k) => {
                flush(&mut u, &mut pending, q);
                let (ax, ay) = axis_unit(windows[q][k].axis);
                let rate = 0.5 * (1.0 + eps[q][k]) * std::f64::consts::PI / tau_p;
                in_pulse[q] = Some((ax * rate, ay * rate, sampler.xi[q]));
            }
            ErrEvent::Sample => {
                flush(&mut u, &mut pending, 0);
                flush(&mut u, &mut pending, 1);
                let big = kron2(&u[0], &u[1]);
                out.push(mat4_mul(&mat4_mul(&big, rho0), &mat4_adjoint(&big)));
            }
        }
    }
    out
}

/// Finite-pulse ensemble in the lab frame: square pulses of duration
/// tau_p with per-pulse angle (1 + eps) pi, OU dephasing running
/// throughout, exact 2x2 unitaries composed per qubit.
pub fn run_with_errors(
    params: &OUNoiseParams,
    seq: &PulseSequence,
    err: &PulseErrorModel,
    rho0: &DensityMatrix4,
    times: &[f64],
    n_traj: usize,
    seed: u64,
) -> Result<EnsembleResult> {
    params.validate()?;
    validate_run(seq, times, n_traj)?;
    if err.sigma_eps > 0.2 {
        eprintln!(
            "warning: sigma_eps = {} exceeds 0.2; the small-error pulse model may not be meaningful",
            err.sigma_eps
        );
    }
    let tau_p = err.tau_p_us();
    let mut windows: [Vec<PulseWindow>; 2] = [Vec::new(), Vec::new()];
    for q in 0..2 {
        for (k, p) in seq.qubits[q].iter().enumerate() {
            let (start, end) = (p.time - tau_p / 2.0, p.time + tau_p / 2.0);
            if start < 0.0 || end > seq.total_time {
                return Err(DdError::InvalidSequence(format!(
                    "pulse window [{start}, {end}] extends outside [0, {}]",
                    seq.total_time
                )));
            }
            if k > 0 && p.time - seq.qubits[q][k - 1].time <= tau_p {
                return Err(DdError::InvalidSequence(
                    "pulse windows overlap: consecutive pulses closer than tau_p".into(),
                ));
            }
            windows[q].push(PulseWindow {
                start,
                end,
                axis: p.axis,
                index: k,
            });
        }
    }

    let t_last = *times.last().unwrap();
    let mut ev: Vec<(f64, u8, ErrEvent)> = Vec::new();
    for q in 0..2 {
        for w in &windows[q] {
            if w.start > t_last {
                continue;
            }
            if tau_p == 0.0 {
                ev.push((w.start, 1, ErrEvent::PointPulse(q, w.index)));
            } else {
                ev.push((w.start, 3, ErrEvent::WindowStart(q, w.index)));
                ev.push((w.end, 0, ErrEvent::WindowEnd(q)));
            }
        }
    }
    for &t in times {
        ev.push((t, 2, ErrEvent::Sample));
    }
    ev.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
    let events: Vec<(f64, ErrEvent)> = ev.into_iter().map(|(t, _, e)| (t, e)).collect();

    let mut dt_max = (params.tau_c / 200.0).min(t_last / 2000.0);
    if tau_p > 0.0 {
        dt_max = dt_max.min(tau_p / 10.0);
    }
    let dt_max = dt_max.max(1e-12);
    let proc = process_params(params);
    let rho = *rho0.matrix();
    let per_traj: Vec<Vec<Mat4>> = (0..n_traj)
        .into_par_iter()
        .map(|idx| {
            let mut rng = traj_rng(seed, idx);
            simulate_with_errors(&proc, &windows, &events, err, &rho, dt_max, &mut rng)
        })
        .collect();
    Ok(EnsembleResult::from_trajectories(times.to_vec(), per_traj))
}

/// Concurrence and Bell fidelity of the mean state, with standard errors
/// from 200 bootstrap resamples over trajectories.
pub fn extract_traces(result: &EnsembleResult) -> Result<TraceReport> {
    let n_times = result.times.len();
    let mut concurrence = Vec::with_capacity(n_times);
    let mut fidelity = Vec::with_capacity(n_times);
    for k in 0..n_times {
        let state = result.mean_state(k);
        concurrence.push(concurrence_general(&state)?);
        fidelity.push(state.fidelity_with_pure(&BELL_PSI_PLUS));
    }

    const N_BOOT: usize = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(0xB005_EED ^ result.n_traj as u64);
    let n = result.n_traj;
    let mut c_samples = vec![Vec::with_capacity(N_BOOT); n_times];
    let mut f_samples = vec![Vec::with_capacity(N_BOOT); n_times];
    for _ in 0..N_BOOT {
        let picks: Vec<usize> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0..n)).collect();
        for k in 0..n_times {
            let mut acc = [[ZERO; 4]; 4];
            for &p in &picks {
                let m = &result.per_traj[p][k];
                for r in 0..4 {
                    for c in 0..4 {
                        acc[r][c] += m[r][c];
                    }
                }
            }
            for row in acc.iter_mut() {
                for v in row.iter_mut() {
                    *v /= n as f64;
                }
            }
            let state = DensityMatrix4(acc);
            c_samples[k].push(concurrence_general(&state).unwrap_or(0.0));
            f_samples[k].push(state.fidelity_with_pure(&BELL_PSI_PLUS));
        }
    }
    let stderr = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    };
    Ok(TraceReport {
        times: result.times.clone(),
        concurrence,
        fidelity,
        concurrence_stderr: c_samples.iter().map(|v| stderr(v)).collect(),
        fidelity_stderr: f_samples.iter().map(|v| stderr(v)).collect(),
    })
}

/// Magnitude of the {|01>, |10>} coherence of the mean state, normalized
/// by its initial value; equals e^{-chi} for a Bell input.
pub fn coherence_trace(result: &EnsembleResult, rho0: &DensityMatrix4) -> Vec<f64> {
    let c0 = rho0.matrix()[1][2].norm();
    result
        .mean
        .iter()
        .map(|m| m[1][2].norm() / c0)
        .collect()
}
