//! Modulation functions, filter functions, and dephasing exponents chi(t)
//! by closed form, frequency-domain quadrature, and exact time-domain
//! integration of the exponential kernel.
//!
//! Conventions: chi is the dimensionless exponent in the coherence decay
//! e^{-chi(t)}. The frequency-domain form is
//! chi = (1/pi) Int_0^inf s^T (S(w) o F(w,t)) s dw with F_ij = Y_i Y_j*,
//! which for free single-qubit evolution reduces to
//! chi1(t) = lambda^2 tau_c (t - tau_c (1 - e^{-t/tau_c})).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DdError, Result};
use crate::noise::OUNoiseParams;
use crate::sequence::PulseSequence;

/// Piecewise-constant +-1 sign function derived from a pulse sequence.
/// Starts at +1 and flips at each breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationFunction {
    pub total_time: f64,
    /// Strictly increasing flip times inside (0, total_time).
    pub breakpoints: Vec<f64>,
}

impl ModulationFunction {
    /// Modulation of qubit `qubit`, truncated to the window [0, eval_time].
    pub fn from_sequence(seq: &PulseSequence, qubit: usize, eval_time: f64) -> Self {
        let breakpoints = seq.qubits[qubit]
            .iter()
            .map(|e| e.time)
            .filter(|&t| t < eval_time)
            .collect();
        Self {
            total_time: eval_time,
            breakpoints,
        }
    }

    pub fn sign_at(&self, t: f64) -> f64 {
        let flips = self.breakpoints.iter().filter(|&&b| b <= t).count();
        if flips % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Constant-sign intervals (a, b, sign) covering [0, total_time].
    pub fn intervals(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.breakpoints.len() + 1);
        let mut a = 0.0;
        let mut sign = 1.0;
        for &b in &self.breakpoints {
            out.push((a, b, sign));
            a = b;
            sign = -sign;
        }
        out.push((a, self.total_time, sign));
        out
    }

    /// Signed area Int_0^T y(t) dt = Y(0, T).
    pub fn signed_area(&self) -> f64 {
        self.intervals().iter().map(|(a, b, s)| s * (b - a)).sum()
    }

    /// Jump representation: Y(w) = (1/(i w)) sum_k c_k e^{i w t_k}, with
    /// coefficients at 0, each breakpoint, and total_time. The c_k sum
    /// to zero.
    fn jumps(&self) -> (Vec<f64>, Vec<f64>) {
        let mut times = Vec::with_capacity(self.breakpoints.len() + 2);
        let mut coeffs = Vec::with_capacity(self.breakpoints.len() + 2);
        times.push(0.0);
        coeffs.push(-1.0);
        let mut sign = 1.0;
        for &b in &self.breakpoints {
            times.push(b);
            coeffs.push(2.0 * sign); // s_old - s_new = 2 s_old
            sign = -sign;
        }
        times.push(self.total_time);
        coeffs.push(sign);
        (times, coeffs)
    }
}

/// Builds the modulation function over the full sequence window.
pub fn modulation(seq: &PulseSequence, qubit: usize) -> ModulationFunction {
    ModulationFunction::from_sequence(seq, qubit, seq.total_time)
}

/// Exact windowed Fourier transform Y(w, T) = Int_0^T y(t) e^{i w t} dt.
pub fn window_transform(y: &ModulationFunction, omega: f64) -> Complex64 {
    let t_total = y.total_time;
    if omega.abs() * t_total < 1e-4 {
        // Small-w Taylor expansion, accurate to ~(wT)^4 relative.
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b, s) in y.intervals() {
            let d1 = b - a;
            let d2 = (b * b - a * a) / 2.0;
            let d3 = (b * b * b - a * a * a) / 6.0;
            let d4 = (b * b * b * b - a * a * a * a) / 24.0;
            acc += s
                * Complex64::new(
                    d1 - omega * omega * d3,
                    omega * d2 - omega * omega * omega * d4,
                );
        }
        return acc;
    }
    let (times, coeffs) = y.jumps();
    let mut acc = Complex64::new(0.0, 0.0);
    for (&t, &c) in times.iter().zip(&coeffs) {
        acc += c * Complex64::from_polar(1.0, omega * t);
    }
    acc / Complex64::new(0.0, omega)
}

/// sigma_z eigenvalue-difference vector labelling a coherence (alpha, beta).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherencePair {
    pub s: [f64; 2],
}

impl CoherencePair {
    pub fn new(s0: i32, s1: i32) -> Result<Self> {
        if s0.abs() > 2 || s1.abs() > 2 {
            return Err(DdError::InvalidParams(
                "coherence components must lie in -2..=2".into(),
            ));
        }
        Ok(Self {
            s: [s0 as f64, s1 as f64],
        })
    }

    /// The Bell coherence {|01>, |10>}: s = (+1, -1).
    pub fn bell() -> Self {
        Self { s: [1.0, -1.0] }
    }

    /// Single-qubit coherence on qubit `i`.
    pub fn single(i: usize) -> Self {
        let mut s = [0.0, 0.0];
        s[i] = 1.0;
        Self { s }
    }

    /// Difference vector between computational basis states alpha, beta
    /// (half the sigma_z eigenvalue difference per qubit).
    pub fn from_basis_pair(alpha: usize, beta: usize) -> Self {
        let s = [0, 1].map(|q| {
            (crate::qmath::z_eigenvalue(alpha, q) - crate::qmath::z_eigenvalue(beta, q)) / 2.0
        });
        Self { s }
    }
}

/// x - 1 + e^{-x}, stable for small x.
pub(crate) fn em1m(x: f64) -> f64 {
    if x < 1e-2 {
        let x2 = x * x;
        x2 / 2.0 - x2 * x / 6.0 + x2 * x2 / 24.0 - x2 * x2 * x / 120.0
    } else {
        x - 1.0 + (-x).exp()
    }
}

/// Closed-form free-evolution exponents: per-qubit chi^{(1)} and the
/// two-qubit Bell exponent chi_1 + chi_2 - 2 rho sqrt(chi_1 chi_2).
#[derive(Debug, Clone, Copy)]
pub struct FreeEvolutionChi {
    pub chi1: [f64; 2],
    pub chi_bell: f64,
}

pub fn chi_closed_form_free(params: &OUNoiseParams, t: f64) -> FreeEvolutionChi {
    let tau_c = params.tau_c;
    let chi1 = [0, 1].map(|i| {
        let lambda2 = params.lambda(i).powi(2);
        lambda2 * tau_c * tau_c * em1m(t / tau_c)
    });
    let chi_bell = chi1[0] + chi1[1] - 2.0 * params.rho() * (chi1[0] * chi1[1]).sqrt();
    FreeEvolutionChi { chi1, chi_bell }
}

/// Instantaneous two-qubit dephasing rate
/// sum_i lambda_i^2 tau_c (1 - e^{-t/tau_c})
///   - 2 rho lambda_1 lambda_2 tau_c (1 - e^{-t/tau_c}).
pub fn gamma_inst(params: &OUNoiseParams, t: f64) -> f64 {
    let decay = 1.0 - (-t / params.tau_c).exp();
    let l1 = params.lambda(0);
    let l2 = params.lambda(1);
    (l1 * l1 + l2 * l2 - 2.0 * params.rho() * l1 * l2) * params.tau_c * decay
}

/// Exact time-domain dephasing exponent: the double integral of the
/// exponential kernel over constant-sign rectangles, evaluated in closed
/// form per rectangle. Serves as a machine-precision oracle for the
/// quadrature path.
pub fn chi_time_domain(
    params: &OUNoiseParams,
    seq: &PulseSequence,
    pair: &CoherencePair,
    eval_time: f64,
) -> f64 {
    if eval_time <= 0.0 {
        return 0.0;
    }
    let y = [0, 1].map(|q| ModulationFunction::from_sequence(seq, q, eval_time));
    let mut chi = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let weight = pair.s[i] * pair.s[j] * params.sigma[i] * params.sigma[j] * params.r[i][j];
            if weight == 0.0 {
                continue;
            }
            chi += weight * kernel_double_integral(&y[i], &y[j], params.tau_c);
        }
    }
    chi
}

/// Int_0^T Int_0^T e^{-|t1-t2|/tau_c} y_i(t1) y_j(t2) dt1 dt2 over the
/// merged partition of the two modulation functions.
fn kernel_double_integral(yi: &ModulationFunction, yj: &ModulationFunction, tau_c: f64) -> f64 {
    // Merged strictly-increasing partition of [0, T].
    let mut cuts: Vec<f64> = yi
        .breakpoints
        .iter()
        .chain(yj.breakpoints.iter())
        .copied()
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15 * yi.total_time.max(1.0));
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(0.0);
    edges.extend(cuts);
    edges.push(yi.total_time);

    let n = edges.len() - 1;
    let mids: Vec<f64> = (0..n).map(|m| 0.5 * (edges[m] + edges[m + 1])).collect();
    let si: Vec<f64> = mids.iter().map(|&t| yi.sign_at(t)).collect();
    let sj: Vec<f64> = mids.iter().map(|&t| yj.sign_at(t)).collect();

    let mut total = 0.0;
    for m in 0..n {
        let delta = edges[m + 1] - edges[m];
        // Diagonal square [a,b]^2.
        total += si[m] * sj[m] * 2.0 * tau_c * tau_c * em1m(delta / tau_c);
        // Off-diagonal boxes, later interval m2 vs earlier m.
        for m2 in (m + 1)..n {
            let (a, b) = (edges[m], edges[m + 1]);
            let (a2, b2) = (edges[m2], edges[m2 + 1]);
            let box_val = tau_c
                * tau_c
                * ((-(a2 - b) / tau_c).exp() - (-(a2 - a) / tau_c).exp()
                    - (-(b2 - b) / tau_c).exp()
                    + (-(b2 - a) / tau_c).exp());
            total += (si[m2] * sj[m] + si[m] * sj[m2]) * box_val;
        }
    }
    total
}

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1] (positive half).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for (idx, (&x, &wk)) in XGK.iter().zip(&WGK).enumerate() {
        let (fl, fr) = if x == 0.0 {
            let v = f(center);
            (v, 0.0)
        } else {
            (f(center - half * x), f(center + half * x))
        };
        kronrod += wk * (fl + fr);
        if idx % 2 == 1 {
            gauss += WG[idx / 2] * (fl + fr);
        } else if x == 0.0 {
            gauss += WG[3] * fl;
        }
    }
    (kronrod * half, (kronrod - gauss).abs() * half)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Adaptive Gauss-Kronrod over [a, b] with oscillation-resolving initial
/// panels of width at most `max_width`.
fn adaptive_quadrature<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    max_width: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    let n0 = ((b - a) / max_width).ceil().max(1.0) as usize;
    let mut panels: Vec<Panel> = (0..n0)
        .map(|k| {
            let pa = a + (b - a) * k as f64 / n0 as f64;
            let pb = a + (b - a) * (k + 1) as f64 / n0 as f64;
            let (value, error) = gk15(f, pa, pb);
            Panel {
                a: pa,
                b: pb,
                value,
                error,
            }
        })
        .collect();

    for _ in 0..20_000 {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .map(|(k, _)| k)
            .unwrap();
        let Panel { a: pa, b: pb, .. } = panels[worst];
        let mid = 0.5 * (pa + pb);
        let (v1, e1) = gk15(f, pa, mid);
        let (v2, e2) = gk15(f, mid, pb);
        panels[worst] = Panel {
            a: pa,
            b: mid,
            value: v1,
            error: e1,
        };
        panels.push(Panel {
            a: mid,
            b: pb,
            value: v2,
            error: e2,
        });
    }
    Err(DdError::Quadrature(
        "panel budget exhausted before reaching tolerance".into(),
    ))
}

/// Frequency-domain dephasing exponent
/// chi = (1/pi) Int_0^inf s^T (S(w) o F(w,t)) s dw,
/// by adaptive Gauss-Kronrod up to w_max = 300/tau_c plus an analytic
/// Lorentzian tail for the non-oscillating part of the filter.
pub fn chi_frequency_domain(
    params: &OUNoiseParams,
    seq: &PulseSequence,
    pair: &CoherencePair,
    eval_time: f64,
) -> Result<f64> {
    if eval_time <= 0.0 {
        return Ok(0.0);
    }
    let y = [0, 1].map(|q| ModulationFunction::from_sequence(seq, q, eval_time));
    let same = y[0] == y[1];
    let tau_c = params.tau_c;
    let weight = |i: usize, j: usize| {
        pair.s[i] * pair.s[j] * params.sigma[i] * params.sigma[j] * params.r[i][j]
    };

    let integrand = |omega: f64| -> f64 {
        let lorentz = 2.0 * tau_c / (1.0 + omega * omega * tau_c * tau_c);
        let y0 = window_transform(&y[0], omega);
        let y1 = if same { y0 } else { window_transform(&y[1], omega) };
        let f00 = y0.norm_sqr();
        let f11 = y1.norm_sqr();
        let f01 = (y0 * y1.conj()).re;
        lorentz * (weight(0, 0) * f00 + weight(1, 1) * f11 + 2.0 * weight(0, 1) * f01)
    };

    let omega_max = 300.0 / tau_c;
    // Resolve the sin(w t) oscillation: at most two periods per panel.
    let max_width = 4.0 * std::f64::consts::PI / eval_time;
    let scale =
        (params.sigma[0] + params.sigma[1]).powi(2) * tau_c * eval_time + f64::MIN_POSITIVE;
    let body = adaptive_quadrature(&integrand, 0.0, omega_max, max_width, 1e-10, 1e-13 * scale)?;

    // Analytic tail: beyond w_max only the non-oscillating component of
    // Y_i Y_j* = (1/w^2) sum_{k,l} c_k c_l e^{i w (t_k - t_l)} is kept
    // (pairs with t_k = t_l); the oscillatory remainder is smaller by
    // ~1/(w_max dt_min) and neglected.
    let jumps = [0, 1].map(|q| y[q].jumps());
    let mut tail = 0.0;
    let x = omega_max * tau_c;
    // Int_x^inf du / (u^2 (1 + u^2)) = 1/x - atan(1/x),
    // evaluated by series to avoid cancellation.
    let mut tail_core: f64 = 0.0;
    let mut term = 1.0 / (3.0 * x.powi(3));
    let mut k = 1usize;
    while term.abs() > 1e-3 * f64::EPSILON * tail_core.abs().max(term.abs()) && k < 60 {
        tail_core += if k % 2 == 1 { term } else { -term };
        k += 1;
        term = 1.0 / ((2 * k + 1) as f64 * x.powi(2 * k as i32 + 1));
    }
    for i in 0..2 {
        for j in 0..2 {
            let w = weight(i, j);
            if w == 0.0 {
                continue;
            }
            let (ti, ci) = &jumps[i];
            let (tj, cj) = &jumps[j];
            let mut const_part = 0.0;
            for (&tk, &ck) in ti.iter().zip(ci) {
                for (&tl, &cl) in tj.iter().zip(cj) {
                    if (tk - tl).abs() < 1e-13 * eval_time {
                        const_part += ck * cl;
                    }
                }
            }
            tail += w * 2.0 * tau_c * const_part * tau_c * tail_core;
        }
    }

    Ok((body + tail) / std::f64::consts::PI)
}

/// Tag recording how a dephasing curve was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChiMethod {
    ClosedForm,
    Quadrature,
    TimeDomain,
    Pmme,
    MonteCarlo,
}

/// Sampled chi(t) with provenance.
#[derive(Debug, Clone)]
pub struct DephasingCurve {
    pub times: Vec<f64>,
    pub chi: Vec<f64>,
    pub method: ChiMethod,
}

impl DephasingCurve {
    pub fn new(times: Vec<f64>, chi: Vec<f64>, method: ChiMethod) -> Self {
        assert_eq!(times.len(), chi.len());
        Self { times, chi, method }
    }
}

/// chi(t) on a time grid using the exact time-domain path; each sample
/// truncates the sequence's modulation to [0, t].
pub fn chi_curve_time_domain(
    params: &OUNoiseParams,
    seq: &PulseSequence,
    pair: &CoherencePair,
    times: &[f64],
) -> DephasingCurve {
    let chi = times
        .iter()
        .map(|&t| chi_time_domain(params, seq, pair, t))
        .collect();
    DephasingCurve::new(times.to_vec(), chi, ChiMethod::TimeDomain)
}
