//! Small dense complex linear algebra for 2x2 / 4x4 operators, plus the
//! two-qubit density-matrix type used throughout the crate.
//!
//! Everything here is fixed-size; no external linear-algebra backend is
//! required. The Hermitian eigensolver is a cyclic complex Jacobi, which
//! is exact enough at 4x4 for all tolerances used in this crate.

use num_complex::Complex64;

use crate::error::{DdError, Result};

pub type C64 = Complex64;
pub type Mat2 = [[C64; 2]; 2];
pub type Mat4 = [[C64; 4]; 4];

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn mat2_zero() -> Mat2 {
    [[ZERO; 2]; 2]
}

pub fn mat2_id() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn sigma_x() -> Mat2 {
    [[ZERO, ONE], [ONE, ZERO]]
}

pub fn sigma_y() -> Mat2 {
    [[ZERO, -I], [I, ZERO]]
}

pub fn sigma_z() -> Mat2 {
    [[ONE, ZERO], [ZERO, -ONE]]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = mat2_zero();
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

pub fn mat2_adjoint(a: &Mat2) -> Mat2 {
    let mut out = mat2_zero();
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[c][r].conj();
        }
    }
    out
}

/// exp(-i (v . sigma) dt) for a real 3-vector v = (vx, vy, vz).
pub fn rotation_step(vx: f64, vy: f64, vz: f64, dt: f64) -> Mat2 {
    let norm = (vx * vx + vy * vy + vz * vz).sqrt();
    if norm * dt == 0.0 {
        return mat2_id();
    }
    let (s, c) = (norm * dt).sin_cos();
    let (nx, ny, nz) = (vx / norm, vy / norm, vz / norm);
    let is = -I * s;
    [
        [c * ONE + is * nz, is * (nx * ONE - I * ny)],
        [is * (nx * ONE + I * ny), c * ONE - is * nz],
    ]
}

pub fn mat4_zero() -> Mat4 {
    [[ZERO; 4]; 4]
}

pub fn mat4_id() -> Mat4 {
    let mut m = mat4_zero();
    for k in 0..4 {
        m[k][k] = ONE;
    }
    m
}

pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = mat4_zero();
    for r in 0..4 {
        for c in 0..4 {
            let mut acc = ZERO;
            for k in 0..4 {
                acc += a[r][k] * b[k][c];
            }
            out[r][c] = acc;
        }
    }
    out
}

pub fn mat4_adjoint(a: &Mat4) -> Mat4 {
    let mut out = mat4_zero();
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = a[c][r].conj();
        }
    }
    out
}

pub fn mat4_trace(a: &Mat4) -> C64 {
    a[0][0] + a[1][1] + a[2][2] + a[3][3]
}

pub fn mat4_add(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = mat4_zero();
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = a[r][c] + b[r][c];
        }
    }
    out
}

pub fn mat4_scale(a: &Mat4, s: C64) -> Mat4 {
    let mut out = mat4_zero();
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = a[r][c] * s;
        }
    }
    out
}

/// Kronecker product of two single-qubit operators, qubit 1 first.
pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = mat4_zero();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// Eigendecomposition of a Hermitian 4x4 matrix by cyclic complex Jacobi.
/// Returns eigenvalues (ascending) and the matrix whose columns are the
/// corresponding eigenvectors.
pub fn eigh4(a: &Mat4) -> (Vec<f64>, Mat4) {
    let mut m = *a;
    let mut v = mat4_id();
    let scale: f64 = (0..4)
        .flat_map(|r| (0..4).map(move |c| (r, c)))
        .map(|(r, c)| m[r][c].norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);

    for _sweep in 0..60 {
        let off: f64 = (0..4)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .filter(|&(r, c)| r != c)
            .map(|(r, c)| m[r][c].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < 1e-15 * scale {
            break;
        }
        for p in 0..4 {
            for q in (p + 1)..4 {
                let apq = m[p][q];
                let r = apq.norm();
                if r < 1e-300 {
                    continue;
                }
                let phase = apq / r; // e^{i phi}
                let app = m[p][p].re;
                let aqq = m[q][q].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U embeds [[c, s*phase], [-s*conj(phase), c]] at (p, q).
                let u00 = c * ONE;
                let u01 = s * phase;
                let u10 = -s * phase.conj();
                let u11 = c * ONE;
                for k in 0..4 {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = mkp * u00 + mkq * u10;
                    m[k][q] = mkp * u01 + mkq * u11;
                }
                for k in 0..4 {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = u00.conj() * mpk + u10.conj() * mqk;
                    m[q][k] = u01.conj() * mpk + u11.conj() * mqk;
                }
                m[p][q] = ZERO;
                m[q][p] = ZERO;
                for k in 0..4 {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = vkp * u00 + vkq * u10;
                    v[k][q] = vkp * u01 + vkq * u11;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| m[i][i].re.partial_cmp(&m[j][j].re).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| m[i][i].re).collect();
    let mut vecs = mat4_zero();
    for (new, &old) in order.iter().enumerate() {
        for k in 0..4 {
            vecs[k][new] = v[k][old];
        }
    }
    (vals, vecs)
}

/// Hermitian square root via eigendecomposition; negative eigenvalues
/// below roundoff are clamped to zero.
pub fn sqrtm_psd(a: &Mat4) -> Mat4 {
    let (vals, vecs) = eigh4(a);
    let mut out = mat4_zero();
    for r in 0..4 {
        for c in 0..4 {
            let mut acc = ZERO;
            for (k, &lam) in vals.iter().enumerate() {
                let s = lam.max(0.0).sqrt();
                acc += vecs[r][k] * s * vecs[c][k].conj();
            }
            out[r][c] = acc;
        }
    }
    out
}

/// A 4x4 Hermitian, unit-trace, positive-semidefinite two-qubit state.
/// Basis ordering |00>, |01>, |10>, |11> with qubit 1 as the left label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4(pub Mat4);

impl DensityMatrix4 {
    /// Validates Hermiticity, unit trace, and positivity (eigenvalues
    /// >= -tol) before accepting the matrix.
    pub fn new(m: Mat4, tol: f64) -> Result<Self> {
        for r in 0..4 {
            for c in 0..4 {
                if (m[r][c] - m[c][r].conj()).norm() > tol {
                    return Err(DdError::InvalidParams(format!(
                        "density matrix not Hermitian at ({r},{c})"
                    )));
                }
            }
        }
        let tr = mat4_trace(&m);
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(DdError::InvalidParams(format!(
                "density matrix trace {tr} != 1"
            )));
        }
        let (vals, _) = eigh4(&m);
        if vals[0] < -tol {
            return Err(DdError::InvalidParams(format!(
                "density matrix not PSD: min eigenvalue {}",
                vals[0]
            )));
        }
        Ok(Self(m))
    }

    pub fn from_pure(psi: &[C64; 4]) -> Self {
        let mut m = mat4_zero();
        for r in 0..4 {
            for c in 0..4 {
                m[r][c] = psi[r] * psi[c].conj();
            }
        }
        Self(m)
    }

    /// |Psi+> = (|01> + |10>)/sqrt(2)
    pub fn bell_psi_plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_pure(&[ZERO, s * ONE, s * ONE, ZERO])
    }

    pub fn basis_state(index: usize) -> Self {
        let mut psi = [ZERO; 4];
        psi[index] = ONE;
        Self::from_pure(&psi)
    }

    pub fn maximally_mixed() -> Self {
        let mut m = mat4_zero();
        for k in 0..4 {
            m[k][k] = 0.25 * ONE;
        }
        Self(m)
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn trace(&self) -> C64 {
        mat4_trace(&self.0)
    }

    pub fn purity(&self) -> f64 {
        mat4_mul(&self.0, &self.0)
            .iter()
            .enumerate()
            .map(|(k, row)| row[k].re)
            .sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eigh4(&self.0).0[0]
    }

    /// <psi| rho |psi>
    pub fn fidelity_with_pure(&self, psi: &[C64; 4]) -> f64 {
        let mut acc = ZERO;
        for r in 0..4 {
            for c in 0..4 {
                acc += psi[r].conj() * self.0[r][c] * psi[c];
            }
        }
        acc.re
    }
}

/// sigma_z eigenvalue of qubit `qubit` (0 or 1) in basis state `b`.
/// Convention: |0> has eigenvalue +1.
pub fn z_eigenvalue(b: usize, qubit: usize) -> f64 {
    let bit = if qubit == 0 { (b >> 1) & 1 } else { b & 1 };
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}
