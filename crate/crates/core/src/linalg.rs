//! Small complex linear-algebra helpers shared by the solver modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;
pub type RVec = DVector<f64>;
pub type RMat = DMatrix<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::new(phase.cos(), phase.sin())
}

/// `aᴴ b`
#[inline]
pub fn dotc(a: &CVec, b: &CVec) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `aᵀ b` (no conjugation)
#[inline]
pub fn dotu(a: &CVec, b: &CVec) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sqr(a: &CVec) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn max_abs(a: &CVec) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Blockwise Kronecker self-product: for every block `φ_r` of length `block`,
/// emits `φ_r ⊗ φ_r` (entry `n1·block + n2` equals `φ_r[n1]·φ_r[n2]`).
pub fn block_kron_self(phi: &CVec, block: usize) -> CVec {
    if block == 0 {
        return CVec::zeros(0);
    }
    let blocks = phi.len() / block;
    let mut out = CVec::zeros(blocks * block * block);
    for r in 0..blocks {
        let base_in = r * block;
        let base_out = r * block * block;
        for n1 in 0..block {
            for n2 in 0..block {
                out[base_out + n1 * block + n2] = phi[base_in + n1] * phi[base_in + n2];
            }
        }
    }
    out
}

/// Interleaved real embedding `[Re z0, Im z0, Re z1, Im z1, ...]`.
pub fn to_real(z: &CVec) -> RVec {
    let mut out = RVec::zeros(2 * z.len());
    for (j, v) in z.iter().enumerate() {
        out[2 * j] = v.re;
        out[2 * j + 1] = v.im;
    }
    out
}

pub fn from_real(u: &RVec) -> CVec {
    CVec::from_iterator(u.len() / 2, (0..u.len() / 2).map(|j| C64::new(u[2 * j], u[2 * j + 1])))
}

/// Real symmetric matrix `P` with `uᵀ P u = zᴴ H z` for Hermitian `H`
/// under the interleaved embedding.
pub fn realify_hermitian(h: &CMat) -> RMat {
    let n = h.nrows();
    let mut p = RMat::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let v = h[(j, k)];
            p[(2 * j, 2 * k)] = v.re;
            p[(2 * j, 2 * k + 1)] = -v.im;
            p[(2 * j + 1, 2 * k)] = v.im;
            p[(2 * j + 1, 2 * k + 1)] = v.re;
        }
    }
    p
}

/// Kronecker product of two dense complex matrices.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Largest eigenvalue of a real symmetric matrix.
pub fn sym_lambda_max(m: &RMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}
