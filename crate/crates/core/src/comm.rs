//! Constructive-interference (CI) symbol-level precoding constraints.
//!
//! Constraint `i` couples user `k`, edge family `f ∈ {0, 1}` and symbol slot
//! `j = m·L + l` through `i = (2k + f)·ML + j`. Family 0 uses
//! `ξ₁ = e^{-j∠s}(sinΦ - j cosΦ)`, family 1 uses `ξ₂ = e^{-j∠s}(sinΦ + j cosΦ)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{cis, CMat, CVec, RVec, C64, ZERO};
use crate::scenario::{complex_gaussian, ChannelSet, Dims};

/// Constellation point `q` of `Ω`-PSK, first point at angle `π/Ω`.
pub fn psk_point(q: usize, omega: usize) -> C64 {
    let w = omega as f64;
    cis(std::f64::consts::PI / w + 2.0 * std::f64::consts::PI * q as f64 / w)
}

/// Gray code label carried by constellation index `q`.
pub fn gray_label(q: usize) -> usize {
    q ^ (q >> 1)
}

/// Index of the constellation point whose decision sector contains `y`.
pub fn psk_detect(y: C64, omega: usize) -> usize {
    let w = omega as f64;
    let two_pi = 2.0 * std::f64::consts::PI;
    let rel = (y.arg() - std::f64::consts::PI / w).rem_euclid(two_pi);
    ((rel / (two_pi / w)).round() as usize) % omega
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    pub psk_order: usize,
    pub n_users: usize,
    pub n_pulses: usize,
    pub n_slots: usize,
    /// Constellation indices, laid out `k·ML + m·L + l`.
    pub indices: Vec<usize>,
}

impl SymbolBlock {
    pub fn ml(&self) -> usize {
        self.n_pulses * self.n_slots
    }

    pub fn symbol(&self, k: usize, j: usize) -> C64 {
        psk_point(self.indices[k * self.ml() + j], self.psk_order)
    }

    /// Half-angle `Φ = π/Ω` of each decision sector.
    pub fn half_angle(&self) -> f64 {
        std::f64::consts::PI / self.psk_order as f64
    }
}

pub fn generate_symbols(k: usize, m: usize, l: usize, omega: usize, seed: u64) -> Result<SymbolBlock> {
    if omega < 2 {
        return Err(Error::InvalidArgument(format!("PSK order must be at least 2, got {omega}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = (0..k * m * l).map(|_| rng.random_range(0..omega)).collect();
    Ok(SymbolBlock { psk_order: omega, n_users: k, n_pulses: m, n_slots: l, indices })
}

/// Composite downlink channel `h_k(φ) = h_d,k + Σ_r G_rᵀ diag{h_r,k} φ_r`.
pub fn user_channel(ch: &ChannelSet, k: usize, phi: &CVec) -> CVec {
    let nr = ch.dims.n_elements;
    let mut h = ch.h_d[k].clone();
    for r in 0..ch.dims.n_ris {
        let weighted = CVec::from_fn(nr, |n, _| ch.h_r[r][k][n] * phi[r * nr + n]);
        h += ch.g[r].tr_mul(&weighted);
    }
    h
}

/// Real halfspaces `Re{h_iᵀ z} ≥ γ_i`; row `i` of `h` holds `h_iᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspaces {
    pub h: CMat,
    pub gamma: RVec,
}

impl Halfspaces {
    pub fn empty(dim: usize) -> Self {
        Self { h: CMat::zeros(0, dim), gamma: RVec::zeros(0) }
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// `Re{h_iᵀ z} - γ_i` for every row.
    pub fn margins(&self, z: &CVec) -> RVec {
        let hz = &self.h * z;
        RVec::from_fn(self.len(), |i, _| hz[i].re - self.gamma[i])
    }
}

/// The rotations and thresholds of all `2KML` CI constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct CiConstraintSet {
    pub dims: Dims,
    pub block: SymbolBlock,
    /// `ξ_i` per constraint.
    pub xi: Vec<C64>,
    /// `γ_i = σ_k √Γ_k sinΦ` per constraint.
    pub gamma: Vec<f64>,
}

impl CiConstraintSet {
    /// Build from per-user noise variance `σ_k²` and linear SINR target `Γ_k`.
    pub fn new(dims: Dims, block: SymbolBlock, sigma2: &[f64], qos: &[f64]) -> Result<Self> {
        let kk = dims.n_users;
        let ml = dims.ml();
        if block.n_users != kk || block.ml() != ml || sigma2.len() != kk || qos.len() != kk {
            return Err(Error::Dimension("symbol block, noise or QoS lengths disagree with dims".into()));
        }
        let phi = block.half_angle();
        let (s, c) = (phi.sin(), phi.cos());
        let mut xi = vec![ZERO; 2 * kk * ml];
        let mut gamma = vec![0.0; 2 * kk * ml];
        for k in 0..kk {
            let g = sigma2[k].sqrt() * qos[k].sqrt() * s;
            for j in 0..ml {
                let rot = block.symbol(k, j).conj();
                xi[2 * k * ml + j] = rot * C64::new(s, -c);
                xi[(2 * k + 1) * ml + j] = rot * C64::new(s, c);
                gamma[2 * k * ml + j] = g;
                gamma[(2 * k + 1) * ml + j] = g;
            }
        }
        Ok(Self { dims, block, xi, gamma })
    }

    /// Identical rotations with every threshold pushed to `value` (used to
    /// switch the communication requirement off).
    pub fn with_gamma(&self, value: f64) -> Self {
        let mut out = self.clone();
        out.gamma.iter_mut().for_each(|g| *g = value);
        out
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// `(user, slot)` of constraint `i`.
    pub fn locate(&self, i: usize) -> (usize, usize) {
        let ml = self.dims.ml();
        (i / (2 * ml), i % ml)
    }

    /// Halfspaces in the waveform `x` at fixed `φ`.
    pub fn halfspaces_x(&self, ch: &ChannelSet, phi: &CVec) -> Halfspaces {
        let n = self.dims.n_antennas;
        let users: Vec<CVec> = (0..self.dims.n_users).map(|k| user_channel(ch, k, phi)).collect();
        let mut h = CMat::zeros(self.len(), self.dims.nml());
        for i in 0..self.len() {
            let (k, j) = self.locate(i);
            for a in 0..n {
                h[(i, j * n + a)] = self.xi[i] * users[k][a];
            }
        }
        Halfspaces { h, gamma: RVec::from_vec(self.gamma.clone()) }
    }

    /// `Re{h̃_iᵀ(φ) x} - γ_i`.
    pub fn margins_x(&self, ch: &ChannelSet, x: &CVec, phi: &CVec) -> RVec {
        let n = self.dims.n_antennas;
        let users: Vec<CVec> = (0..self.dims.n_users).map(|k| user_channel(ch, k, phi)).collect();
        RVec::from_fn(self.len(), |i, _| {
            let (k, j) = self.locate(i);
            let y: C64 = (0..n).map(|a| users[k][a] * x[j * n + a]).sum();
            (self.xi[i] * y).re - self.gamma[i]
        })
    }

    /// Coefficients `(d_i, g_i)` with `Re{d_i + φᵀ g_i} = Re{h̃_iᵀ(φ) x}`.
    pub fn coefficients_phi(&self, ch: &ChannelSet, x: &CVec) -> PhiForm {
        let d = self.dims;
        let n = d.n_antennas;
        let nr = d.n_elements;
        let mut dvec = vec![ZERO; self.len()];
        let mut g = CMat::zeros(self.len(), d.rnr());
        for i in 0..self.len() {
            let (k, j) = self.locate(i);
            let xj = x.rows(j * n, n);
            dvec[i] = self.xi[i] * ch.h_d[k].iter().zip(xj.iter()).map(|(a, b)| a * b).sum::<C64>();
            for r in 0..d.n_ris {
                let gx = &ch.g[r] * xj;
                for e in 0..nr {
                    g[(i, r * nr + e)] = self.xi[i] * ch.h_r[r][k][e] * gx[e];
                }
            }
        }
        PhiForm { d: dvec, g, gamma: self.gamma.clone() }
    }
}

/// CI constraints written as affine functions of `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiForm {
    pub d: Vec<C64>,
    /// Row `i` holds `g_iᵀ`.
    pub g: CMat,
    pub gamma: Vec<f64>,
}

impl PhiForm {
    /// `Re{g_iᵀ φ} ≥ γ_i - Re{d_i}`.
    pub fn halfspaces(&self) -> Halfspaces {
        Halfspaces {
            h: self.g.clone(),
            gamma: RVec::from_fn(self.d.len(), |i, _| self.gamma[i] - self.d[i].re),
        }
    }

    pub fn margins(&self, phi: &CVec) -> RVec {
        let gp = &self.g * phi;
        RVec::from_fn(self.d.len(), |i, _| (self.d[i] + gp[i]).re - self.gamma[i])
    }
}

/// Symbol error fraction per user over `n_noise` noise draws with coherent
/// sector detection of the noise-free signal plus `CN(0, σ_k²)`.
pub fn ber_monte_carlo(
    ch: &ChannelSet,
    x: &CVec,
    phi: &CVec,
    block: &SymbolBlock,
    sigma2: &[f64],
    n_noise: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_noise == 0 {
        return Err(Error::InvalidArgument("n_noise must be at least 1".into()));
    }
    let n = ch.dims.n_antennas;
    let ml = block.ml();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(block.n_users);
    for k in 0..block.n_users {
        let h = user_channel(ch, k, phi);
        let sd = sigma2[k].sqrt();
        let mut errors = 0usize;
        for j in 0..ml {
            let clean: C64 = (0..n).map(|a| h[a] * x[j * n + a]).sum();
            let sent = block.indices[k * ml + j];
            for _ in 0..n_noise {
                let y = clean + complex_gaussian(&mut rng) * sd;
                if psk_detect(y, block.psk_order) != sent {
                    errors += 1;
                }
            }
        }
        out.push(errors as f64 / (ml * n_noise) as f64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qpsk_points() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let pts: Vec<C64> = (0..4).map(|q| psk_point(q, 4)).collect();
        assert!((pts[0] - C64::new(s, s)).norm() < 1e-15);
        assert!((pts[1] - C64::new(-s, s)).norm() < 1e-15);
        assert!((pts[2] - C64::new(-s, -s)).norm() < 1e-15);
        assert!((pts[3] - C64::new(s, -s)).norm() < 1e-15);
    }

    #[test]
    fn detection_recovers_points() {
        for omega in [2, 4, 8, 16] {
            for q in 0..omega {
                assert_eq!(psk_detect(psk_point(q, omega) * 3.0, omega), q);
            }
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for q in 0..8usize {
            let d = gray_label(q) ^ gray_label((q + 1) % 8);
            assert_eq!(d.count_ones(), 1);
        }
    }

    #[test]
    fn same_seed_same_block() {
        let a = generate_symbols(2, 3, 4, 8, 11).unwrap();
        let b = generate_symbols(2, 3, 4, 8, 11).unwrap();
        assert_eq!(a, b);
        assert!(generate_symbols(1, 1, 1, 1, 0).is_err());
    }
}
