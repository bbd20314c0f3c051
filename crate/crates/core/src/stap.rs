//! Steering vectors, shift/Doppler matrices and the matrix-free stacked echo
//! operators.
//!
//! Every composite channel is a scaled outer product `α u vᵀ`, so applying a
//! path to `x` costs `O(N)` per slot instead of a dense `N×N` product.

use crate::error::{Error, Result};
use crate::linalg::{cis, dotc, CMat, CVec, RMat, C64, ZERO};
use crate::scenario::{ChannelSet, Dims};

fn steering(theta: f64, len: usize) -> CVec {
    let s = theta.sin();
    CVec::from_fn(len, |n, _| cis(-std::f64::consts::PI * n as f64 * s))
}

/// BS array response `[1, e^{-jπ sinθ}, …]`.
pub fn steering_bs(theta: f64, n: usize) -> CVec {
    steering(theta, n)
}

/// RIS array response, same convention as the BS.
pub fn steering_ris(theta: f64, nr: usize) -> CVec {
    steering(theta, nr)
}

/// `L×P` 0/1 matrix with entry `(m, n) = 1` iff `n = m + tau_rel`.
pub fn shift_matrix(tau_rel: usize, l: usize, p: usize) -> Result<RMat> {
    if tau_rel + l > p {
        return Err(Error::DelayOutOfWindow { tau: tau_rel as i64, max: p.saturating_sub(l) });
    }
    let mut j = RMat::zeros(l, p);
    for m in 0..l {
        j[(m, m + tau_rel)] = 1.0;
    }
    Ok(j)
}

/// `diag{1, e^{j f_d T}, …, e^{j(M-1) f_d T}}`.
pub fn doppler_matrix(f_d: f64, m: usize, t: f64) -> CMat {
    CMat::from_diagonal(&CVec::from_fn(m, |k, _| cis(k as f64 * f_d * t)))
}

/// How the RIS enters a path: `i = 0` direct, `1` scatterer→RIS→BS,
/// `2` BS→RIS→scatterer, `3` both legs through the RIS.
pub type PathIndex = usize;

/// One echo path of the stacked model.
#[derive(Debug, Clone)]
pub struct PathTerm {
    pub alpha: C64,
    pub kind: PathIndex,
    /// RIS index for `kind > 0`.
    pub ris: usize,
    /// Relative delay in slots (against the earliest path of the scene).
    pub shift: usize,
    /// Per-pulse Doppler phase increment `f_d T`.
    pub doppler_step: f64,
    /// BS steering vector toward the scatterer.
    pub a: CVec,
    /// `diag{b(θ)} G_r` for the RIS this path uses (empty for `kind = 0`).
    pub b: CMat,
}

impl PathTerm {
    /// `Bᵀ φ_r`, the BS-side signature created by the RIS.
    pub fn ris_signature(&self, phi: &CVec, nr: usize) -> CVec {
        let phi_r = phi.rows(self.ris * nr, nr);
        self.b.tr_mul(&phi_r)
    }

    /// Left and right factors `(u, v)` of the composite channel `α u vᵀ`.
    pub fn factors(&self, phi: &CVec, nr: usize) -> (CVec, CVec) {
        match self.kind {
            0 => (self.a.clone(), self.a.clone()),
            1 => (self.ris_signature(phi, nr), self.a.clone()),
            2 => (self.a.clone(), self.ris_signature(phi, nr)),
            _ => {
                let s = self.ris_signature(phi, nr);
                (s.clone(), s)
            }
        }
    }

    /// Dense composite channel `α u vᵀ`.
    pub fn channel(&self, phi: &CVec, nr: usize) -> CMat {
        let (u, v) = self.factors(phi, nr);
        (u * v.transpose()) * self.alpha
    }

    pub fn pulse_phase(&self, m: usize) -> C64 {
        cis(m as f64 * self.doppler_step)
    }
}

/// Sum of path terms applied to a stacked waveform.
#[derive(Debug, Clone, Default)]
pub struct EchoOperator {
    pub paths: Vec<PathTerm>,
}

impl EchoOperator {
    pub fn direct(&self) -> EchoOperator {
        EchoOperator { paths: self.paths.iter().filter(|p| p.kind == 0).cloned().collect() }
    }

    pub fn indirect(&self) -> EchoOperator {
        EchoOperator { paths: self.paths.iter().filter(|p| p.kind != 0).cloned().collect() }
    }

    /// `y = Σ (D ⊗ Jᵀ ⊗ H) x` without forming any Kronecker product.
    pub fn apply(&self, dims: &Dims, x: &CVec, phi: &CVec) -> CVec {
        let (n, ml, lsl, p) = (dims.n_antennas, dims.n_pulses, dims.n_slots, dims.n_snapshots);
        let mut y = CVec::zeros(dims.nmp());
        for path in &self.paths {
            let (u, v) = path.factors(phi, dims.n_elements);
            for m in 0..ml {
                let g = path.alpha * path.pulse_phase(m);
                for l in 0..lsl {
                    let xs = x.rows((m * lsl + l) * n, n);
                    let s = g * v.iter().zip(xs.iter()).map(|(a, b)| a * b).sum::<C64>();
                    if s == ZERO {
                        continue;
                    }
                    let base = (m * p + l + path.shift) * n;
                    for k in 0..n {
                        y[base + k] += s * u[k];
                    }
                }
            }
        }
        y
    }

    /// `Hᴴ w` for the same operator.
    pub fn apply_adjoint(&self, dims: &Dims, w: &CVec, phi: &CVec) -> CVec {
        let (n, ml, lsl, p) = (dims.n_antennas, dims.n_pulses, dims.n_slots, dims.n_snapshots);
        let mut out = CVec::zeros(dims.nml());
        for path in &self.paths {
            let (u, v) = path.factors(phi, dims.n_elements);
            for m in 0..ml {
                let g = (path.alpha * path.pulse_phase(m)).conj();
                for l in 0..lsl {
                    let ws = w.rows((m * p + l + path.shift) * n, n);
                    let s = g * u.iter().zip(ws.iter()).map(|(a, b)| a.conj() * b).sum::<C64>();
                    if s == ZERO {
                        continue;
                    }
                    let base = (m * lsl + l) * n;
                    for k in 0..n {
                        out[base + k] += s * v[k].conj();
                    }
                }
            }
        }
        out
    }
}

/// Target and clutter operators for one channel realization.
#[derive(Debug, Clone)]
pub struct StackedModel {
    pub dims: Dims,
    pub pulse_interval: f64,
    pub target: EchoOperator,
    pub clutter: EchoOperator,
    /// `B_{t,r} = diag{b(θ_{t,r})} G_r`
    pub b_target: Vec<CMat>,
    /// `B_{q,r}`, indexed `[q][r]`
    pub b_clutter: Vec<Vec<CMat>>,
    pub a_target: CVec,
    pub a_clutter: Vec<CVec>,
}

impl StackedModel {
    pub fn new(ch: &ChannelSet) -> Result<Self> {
        let d = ch.dims;
        let t = ch.pulse_interval;
        let t0 = ch.delays.min();
        let window = d.n_snapshots - d.n_slots;
        let rel = |tau: usize| -> Result<usize> {
            let s = tau - t0;
            if s > window {
                Err(Error::DelayOutOfWindow { tau: s as i64, max: window })
            } else {
                Ok(s)
            }
        };
        if ch.g.len() != d.n_ris {
            return Err(Error::Dimension(format!("expected {} RIS channels, got {}", d.n_ris, ch.g.len())));
        }
        let geo = &ch.geometry;
        let a_target = steering_bs(geo.theta_target, d.n_antennas);
        let a_clutter: Vec<CVec> = geo.theta_clutter.iter().map(|&th| steering_bs(th, d.n_antennas)).collect();
        let make_b = |theta: f64, r: usize| -> CMat {
            let b = steering_ris(theta, d.n_elements);
            let mut m = ch.g[r].clone();
            for (i, mut row) in m.row_iter_mut().enumerate() {
                row *= b[i];
            }
            m
        };
        let b_target: Vec<CMat> = (0..d.n_ris).map(|r| make_b(geo.theta_target_at_ris[r], r)).collect();
        let b_clutter: Vec<Vec<CMat>> = (0..a_clutter.len())
            .map(|q| (0..d.n_ris).map(|r| make_b(geo.theta_clutter_at_ris[q][r], r)).collect())
            .collect();

        let empty = CMat::zeros(0, 0);
        let mut target = vec![PathTerm {
            alpha: ch.gains.target_direct,
            kind: 0,
            ris: 0,
            shift: rel(ch.delays.target_direct)?,
            doppler_step: ch.dopplers.direct * t,
            a: a_target.clone(),
            b: empty.clone(),
        }];
        for r in 0..d.n_ris {
            for i in 0..3 {
                target.push(PathTerm {
                    alpha: ch.gains.target_indirect[r][i],
                    kind: i + 1,
                    ris: r,
                    shift: rel(ch.delays.target_indirect[r][i])?,
                    doppler_step: ch.dopplers.indirect[r][i] * t,
                    a: a_target.clone(),
                    b: b_target[r].clone(),
                });
            }
        }
        let mut clutter = Vec::new();
        for q in 0..a_clutter.len() {
            clutter.push(PathTerm {
                alpha: ch.gains.clutter_direct[q],
                kind: 0,
                ris: 0,
                shift: rel(ch.delays.clutter_direct[q])?,
                doppler_step: 0.0,
                a: a_clutter[q].clone(),
                b: empty.clone(),
            });
            for r in 0..d.n_ris {
                for i in 0..3 {
                    clutter.push(PathTerm {
                        alpha: ch.gains.clutter_indirect[q][r][i],
                        kind: i + 1,
                        ris: r,
                        shift: rel(ch.delays.clutter_indirect[q][r][i])?,
                        doppler_step: 0.0,
                        a: a_clutter[q].clone(),
                        b: b_clutter[q][r].clone(),
                    });
                }
            }
        }
        Ok(Self {
            dims: d,
            pulse_interval: t,
            target: EchoOperator { paths: target },
            clutter: EchoOperator { paths: clutter },
            b_target,
            b_clutter,
            a_target,
            a_clutter,
        })
    }

    fn check(&self, x: &CVec, phi: &CVec) -> Result<()> {
        if x.len() != self.dims.nml() {
            return Err(Error::Dimension(format!("x has length {}, expected {}", x.len(), self.dims.nml())));
        }
        if phi.len() != self.dims.rnr() {
            return Err(Error::Dimension(format!("phi has length {}, expected {}", phi.len(), self.dims.rnr())));
        }
        Ok(())
    }

    /// `y_t = (H̃_dir + H̃_ind(φ)) x`
    pub fn apply_target_operator(&self, x: &CVec, phi: &CVec) -> Result<CVec> {
        self.check(x, phi)?;
        Ok(self.target.apply(&self.dims, x, phi))
    }

    /// `y_c = (H̃_dir,c + H̃_ind,c(φ)) x`
    pub fn apply_clutter_operator(&self, x: &CVec, phi: &CVec) -> Result<CVec> {
        self.check(x, phi)?;
        Ok(self.clutter.apply(&self.dims, x, phi))
    }

    /// `H̃ᴴ w` for the target operator.
    pub fn target_adjoint(&self, w: &CVec, phi: &CVec) -> CVec {
        self.target.apply_adjoint(&self.dims, w, phi)
    }

    /// `H̃_cᴴ w` for the clutter operator.
    pub fn clutter_adjoint(&self, w: &CVec, phi: &CVec) -> CVec {
        self.clutter.apply_adjoint(&self.dims, w, phi)
    }

    /// All-zero reflection vector of the right length.
    pub fn zero_phi(&self) -> CVec {
        CVec::zeros(self.dims.rnr())
    }
}

/// Transmit waveform, stacked RIS reflections and receive filter.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignVariables {
    pub x: CVec,
    pub phi: CVec,
    pub w: CVec,
}

/// Output SCNR `|wᴴy_t|² / (|wᴴy_c|² + σ² wᴴw)`.
pub fn scnr(model: &StackedModel, x: &CVec, phi: &CVec, w: &CVec, sigma_r2: f64) -> Result<f64> {
    let ww = dotc(w, w).re;
    if ww == 0.0 {
        return Err(Error::ZeroFilter);
    }
    let yt = model.apply_target_operator(x, phi)?;
    let yc = model.apply_clutter_operator(x, phi)?;
    Ok(scnr_from_echoes(&yt, &yc, w, sigma_r2))
}

pub fn scnr_from_echoes(yt: &CVec, yc: &CVec, w: &CVec, sigma_r2: f64) -> f64 {
    let num = dotc(w, yt).norm_sqr();
    let den = dotc(w, yc).norm_sqr() + sigma_r2 * dotc(w, w).re;
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn steering_examples() {
        assert!(steering_bs(0.0, 4).iter().all(|&z| close(z, C64::new(1.0, 0.0))));
        let v = steering_bs(PI / 2.0, 2);
        assert!(close(v[1], C64::new(-1.0, 0.0)));
        let v = steering_bs(PI / 6.0, 3);
        assert!(close(v[1], C64::new(0.0, -1.0)));
        assert!(close(v[2], C64::new(-1.0, 0.0)));
        let v = steering_ris(PI / 2.0, 3);
        assert!(close(v[2], C64::new(1.0, 0.0)));
        assert_eq!(steering_ris(0.0, 25).len(), 25);
        let th = 0.37;
        let (p, m) = (steering_ris(th, 5), steering_ris(-th, 5));
        for k in 0..5 {
            assert!(close(m[k], p[k].conj()));
        }
    }

    #[test]
    fn shift_examples() {
        let j = shift_matrix(0, 2, 4).unwrap();
        assert_eq!(j[(0, 0)], 1.0);
        assert_eq!(j[(1, 1)], 1.0);
        assert_eq!(j.sum(), 2.0);
        let j = shift_matrix(1, 2, 4).unwrap();
        assert_eq!(j[(0, 1)], 1.0);
        assert_eq!(j[(1, 2)], 1.0);
        assert_eq!(j.sum(), 2.0);
        assert!(shift_matrix(3, 2, 4).is_err());
    }

    #[test]
    fn doppler_examples() {
        let d = doppler_matrix(0.0, 3, 1e-3);
        assert_eq!(d, CMat::identity(3, 3));
        let d = doppler_matrix(PI, 3, 1.0);
        assert!(close(d[(1, 1)], C64::new(-1.0, 0.0)));
        assert!(close(d[(2, 2)], C64::new(1.0, 0.0)));
        let d = doppler_matrix(123.4, 5, 1e-3);
        assert!(d.diagonal().iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
    }
}
