//! RIS reflection block: equivalent linear/bilinear forms of the echoes, the
//! quartic objective `f₂(φ)`, its quadratic MM surrogate, and the QP step.
//!
//! With `φ̄_r = φ_r ⊗ φ_r`, every echo is affine in `(φ, φ̄)`:
//! `H̃_ind(φ)x = F φ + F̃ φ̄`. Only the filtered responses `p = Fᴴw` and
//! `p̃ = F̃ᴴw` enter the objective, so all surrogate matrices are rank one
//! plus a multiple of the identity.

use crate::comm::PhiForm;
use crate::error::Result;
use crate::linalg::{block_kron_self, dotc, dotu, norm_sqr, sym_lambda_max, CMat, CVec, RMat, C64};
use crate::qp::{solve_cone_qp, ConeQpProblem, QpSettings, QpStatus, QuadraticForm};
use crate::stap::{EchoOperator, StackedModel};

/// `F` (`NMP×RNr`) and `F̃` (`NMP×RNr²`) for one echo operator.
#[derive(Debug, Clone)]
pub struct EquivalentForm {
    pub linear: CMat,
    pub bilinear: CMat,
}

#[derive(Debug, Clone)]
pub struct FMatrices {
    pub target: EquivalentForm,
    pub clutter: EquivalentForm,
}

fn equivalent_form(op: &EchoOperator, model: &StackedModel, x: &CVec) -> EquivalentForm {
    let d = model.dims;
    let (n, nr, lsl, p) = (d.n_antennas, d.n_elements, d.n_slots, d.n_snapshots);
    let mut f = CMat::zeros(d.nmp(), d.rnr());
    let mut ft = CMat::zeros(d.nmp(), d.n_ris * nr * nr);
    for path in op.paths.iter().filter(|p| p.kind != 0) {
        let r = path.ris;
        for m in 0..d.n_pulses {
            let g = path.alpha * path.pulse_phase(m);
            for l in 0..lsl {
                let xs: CVec = x.rows((m * lsl + l) * n, n).into_owned();
                let row0 = (m * p + l + path.shift) * n;
                match path.kind {
                    1 => {
                        let s = g * dotu(&path.a, &xs);
                        for e in 0..nr {
                            for k in 0..n {
                                f[(row0 + k, r * nr + e)] += s * path.b[(e, k)];
                            }
                        }
                    }
                    2 => {
                        let bx = &path.b * &xs;
                        for e in 0..nr {
                            for k in 0..n {
                                f[(row0 + k, r * nr + e)] += g * path.a[k] * bx[e];
                            }
                        }
                    }
                    _ => {
                        let bx = &path.b * &xs;
                        for n1 in 0..nr {
                            for n2 in 0..nr {
                                let col = r * nr * nr + n1 * nr + n2;
                                let s = g * bx[n2];
                                for k in 0..n {
                                    ft[(row0 + k, col)] += s * path.b[(n1, k)];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    EquivalentForm { linear: f, bilinear: ft }
}

/// Build `F_t, F̃_t, F_c, F̃_c` at fixed waveform `x`.
pub fn build_f_matrices(model: &StackedModel, x: &CVec) -> FMatrices {
    FMatrices {
        target: equivalent_form(&model.target, model, x),
        clutter: equivalent_form(&model.clutter, model, x),
    }
}

/// Filtered responses defining `f₂(φ)`:
/// `wᴴy_t = s_t + p_tᴴφ + p̃_tᴴφ̄` and likewise for the clutter.
#[derive(Debug, Clone)]
pub struct FilteredResponses {
    pub nr: usize,
    pub eta: f64,
    pub s_t: C64,
    pub s_c: C64,
    pub p_t: CVec,
    pub p_c: CVec,
    pub pt_tilde: CVec,
    pub pc_tilde: CVec,
    /// `ησ²‖w‖²`
    pub noise: f64,
}

impl FilteredResponses {
    pub fn new(model: &StackedModel, fm: &FMatrices, x: &CVec, w: &CVec, eta: f64, sigma_r2: f64) -> Self {
        let zero = model.zero_phi();
        let s_t = dotc(w, &model.target.direct().apply(&model.dims, x, &zero));
        let s_c = dotc(w, &model.clutter.direct().apply(&model.dims, x, &zero));
        Self {
            nr: model.dims.n_elements,
            eta,
            s_t,
            s_c,
            p_t: fm.target.linear.ad_mul(w),
            p_c: fm.clutter.linear.ad_mul(w),
            pt_tilde: fm.target.bilinear.ad_mul(w),
            pc_tilde: fm.clutter.bilinear.ad_mul(w),
            noise: eta * sigma_r2 * norm_sqr(w),
        }
    }

    pub fn target_response(&self, phi: &CVec) -> C64 {
        let pb = block_kron_self(phi, self.nr);
        self.s_t + dotc(&self.p_t, phi) + dotc(&self.pt_tilde, &pb)
    }

    pub fn clutter_response(&self, phi: &CVec) -> C64 {
        let pb = block_kron_self(phi, self.nr);
        self.s_c + dotc(&self.p_c, phi) + dotc(&self.pc_tilde, &pb)
    }

    /// `f₂(φ) = -|wᴴy_t|² + η(|wᴴy_c|² + σ²‖w‖²)`
    pub fn f2(&self, phi: &CVec) -> f64 {
        -self.target_response(phi).norm_sqr() + self.eta * self.clutter_response(phi).norm_sqr() + self.noise
    }

    /// Dense quadratic/quartic/cubic coefficients of `f₂`.
    pub fn terms(&self) -> F2Terms {
        let eta = C64::from(self.eta);
        let two = C64::from(2.0);
        F2Terms {
            nr: self.nr,
            c: (&self.p_c * self.p_c.adjoint()) * eta - &self.p_t * self.p_t.adjoint(),
            c_tilde: (&self.pc_tilde * self.pc_tilde.adjoint()) * eta - &self.pt_tilde * self.pt_tilde.adjoint(),
            c_vec: &self.p_c * (self.s_c * eta * two) - &self.p_t * (self.s_t * two),
            c_tilde_vec: &self.pc_tilde * (self.s_c * eta * two) - &self.pt_tilde * (self.s_t * two),
            c_bar: (&self.pc_tilde * self.p_c.adjoint()) * (eta * two) - (&self.pt_tilde * self.p_t.adjoint()) * two,
            c2: self.eta * self.s_c.norm_sqr() - self.s_t.norm_sqr() + self.noise,
        }
    }
}

/// `f₂(φ) = φᴴCφ + Re{φᴴc} + φ̄ᴴC̃φ̄ + Re{φ̄ᴴc̃} + Re{φ̄ᴴC̄φ} + c₂`
#[derive(Debug, Clone)]
pub struct F2Terms {
    pub nr: usize,
    pub c: CMat,
    pub c_tilde: CMat,
    pub c_vec: CVec,
    pub c_tilde_vec: CVec,
    pub c_bar: CMat,
    pub c2: f64,
}

impl F2Terms {
    pub fn value(&self, phi: &CVec) -> f64 {
        let pb = block_kron_self(phi, self.nr);
        dotc(phi, &(&self.c * phi)).re
            + dotc(phi, &self.c_vec).re
            + dotc(&pb, &(&self.c_tilde * &pb)).re
            + dotc(&pb, &self.c_tilde_vec).re
            + dotc(&pb, &(&self.c_bar * phi)).re
            + self.c2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurvatureBounds {
    /// Bound on the largest eigenvalue of `C̃`.
    pub lambda1: f64,
    /// Curvature of the indefinite form `Re{φᴴLφ*}` (twice its largest eigenvalue).
    pub lambda2: f64,
    /// Curvature bound of the cubic term over the amplitude box.
    pub lambda3: f64,
    /// Curvature bound of `λ₁Σ_r‖φ_r‖⁴` over the amplitude box.
    pub lambda4: f64,
}

/// Interleaved real matrix `T` with `Re{δᴴLδ*} = uᵀTu` for `u` the embedding of `δ`.
pub fn conj_form_real(l: &CMat) -> RMat {
    let n = l.nrows();
    let mut t = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = l[(i, j)];
            t[(2 * i, 2 * j)] = v.re;
            t[(2 * i + 1, 2 * j + 1)] = -v.re;
            t[(2 * i, 2 * j + 1)] = v.im;
            t[(2 * i + 1, 2 * j)] = v.im;
        }
    }
    t
}

/// `λ_max(T + Tᵀ)` for block-diagonal `L`, one block per RIS.
pub fn lambda2_of(blocks: &[CMat]) -> f64 {
    blocks
        .iter()
        .map(|l| {
            let t = conj_form_real(l);
            sym_lambda_max(&(&t + t.transpose()))
        })
        .fold(0.0, f64::max)
}

/// Certified curvature bound of `Re{κ (φ̄ᴴa)(bᴴφ)}` over `|φ_n| ≤ a_max`.
pub fn cubic_term_bound(kappa: f64, a: &CVec, b: &CVec, nr: usize, a_max: f64) -> f64 {
    let b1: f64 = b.iter().map(|z| z.norm()).sum();
    2.0 * kappa.abs() * a.norm() * (a_max * b1 + 2.0 * (nr as f64).sqrt() * a_max * b.norm())
}

/// MM surrogate `φᴴMφ + Re{φᴴm} + const` of `f₂` at `anchor`, with
/// `M = η p_c p_cᴴ + μ I`.
#[derive(Debug, Clone)]
pub struct RisSurrogate {
    pub anchor: CVec,
    pub eta: f64,
    pub p_c: CVec,
    /// `μ = (λ₂ + λ₃ + λ₄)/2`
    pub identity: f64,
    pub m_vec: CVec,
    pub constant: f64,
    pub bounds: CurvatureBounds,
}

impl RisSurrogate {
    pub fn quadratic(&self) -> QuadraticForm {
        QuadraticForm::LowRank { weights: vec![self.eta], factors: vec![self.p_c.clone()], identity: self.identity }
    }

    pub fn m_matrix(&self) -> CMat {
        self.quadratic().dense(self.anchor.len())
    }

    pub fn value(&self, phi: &CVec) -> f64 {
        self.quadratic().value(phi) + dotc(phi, &self.m_vec).re + self.constant
    }
}

/// Accumulates `value + Re{(φ-φ_t)ᴴg} + (κ/2)‖φ-φ_t‖²` pieces.
struct Pieces<'a> {
    anchor: &'a CVec,
    identity: f64,
    linear: CVec,
    constant: f64,
}

impl Pieces<'_> {
    fn add(&mut self, value: f64, grad: &CVec, kappa: f64) {
        self.identity += 0.5 * kappa;
        self.linear += grad - self.anchor * C64::from(kappa);
        self.constant += value - dotc(self.anchor, grad).re + 0.5 * kappa * norm_sqr(self.anchor);
    }
}

/// Assemble the surrogate of `f₂` tangent at `anchor` for amplitudes `≤ a_max`.
pub fn ris_surrogate(resp: &FilteredResponses, anchor: &CVec, a_max: f64) -> RisSurrogate {
    let nr = resp.nr;
    let dim = anchor.len();
    let n_ris = dim.checked_div(nr).unwrap_or(0);
    let eta = resp.eta;
    let pb = block_kron_self(anchor, nr);

    let mut acc = Pieces { anchor, identity: 0.0, linear: CVec::zeros(dim), constant: 0.0 };

    // Exact parts: η|p_cᴴφ|² lives in M; Re{φᴴc} and c₂ are kept as is.
    let c_vec = &resp.p_c * (resp.s_c * (2.0 * eta)) - &resp.p_t * (resp.s_t * 2.0);
    acc.linear += &c_vec;
    acc.constant += eta * resp.s_c.norm_sqr() - resp.s_t.norm_sqr() + resp.noise;

    // -|p_tᴴφ|² is concave: linearize.
    let pt_phi = dotc(&resp.p_t, anchor);
    acc.linear -= &resp.p_t * (pt_phi * 2.0);
    acc.constant += pt_phi.norm_sqr();

    // Quartic: C̃ ⪯ λ₁I, then split λ₁‖φ̄‖² and the conjugate form Re{φ̄ᴴℓ}.
    let lambda1 = eta * norm_sqr(&resp.pc_tilde);
    let c_tilde_pb = &resp.pc_tilde * (dotc(&resp.pc_tilde, &pb) * eta) - &resp.pt_tilde * dotc(&resp.pt_tilde, &pb);
    let c_tilde_vec = &resp.pc_tilde * (resp.s_c * (2.0 * eta)) - &resp.pt_tilde * (resp.s_t * 2.0);
    let ell = (&c_tilde_pb - &pb * C64::from(lambda1)) * C64::from(2.0) + &c_tilde_vec;
    // φ̄_tᴴ(λ₁I - C̃)φ̄_t
    acc.constant += lambda1 * norm_sqr(&pb) - dotc(&pb, &c_tilde_pb).re;

    let mut quartic_value = 0.0;
    let mut quartic_grad = CVec::zeros(dim);
    for r in 0..n_ris {
        let pr = anchor.rows(r * nr, nr);
        let n2 = pr.norm_squared();
        quartic_value += lambda1 * n2 * n2;
        quartic_grad.rows_mut(r * nr, nr).copy_from(&(pr * C64::from(4.0 * lambda1 * n2)));
    }
    let lambda4 = 12.0 * nr as f64 * a_max * a_max * lambda1;
    acc.add(quartic_value, &quartic_grad, lambda4);

    let blocks: Vec<CMat> = (0..n_ris)
        .map(|r| CMat::from_fn(nr, nr, |i, j| ell[r * nr * nr + i * nr + j]))
        .collect();
    let mut conj_value = 0.0;
    let mut conj_grad = CVec::zeros(dim);
    for (r, l) in blocks.iter().enumerate() {
        let pr: CVec = anchor.rows(r * nr, nr).into_owned();
        let pc = pr.conjugate();
        conj_value += dotc(&pr, &(l * &pc)).re;
        conj_grad.rows_mut(r * nr, nr).copy_from(&((l + l.transpose()) * pc));
    }
    let lambda2 = lambda2_of(&blocks);
    let lambda2 = lambda2 + 1e-12 * lambda2.abs();
    acc.add(conj_value, &conj_grad, lambda2);

    // Cubic Re{φ̄ᴴC̄φ}, C̄ = 2η p̃_c p_cᴴ - 2 p̃_t p_tᴴ.
    let cubic_value = (C64::from(2.0 * eta) * dotc(&pb, &resp.pc_tilde) * dotc(&resp.p_c, anchor)
        - C64::from(2.0) * dotc(&pb, &resp.pt_tilde) * dotc(&resp.p_t, anchor))
    .re;
    // g₃ = C̄ᴴφ̄ + ΞᴴC̄φ
    let cbar_h_pb = &resp.p_c * (dotc(&resp.pc_tilde, &pb) * (2.0 * eta)) - &resp.p_t * (dotc(&resp.pt_tilde, &pb) * 2.0);
    let cbar_phi = &resp.pc_tilde * (dotc(&resp.p_c, anchor) * (2.0 * eta)) - &resp.pt_tilde * (dotc(&resp.p_t, anchor) * 2.0);
    let mut g3 = cbar_h_pb;
    for r in 0..n_ris {
        let pr = anchor.rows(r * nr, nr);
        for n in 0..nr {
            // (φ⊗I + I⊗φ)ᴴ u at column n
            let mut s = C64::new(0.0, 0.0);
            for k in 0..nr {
                s += pr[k].conj() * cbar_phi[r * nr * nr + k * nr + n];
                s += pr[k].conj() * cbar_phi[r * nr * nr + n * nr + k];
            }
            g3[r * nr + n] += s;
        }
    }
    let lambda3 = cubic_term_bound(2.0 * eta, &resp.pc_tilde, &resp.p_c, nr, a_max)
        + cubic_term_bound(2.0, &resp.pt_tilde, &resp.p_t, nr, a_max);
    acc.add(cubic_value, &g3, lambda3);

    RisSurrogate {
        anchor: anchor.clone(),
        eta,
        p_c: resp.p_c.clone(),
        identity: acc.identity,
        m_vec: acc.linear,
        constant: acc.constant,
        bounds: CurvatureBounds { lambda1, lambda2, lambda3, lambda4 },
    }
}

#[derive(Debug, Clone)]
pub struct RisOutcome {
    pub phi: CVec,
    pub status: QpStatus,
}

/// Minimize the surrogate over the CI halfspaces in `φ` and `|φ_n| ≤ a_max`.
/// An infeasible subproblem keeps the anchor.
pub fn ris_qp_solve(sur: &RisSurrogate, ci: &PhiForm, a_max: f64, settings: QpSettings) -> Result<RisOutcome> {
    let n = sur.anchor.len();
    let mut p = ConeQpProblem::new(n);
    p.quad = sur.quadratic();
    p.linear = sur.m_vec.clone();
    p.halfspaces = ci.halfspaces();
    p.radii = vec![a_max; n];
    p.settings = settings;
    p.warm_start = Some(sur.anchor.clone());
    let sol = solve_cone_qp(&p)?;
    if sol.status == QpStatus::InfeasibleDetected {
        return Ok(RisOutcome { phi: sur.anchor.clone(), status: sol.status });
    }
    Ok(RisOutcome { phi: sol.point, status: sol.status })
}
