//! Waveform block: linearized MM surrogate and the constant-modulus ADMM.

use crate::comm::Halfspaces;
use crate::error::Result;
use crate::linalg::{cis, dotc, norm_sqr, CVec, RVec, C64};
use crate::qp::{solve_cone_qp, ConeQpProblem, QpSettings, QpStatus, QuadraticForm};

/// Upper bound of `f₁(x) = η|v_cᴴx|² - |vᴴx|²` tangent at `x_t`, where
/// `v = H̃ᴴw` and `v_c = H̃_cᴴw`.
#[derive(Debug, Clone)]
pub struct WaveformSurrogate {
    pub v: CVec,
    pub v_c: CVec,
    pub eta: f64,
    pub anchor: CVec,
    /// `vᴴx_t`
    pub anchor_response: C64,
}

impl WaveformSurrogate {
    pub fn new(v: CVec, v_c: CVec, eta: f64, anchor: CVec) -> Self {
        let anchor_response = dotc(&v, &anchor);
        Self { v, v_c, eta, anchor, anchor_response }
    }

    /// `f₁(x)` without the constant `ησ²‖w‖²`.
    pub fn original(&self, x: &CVec) -> f64 {
        self.eta * dotc(&self.v_c, x).norm_sqr() - dotc(&self.v, x).norm_sqr()
    }

    /// `η|v_cᴴx|² - 2Re{xᴴv(vᴴx_t)} + |vᴴx_t|²`
    pub fn value(&self, x: &CVec) -> f64 {
        self.eta * dotc(&self.v_c, x).norm_sqr() - 2.0 * (dotc(x, &self.v) * self.anchor_response).re
            + self.anchor_response.norm_sqr()
    }

    pub fn quadratic(&self) -> QuadraticForm {
        QuadraticForm::LowRank { weights: vec![self.eta], factors: vec![self.v_c.clone()], identity: 0.0 }
    }

    /// Linear term `q` with `Re{xᴴq}` matching the surrogate.
    pub fn linear(&self) -> CVec {
        &self.v * (self.anchor_response * -2.0)
    }

    /// Scale of the surrogate curvature, used to size the penalty.
    pub fn scale(&self) -> f64 {
        norm_sqr(&self.v) + self.eta * norm_sqr(&self.v_c)
    }
}

/// `ψ_j = b·e^{j∠(ρx_j + λ_j)}`, phase 0 when the argument vanishes.
pub fn psi_update(x: &CVec, lambda: &CVec, rho: f64, modulus: f64) -> CVec {
    CVec::from_fn(x.len(), |j, _| {
        let a = x[j] * rho + lambda[j];
        if a.norm_sqr() == 0.0 {
            C64::new(modulus, 0.0)
        } else {
            cis(a.arg()) * modulus
        }
    })
}

/// `λ ← λ + ρ(x - ψ)`
pub fn dual_update(lambda: &CVec, x: &CVec, psi: &CVec, rho: f64) -> CVec {
    lambda + (x - psi) * C64::from(rho)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmOptions {
    /// Initial penalty relative to the surrogate scale.
    pub rho_rel: f64,
    pub adaptive: bool,
    pub tol: f64,
    pub max_iter: usize,
    /// Margin tolerance (relative to each threshold) accepted after restoring
    /// the exact modulus.
    pub ci_tol: f64,
    /// Extra relative tightening of the thresholds seen by the `x`-step, on
    /// top of the worst-case shift from the stopping gap.
    pub ci_backoff: f64,
    pub qp: QpSettings,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        Self { rho_rel: 1.0, adaptive: true, tol: 1e-6, max_iter: 200, ci_tol: 1e-5, ci_backoff: 1e-4, qp: QpSettings::default() }
    }
}

#[derive(Debug, Clone)]
pub struct AdmmState {
    pub x: CVec,
    pub psi: CVec,
    pub lambda: CVec,
    pub rho: f64,
    /// Multipliers of the last `x`-step, used to warm-start the next one.
    pub qp_dual: Option<(RVec, f64)>,
}

#[derive(Debug, Clone)]
pub struct WaveformOutcome {
    /// Constant-modulus waveform (`ψ` of the last iteration).
    pub x: CVec,
    pub iterations: usize,
    /// `‖x - ψ‖∞` when the loop stopped.
    pub primal_residual: f64,
    pub qp_infeasible: bool,
    pub ci_satisfied: bool,
}

/// Smallest `margin_i / |γ_i|` (raw margin when `γ_i = 0`).
pub fn relative_min_margin(hs: &Halfspaces, x: &CVec) -> f64 {
    let m = hs.margins(x);
    m.iter()
        .zip(hs.gamma.iter())
        .map(|(&mi, &g)| if g != 0.0 { mi / g.abs() } else { mi })
        .fold(f64::INFINITY, f64::min)
}

/// Project onto `|x_j| = modulus`, phase 0 for zero entries.
pub fn project_modulus(x: &CVec, modulus: f64) -> CVec {
    psi_update(x, &CVec::zeros(x.len()), 1.0, modulus)
}

/// `x`-step: minimize the surrogate plus `(ρ/2)‖x - ψ + λ/ρ‖²` over the CI
/// halfspaces and the modulus discs.
pub fn admm_x_update(
    surrogate: &WaveformSurrogate,
    state: &AdmmState,
    ci: &Halfspaces,
    modulus: f64,
    settings: QpSettings,
) -> Result<(CVec, QpStatus, (RVec, f64))> {
    let n = state.x.len();
    let mut p = ConeQpProblem::new(n);
    p.quad = surrogate.quadratic();
    p.linear = surrogate.linear();
    p.prox_weight = state.rho;
    p.prox_center = &state.psi - state.lambda.unscale(state.rho);
    p.halfspaces = ci.clone();
    p.radii = vec![modulus; n];
    p.settings = settings;
    p.warm_start = Some(state.x.clone());
    p.warm_dual = state.qp_dual.clone();
    let sol = solve_cone_qp(&p)?;
    Ok((sol.point, sol.status, sol.dual))
}

fn admm_round(
    surrogate: &WaveformSurrogate,
    state: &mut AdmmState,
    ci: &Halfspaces,
    modulus: f64,
    opts: &AdmmOptions,
    adaptive: bool,
) -> Result<(usize, f64, bool)> {
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let (x, status, dual) = admm_x_update(surrogate, state, ci, modulus, opts.qp)?;
        if status == QpStatus::InfeasibleDetected {
            return Ok((it, residual, true));
        }
        state.qp_dual = Some(dual);
        state.x = x;
        let psi_prev = state.psi.clone();
        state.psi = psi_update(&state.x, &state.lambda, state.rho, modulus);
        state.lambda = dual_update(&state.lambda, &state.x, &state.psi, state.rho);
        let diff = &state.x - &state.psi;
        residual = diff.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if residual <= opts.tol * modulus {
            return Ok((it, residual, false));
        }
        if adaptive {
            let r = diff.norm();
            let s = state.rho * (&state.psi - &psi_prev).norm();
            if r > 10.0 * s {
                state.rho *= 2.0;
            } else if s > 10.0 * r {
                state.rho /= 2.0;
            }
        }
    }
    Ok((opts.max_iter, residual, false))
}

/// One surrogate pass: ADMM to convergence from the anchor, then exact
/// modulus restoration. A round that stalls or slips on the CI margins is
/// followed by one more at a raised fixed penalty.
pub fn optimize_waveform(
    surrogate: &WaveformSurrogate,
    ci: &Halfspaces,
    modulus: f64,
    opts: &AdmmOptions,
) -> Result<WaveformOutcome> {
    let anchor = surrogate.anchor.clone();
    // A gap ‖x - ψ‖∞ ≤ tol·b moves margin i by at most ‖h_i‖₁·tol·b.
    let tight = Halfspaces {
        h: ci.h.clone(),
        gamma: RVec::from_fn(ci.len(), |i, _| {
            let l1: f64 = ci.h.row(i).iter().map(|z| z.norm()).sum();
            ci.gamma[i] + l1 * opts.tol * modulus + opts.ci_backoff * ci.gamma[i].abs()
        }),
    };
    let scale = surrogate.scale();
    let rho = if scale > 0.0 { opts.rho_rel * scale } else { opts.rho_rel };
    let mut state = AdmmState {
        psi: project_modulus(&anchor, modulus),
        x: anchor,
        lambda: CVec::zeros(surrogate.v.len()),
        rho,
        qp_dual: None,
    };
    let (mut iterations, mut residual, infeasible) =
        admm_round(surrogate, &mut state, &tight, modulus, opts, opts.adaptive)?;
    if infeasible {
        return Ok(WaveformOutcome {
            x: surrogate.anchor.clone(),
            iterations,
            primal_residual: residual,
            qp_infeasible: true,
            ci_satisfied: false,
        });
    }
    let ok = |x: &CVec| ci.is_empty() || relative_min_margin(ci, x) >= -opts.ci_tol;
    if !ok(&state.psi) || residual > opts.tol * modulus {
        state.rho = (2.0 * state.rho).max(10.0 * rho);
        let (extra, r, inf) = admm_round(surrogate, &mut state, &tight, modulus, opts, false)?;
        iterations += extra;
        residual = r;
        if inf {
            return Ok(WaveformOutcome {
                x: surrogate.anchor.clone(),
                iterations,
                primal_residual: residual,
                qp_infeasible: true,
                ci_satisfied: false,
            });
        }
    }
    let x = state.psi;
    let ci_satisfied = ok(&x);
    Ok(WaveformOutcome { x, iterations, primal_residual: residual, qp_infeasible: false, ci_satisfied })
}
