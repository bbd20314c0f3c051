//! Starting point: unit-modulus phase search for the RIS by Riemannian
//! conjugate gradient, then a max-min CI margin waveform.

use crate::comm::CiConstraintSet;
use crate::error::Result;
use crate::linalg::{dotc, norm_sqr, CMat, CVec, C64};
use crate::qp::{solve_maxmin_margin, MaxMinSolution};
use crate::scenario::ChannelSet;
use crate::stap::StackedModel;

/// `g(β) = ‖a_t + B_tᵀβ‖² - Σ_q ‖a_q + B_qᵀβ‖²` with every `B` stacked over
/// the RISs (`R·Nr × N`).
#[derive(Debug, Clone)]
pub struct PhaseInitProblem {
    pub target: (CVec, CMat),
    pub clutter: Vec<(CVec, CMat)>,
}

fn stack(blocks: &[CMat], n: usize) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(rows, n);
    let mut r0 = 0;
    for b in blocks {
        out.view_mut((r0, 0), (b.nrows(), n)).copy_from(b);
        r0 += b.nrows();
    }
    out
}

impl PhaseInitProblem {
    pub fn from_model(model: &StackedModel) -> Self {
        let n = model.dims.n_antennas;
        Self {
            target: (model.a_target.clone(), stack(&model.b_target, n)),
            clutter: model
                .a_clutter
                .iter()
                .zip(&model.b_clutter)
                .map(|(a, b)| (a.clone(), stack(b, n)))
                .collect(),
        }
    }

    pub fn objective(&self, beta: &CVec) -> f64 {
        let term = |(a, b): &(CVec, CMat)| norm_sqr(&(a + b.tr_mul(beta)));
        term(&self.target) - self.clutter.iter().map(term).sum::<f64>()
    }

    /// Euclidean gradient `2 conj(B) c` summed with signs.
    pub fn gradient(&self, beta: &CVec) -> CVec {
        let term = |(a, b): &(CVec, CMat)| {
            let c = a + b.tr_mul(beta);
            b.conjugate() * c * C64::from(2.0)
        };
        let mut g = term(&self.target);
        for q in &self.clutter {
            g -= term(q);
        }
        g
    }
}

/// Project `ξ` onto the tangent space of the unit-modulus manifold at `β`.
pub fn tangent_project(beta: &CVec, xi: &CVec) -> CVec {
    CVec::from_fn(beta.len(), |i, _| {
        let b = beta[i];
        xi[i] - b * (xi[i] * b.conj()).re
    })
}

/// Elementwise normalization back onto `|β_n| = 1`.
pub fn retract(v: &CVec) -> CVec {
    v.map(|z| {
        let r = z.norm();
        if r == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            z / r
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcgOptions {
    pub max_iter: usize,
    /// Stop when the Riemannian gradient norm falls below `tol` times its initial value.
    pub tol: f64,
    pub armijo_c: f64,
    pub max_backtracks: usize,
}

impl Default for RcgOptions {
    fn default() -> Self {
        Self { max_iter: 500, tol: 1e-8, armijo_c: 1e-4, max_backtracks: 50 }
    }
}

#[derive(Debug, Clone)]
pub struct RcgResult {
    pub beta: CVec,
    pub trace: Vec<f64>,
    pub iterations: usize,
}

/// Maximize `g` over unit-modulus `β`, starting from all ones.
pub fn rcg_maximize(problem: &PhaseInitProblem, opts: &RcgOptions) -> RcgResult {
    let n = problem.target.1.nrows();
    let mut beta = CVec::from_element(n, C64::new(1.0, 0.0));
    let mut value = problem.objective(&beta);
    let mut trace = vec![value];
    if n == 0 {
        return RcgResult { beta, trace, iterations: 0 };
    }
    let mut grad = tangent_project(&beta, &problem.gradient(&beta));
    let g0 = grad.norm();
    let mut dir = grad.clone();
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        if grad.norm() <= opts.tol * g0.max(f64::MIN_POSITIVE) {
            break;
        }
        let mut slope = dotc(&grad, &dir).re;
        if slope <= 0.0 {
            dir = grad.clone();
            slope = dotc(&grad, &dir).re;
        }
        let dmax = dir.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let mut t = 1.0 / dmax;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let cand = retract(&(&beta + &dir * C64::from(t)));
            let v = problem.objective(&cand);
            if v >= value + opts.armijo_c * t * slope {
                accepted = Some((cand, v));
                break;
            }
            t *= 0.5;
        }
        let Some((nb, nv)) = accepted else { break };
        let new_grad = tangent_project(&nb, &problem.gradient(&nb));
        // Polak-Ribière+ with vector transport by projection
        let g_old_t = tangent_project(&nb, &grad);
        let denom = norm_sqr(&grad);
        let pr = if denom > 0.0 { (dotc(&new_grad, &(&new_grad - &g_old_t)).re / denom).max(0.0) } else { 0.0 };
        dir = &new_grad + tangent_project(&nb, &dir) * C64::from(pr);
        let stalled = (nv - value).abs() <= 1e-15 * nv.abs().max(f64::MIN_POSITIVE);
        beta = nb;
        value = nv;
        grad = new_grad;
        trace.push(value);
        if stalled {
            break;
        }
    }
    RcgResult { beta, trace, iterations }
}

/// `φ₀ = a_max·β*` from the channel-gain phase search.
pub fn rcg_phase_init(model: &StackedModel, a_max: f64, opts: &RcgOptions) -> (CVec, RcgResult) {
    let res = rcg_maximize(&PhaseInitProblem::from_model(model), opts);
    (&res.beta * C64::from(a_max), res)
}

/// Max-min CI margin waveform at fixed `φ₀` with `|x_j| ≤ modulus`.
pub fn init_x(ch: &ChannelSet, ci: &CiConstraintSet, phi0: &CVec, modulus: f64) -> Result<MaxMinSolution> {
    let hs = ci.halfspaces_x(ch, phi0);
    solve_maxmin_margin(&hs.h, modulus)
}
