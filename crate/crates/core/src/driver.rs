//! Alternating optimization of waveform, reflections and filter, plus the
//! baseline schemes.
//!
//! Each outer iteration runs one waveform surrogate pass (ADMM to
//! convergence), one RIS surrogate QP, then the MVDR filter and the ratio
//! update. A block update is kept only if it does not worsen the
//! parametrized objective and keeps every CI constraint, so the SCNR trace
//! is nondecreasing.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::comm::{generate_symbols, CiConstraintSet, Halfspaces};
use crate::error::{Error, Result};
use crate::filter::update_filter;
use crate::init::{init_x, rcg_phase_init, RcgOptions};
use crate::linalg::{cis, CVec, C64};
use crate::qp::{QpSettings, QpStatus};
use crate::ris::{build_f_matrices, ris_qp_solve, ris_surrogate, FilteredResponses};
use crate::scenario::{stream_rng, ChannelSet, ScenarioConfig};
use crate::stap::{DesignVariables, StackedModel};
use crate::waveform::{optimize_waveform, project_modulus, relative_min_margin, AdmmOptions, WaveformSurrogate};

const STREAM_SYMBOLS: u64 = 7;
const STREAM_RANDOM_RIS: u64 = 6;

/// Threshold used for every CI constraint when communication is switched off.
pub const RADAR_ONLY_GAMMA: f64 = -1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Proposed,
    RandomRis,
    NoRis,
    RadarOnly,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::RandomRis => "random_ris",
            Scheme::NoRis => "no_ris",
            Scheme::RadarOnly => "radar_only",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Scheme::Proposed),
            "random_ris" => Ok(Scheme::RandomRis),
            "no_ris" => Ok(Scheme::NoRis),
            "radar_only" => Ok(Scheme::RadarOnly),
            other => Err(Error::InvalidArgument(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverOptions {
    pub max_outer: usize,
    /// Relative SCNR change that ends the loop.
    pub tol: f64,
    pub admm: AdmmOptions,
    pub ris_qp: QpSettings,
    pub rcg: RcgOptions,
}

impl Default for DriverOptions {
    fn default() -> Self {
        Self {
            max_outer: 50,
            tol: 1e-4,
            admm: AdmmOptions::default(),
            ris_qp: QpSettings::default(),
            rcg: RcgOptions::default(),
        }
    }
}

/// Everything one optimization run needs besides the options.
#[derive(Debug, Clone)]
pub struct Instance {
    pub channels: ChannelSet,
    pub model: StackedModel,
    pub ci: CiConstraintSet,
    pub sigma_r2: f64,
    /// Per-entry waveform modulus `√(P_BS/NML)`.
    pub modulus: f64,
    pub a_max: f64,
    pub seed: u64,
}

impl Instance {
    pub fn new(config: &ScenarioConfig, channels: ChannelSet, seed: u64) -> Result<Self> {
        let d = channels.dims;
        let model = StackedModel::new(&channels)?;
        let block = generate_symbols(
            d.n_users,
            d.n_pulses,
            d.n_slots,
            config.psk_order,
            seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ STREAM_SYMBOLS,
        )?;
        let sigma2 = vec![config.noise_power_user(); d.n_users];
        let qos = vec![config.qos_gamma_linear(); d.n_users];
        let ci = CiConstraintSet::new(d, block, &sigma2, &qos)?;
        Ok(Self {
            channels,
            model,
            ci,
            sigma_r2: config.noise_power_radar(),
            modulus: (config.total_power_w / d.nml() as f64).sqrt(),
            a_max: config.a_max,
            seed,
        })
    }

    /// Same realization with the RISs removed.
    pub fn without_ris(&self) -> Result<Self> {
        let channels = self.channels.without_ris();
        let model = StackedModel::new(&channels)?;
        let mut ci = self.ci.clone();
        ci.dims = channels.dims;
        Ok(Self { channels, model, ci, ..self.clone() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxIter,
    /// CI constraints could not be met at initialization.
    Infeasible,
}

impl RunStatus {
    pub fn name(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIter => "max_iter",
            RunStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTiming {
    pub init_s: f64,
    pub waveform_s: f64,
    pub ris_s: f64,
    pub filter_s: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageCounts {
    pub waveform_rejected: usize,
    pub ris_rejected: usize,
    pub qp_infeasible: usize,
    pub qp_max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub scheme: Scheme,
    pub status: RunStatus,
    /// SCNR after initialization, then after every outer iteration.
    pub scnr_trace: Vec<f64>,
    pub eta_trace: Vec<f64>,
    /// Smallest CI margin relative to its threshold.
    pub ci_min_margin: f64,
    /// `max_j ||x_j| - modulus|`
    pub modulus_deviation: f64,
    pub phi_max: f64,
    /// Max-min CI level reached by the initial waveform.
    pub init_margin: f64,
    pub counts: StageCounts,
    pub timing: StageTiming,
    pub design: DesignVariables,
    pub outer_iterations: usize,
}

impl SolverReport {
    pub fn final_scnr(&self) -> f64 {
        *self.scnr_trace.last().unwrap_or(&0.0)
    }
}

fn random_phases(n: usize, a_max: f64, seed: u64) -> CVec {
    let mut rng = stream_rng(seed, STREAM_RANDOM_RIS);
    CVec::from_fn(n, |_, _| cis(rng.random_range(0.0..std::f64::consts::TAU)) * a_max)
}

struct Context<'a> {
    inst: &'a Instance,
    ci: CiConstraintSet,
    optimize_phi: bool,
    opts: &'a DriverOptions,
}

impl Context<'_> {
    fn x_halfspaces(&self, phi: &CVec) -> Halfspaces {
        self.ci.halfspaces_x(&self.inst.channels, phi)
    }

    fn ci_ok(&self, x: &CVec, phi: &CVec) -> bool {
        let hs = self.x_halfspaces(phi);
        hs.is_empty() || relative_min_margin(&hs, x) >= -self.opts.admm.ci_tol
    }
}

/// Run the joint design from scratch (`warm = None`) or from a given point.
pub fn run_scheme(inst: &Instance, scheme: Scheme, opts: &DriverOptions, warm: Option<&DesignVariables>) -> Result<SolverReport> {
    if scheme == Scheme::NoRis && inst.channels.dims.n_ris > 0 {
        return run_scheme(&inst.without_ris()?, scheme, opts, warm);
    }
    let ci = if scheme == Scheme::RadarOnly { inst.ci.with_gamma(RADAR_ONLY_GAMMA) } else { inst.ci.clone() };
    let ctx = Context {
        inst,
        ci,
        optimize_phi: matches!(scheme, Scheme::Proposed | Scheme::RadarOnly) && inst.channels.dims.n_ris > 0,
        opts,
    };
    let model = &inst.model;
    let mut timing = StageTiming::default();
    let mut counts = StageCounts::default();
    let t0 = Instant::now();

    let rnr = inst.channels.dims.rnr();
    let (x, phi, init_margin) = match warm {
        Some(w) => (Some(w.x.clone()), w.phi.clone(), f64::NAN),
        None => {
            let phi0 = match scheme {
                Scheme::Proposed | Scheme::RadarOnly => rcg_phase_init(model, inst.a_max, &opts.rcg).0,
                Scheme::RandomRis => random_phases(rnr, inst.a_max, inst.seed),
                Scheme::NoRis => CVec::zeros(0),
            };
            // Reflections tuned for the target can starve the users; switching
            // the RISs off leaves only the direct user links.
            let mut candidates = vec![phi0];
            if ctx.optimize_phi {
                candidates.push(CVec::zeros(rnr));
            }
            let mut found = None;
            let mut last = None;
            for phi0 in candidates {
                let mm = init_x(&inst.channels, &ctx.ci, &phi0, inst.modulus)?;
                match restore_modulus(&ctx, &mm.x, &phi0)? {
                    Some(x) => {
                        found = Some((x, phi0, mm.delta));
                        break;
                    }
                    None => last = Some((mm.x, phi0, mm.delta)),
                }
            }
            match found {
                Some((x, phi, delta)) => (Some(x), phi, delta),
                None => {
                    let (x, phi, delta) = last.expect("at least one candidate");
                    timing.init_s = t0.elapsed().as_secs_f64();
                    let x = project_modulus(&x, inst.modulus);
                    let filt = update_filter(model, &x, &phi, inst.sigma_r2)?;
                    let hs = ctx.x_halfspaces(&phi);
                    return Ok(SolverReport {
                        scheme,
                        status: RunStatus::Infeasible,
                        scnr_trace: vec![filt.eta],
                        eta_trace: vec![filt.eta],
                        ci_min_margin: relative_min_margin(&hs, &x),
                        modulus_deviation: modulus_deviation(&x, inst.modulus),
                        phi_max: max_abs(&phi),
                        init_margin: delta,
                        counts,
                        timing,
                        design: DesignVariables { x, phi, w: filt.w },
                        outer_iterations: 0,
                    });
                }
            }
        }
    };
    let mut x = x.expect("set above");
    let mut phi = phi;
    let mut filt = update_filter(model, &x, &phi, inst.sigma_r2)?;
    timing.init_s = t0.elapsed().as_secs_f64();

    let mut scnr_trace = vec![filt.eta];
    let mut eta_trace = vec![filt.eta];
    let mut status = RunStatus::MaxIter;
    let mut outer = 0;
    for it in 1..=opts.max_outer {
        outer = it;
        let eta = filt.eta;
        let w = filt.w.clone();

        let tw = Instant::now();
        let sur = waveform_surrogate(model, &w, &phi, eta, &x);
        let hs = ctx.x_halfspaces(&phi);
        let out = optimize_waveform(&sur, &hs, inst.modulus, &opts.admm)?;
        if out.qp_infeasible {
            counts.qp_infeasible += 1;
        }
        if !out.qp_infeasible && out.ci_satisfied && sur.original(&out.x) <= sur.original(&x) {
            x = out.x;
        } else {
            counts.waveform_rejected += 1;
        }
        timing.waveform_s += tw.elapsed().as_secs_f64();

        if ctx.optimize_phi {
            let tr = Instant::now();
            let fm = build_f_matrices(model, &x);
            let resp = FilteredResponses::new(model, &fm, &x, &w, eta, inst.sigma_r2);
            let rs = ris_surrogate(&resp, &phi, inst.a_max);
            let phi_form = ctx.ci.coefficients_phi(&inst.channels, &x);
            let out = ris_qp_solve(&rs, &phi_form, inst.a_max, opts.ris_qp)?;
            match out.status {
                QpStatus::InfeasibleDetected => counts.qp_infeasible += 1,
                QpStatus::MaxIter => counts.qp_max_iter += 1,
                QpStatus::Optimal => {}
            }
            let cand = out.phi;
            if out.status != QpStatus::InfeasibleDetected
                && resp.f2(&cand) <= resp.f2(&phi)
                && max_abs(&cand) <= inst.a_max + 1e-9
                && ctx.ci_ok(&x, &cand)
            {
                phi = cand;
            } else {
                counts.ris_rejected += 1;
            }
            timing.ris_s += tr.elapsed().as_secs_f64();
        }

        let tf = Instant::now();
        filt = update_filter(model, &x, &phi, inst.sigma_r2)?;
        timing.filter_s += tf.elapsed().as_secs_f64();
        let prev = *scnr_trace.last().unwrap();
        scnr_trace.push(filt.eta);
        eta_trace.push(filt.eta);
        if (filt.eta - prev).abs() <= opts.tol * prev.abs() {
            status = RunStatus::Converged;
            break;
        }
    }

    let hs = ctx.x_halfspaces(&phi);
    let ci_min_margin = if hs.is_empty() { f64::INFINITY } else { relative_min_margin(&hs, &x) };
    Ok(SolverReport {
        scheme,
        status,
        scnr_trace,
        eta_trace,
        ci_min_margin,
        modulus_deviation: modulus_deviation(&x, inst.modulus),
        phi_max: max_abs(&phi),
        init_margin,
        counts,
        timing,
        design: DesignVariables { x, phi, w: filt.w },
        outer_iterations: outer,
    })
}

fn waveform_surrogate(model: &StackedModel, w: &CVec, phi: &CVec, eta: f64, anchor: &CVec) -> WaveformSurrogate {
    let v = model.target_adjoint(w, phi);
    let v_c = model.clutter_adjoint(w, phi);
    // Rescale w so the target response is one; the surrogate minimizer is unchanged.
    let resp = crate::linalg::dotc(&v, anchor).norm();
    let s = if resp > 0.0 { 1.0 / resp } else { 1.0 };
    WaveformSurrogate::new(v * C64::from(s), v_c * C64::from(s), eta, anchor.clone())
}

/// Bring a max-min waveform to the exact modulus with one waveform pass
/// anchored at it, falling back to plain projection. `None` when neither
/// keeps the CI constraints.
fn restore_modulus(ctx: &Context<'_>, x: &CVec, phi: &CVec) -> Result<Option<CVec>> {
    let inst = ctx.inst;
    let hs = ctx.x_halfspaces(phi);
    if !hs.is_empty() && relative_min_margin(&hs, x) < -ctx.opts.admm.ci_tol {
        return Ok(None);
    }
    let filt = update_filter(&inst.model, x, phi, inst.sigma_r2)?;
    let sur = waveform_surrogate(&inst.model, &filt.w, phi, filt.eta, x);
    let out = optimize_waveform(&sur, &hs, inst.modulus, &ctx.opts.admm)?;
    if !out.qp_infeasible && out.ci_satisfied {
        return Ok(Some(out.x));
    }
    let projected = project_modulus(x, inst.modulus);
    Ok(ctx.ci_ok(&projected, phi).then_some(projected))
}

fn modulus_deviation(x: &CVec, modulus: f64) -> f64 {
    x.iter().map(|z| (z.norm() - modulus).abs()).fold(0.0, f64::max)
}

fn max_abs(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// The proposed joint design.
pub fn run_algorithm1(inst: &Instance, opts: &DriverOptions) -> Result<SolverReport> {
    run_scheme(inst, Scheme::Proposed, opts, None)
}

/// Baseline schemes; `radar_only` starts from `warm` when given.
pub fn run_baseline(inst: &Instance, scheme: Scheme, opts: &DriverOptions, warm: Option<&DesignVariables>) -> Result<SolverReport> {
    run_scheme(inst, scheme, opts, warm)
}
