//! Sweep execution: one row per (grid point, scheme, seed).

use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use ristap_core::comm::ber_monte_carlo;
use ristap_core::driver::{run_scheme, DriverOptions, Instance, RunStatus, Scheme, SolverReport};
use ristap_core::scenario::{build_scenario, sample_channels, ScenarioConfig};
use ristap_core::stap::DesignVariables;

use crate::config::{ExperimentKind, ExperimentSpec, DIRECTION_SWEEP_SPEED};
use crate::detection::detection_probability;

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub point: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub status: RunStatus,
    pub scnr: f64,
    pub ci_min_margin: f64,
    pub modulus_deviation: f64,
    pub phi_max: f64,
    pub a_max: f64,
    /// Mean symbol error rate over users.
    pub ber: f64,
    pub outer_iterations: usize,
    pub waveform_rejected: usize,
    pub ris_rejected: usize,
    pub runtime_s: f64,
    pub scnr_trace: Vec<f64>,
    /// Detection probability at each configured false-alarm rate (`roc` only).
    pub p_d: Vec<f64>,
}

impl RunRecord {
    pub fn scnr_db(&self) -> f64 {
        10.0 * self.scnr.log10()
    }

    /// Trace is nondecreasing up to a relative slack.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.scnr_trace.windows(2).all(|w| w[1] >= w[0] - slack * w[0].abs())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub jobs: usize,
    pub driver: DriverOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { jobs: 1, driver: DriverOptions::default() }
    }
}

/// Scene for one grid value.
pub fn point_scenario(base: &ScenarioConfig, kind: ExperimentKind, value: f64) -> ScenarioConfig {
    let mut cfg = base.clone();
    match kind {
        ExperimentKind::Convergence => cfg.a_max = value,
        ExperimentKind::PowerSweep => cfg.total_power_w = value,
        ExperimentKind::RisPositionSweep => cfg.ris_positions.iter_mut().for_each(|p| p[1] = value),
        ExperimentKind::RisCountSweep => cfg = cfg.with_ris_count(value as usize),
        ExperimentKind::VelocityMagnitudeSweep | ExperimentKind::Roc => cfg.target_velocity = [0.0, value],
        ExperimentKind::VelocityDirectionSweep => {
            let t = value.to_radians();
            cfg.target_velocity = [DIRECTION_SWEEP_SPEED * t.cos(), DIRECTION_SWEEP_SPEED * t.sin()];
        }
        ExperimentKind::QosTradeoff => cfg.qos_gamma_db = value,
    }
    cfg
}

/// Seed actually used for a run: `rng_seed` offsets the run seeds.
pub fn effective_seed(cfg: &ScenarioConfig, seed: u64) -> u64 {
    cfg.rng_seed.wrapping_shl(32).wrapping_add(seed)
}

fn build_instance(cfg: &ScenarioConfig, seed: u64) -> Result<Instance> {
    let scenario = build_scenario(cfg)?;
    let s = effective_seed(cfg, seed);
    Ok(Instance::new(cfg, sample_channels(&scenario, s), s)?)
}

fn record(cfg: &ScenarioConfig, inst: &Instance, spec: &ExperimentSpec, point: f64, seed: u64, rep: &SolverReport, runtime_s: f64) -> Result<RunRecord> {
    let d = &rep.design;
    let bare;
    let channels = if rep.scheme == Scheme::NoRis && inst.channels.dims.n_ris > 0 {
        bare = inst.channels.without_ris();
        &bare
    } else {
        &inst.channels
    };
    let sigma2 = vec![cfg.noise_power_user(); inst.channels.dims.n_users];
    let ber = ber_monte_carlo(channels, &d.x, &d.phi, &inst.ci.block, &sigma2, spec.ber_trials, inst.seed ^ 0xB3E)?;
    let scnr = rep.final_scnr();
    let p_d = if spec.kind == ExperimentKind::Roc {
        spec.p_fa.iter().map(|&p| detection_probability(scnr.max(0.0), p)).collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    Ok(RunRecord {
        point,
        scheme: rep.scheme,
        seed,
        status: rep.status,
        scnr,
        ci_min_margin: rep.ci_min_margin,
        modulus_deviation: rep.modulus_deviation,
        phi_max: rep.phi_max,
        a_max: inst.a_max,
        ber: ber.iter().sum::<f64>() / ber.len() as f64,
        outer_iterations: rep.outer_iterations,
        waveform_rejected: rep.counts.waveform_rejected,
        ris_rejected: rep.counts.ris_rejected,
        runtime_s,
        scnr_trace: rep.scnr_trace.clone(),
        p_d,
    })
}

fn timed(inst: &Instance, scheme: Scheme, opts: &DriverOptions, warm: Option<&DesignVariables>) -> Result<(SolverReport, f64)> {
    let t = Instant::now();
    let rep = run_scheme(inst, scheme, opts, warm)?;
    Ok((rep, t.elapsed().as_secs_f64()))
}

/// All requested schemes at one point. `radar_only` starts from the proposed
/// design of the same instance.
fn run_point(cfg: &ScenarioConfig, inst: &Instance, spec: &ExperimentSpec, point: f64, seed: u64, opts: &DriverOptions) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    let mut proposed: Option<SolverReport> = None;
    let need_proposed = spec.schemes.contains(&Scheme::Proposed) || spec.schemes.contains(&Scheme::RadarOnly);
    if need_proposed {
        let (rep, t) = timed(inst, Scheme::Proposed, opts, None)?;
        if spec.schemes.contains(&Scheme::Proposed) {
            out.push(record(cfg, inst, spec, point, seed, &rep, t)?);
        }
        proposed = Some(rep);
    }
    for &scheme in &spec.schemes {
        if scheme == Scheme::Proposed {
            continue;
        }
        let warm = match (scheme, &proposed) {
            (Scheme::RadarOnly, Some(p)) if p.status != RunStatus::Infeasible => Some(&p.design),
            _ => None,
        };
        let (rep, t) = timed(inst, scheme, opts, warm)?;
        out.push(record(cfg, inst, spec, point, seed, &rep, t)?);
    }
    Ok(out)
}

/// Highest requirement first; each lower one starts from the previous design
/// of the same scheme, so its feasible set contains that start.
fn run_qos_chain(base: &ScenarioConfig, spec: &ExperimentSpec, seed: u64, opts: &DriverOptions) -> Result<Vec<RunRecord>> {
    let mut grid = spec.grid.clone();
    grid.sort_by(|a, b| b.total_cmp(a));
    let mut out = Vec::new();
    let mut warm: Vec<Option<DesignVariables>> = vec![None; spec.schemes.len()];
    for &g in &grid {
        let cfg = point_scenario(base, spec.kind, g);
        let inst = build_instance(&cfg, seed)?;
        for (i, &scheme) in spec.schemes.iter().enumerate() {
            let (rep, t) = timed(&inst, scheme, opts, warm[i].as_ref())?;
            warm[i] = (rep.status != RunStatus::Infeasible).then(|| rep.design.clone());
            out.push(record(&cfg, &inst, spec, g, seed, &rep, t)?);
        }
    }
    Ok(out)
}

fn sort_key(r: &RunRecord) -> (f64, Scheme, u64) {
    (r.point, r.scheme, r.seed)
}

/// Run every (point, seed) task on a pool of `opts.jobs` workers; rows come
/// back sorted by point, scheme and seed.
pub fn run_experiment(base: &ScenarioConfig, spec: &ExperimentSpec, opts: &RunOptions) -> Result<Vec<RunRecord>> {
    spec.validate(base)?;
    let driver = DriverOptions { max_outer: spec.max_outer, ..opts.driver };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs.max(1)).build()?;
    let results: Vec<Result<Vec<RunRecord>>> = pool.install(|| {
        if spec.kind == ExperimentKind::QosTradeoff {
            spec.seeds.par_iter().map(|&s| run_qos_chain(base, spec, s, &driver)).collect()
        } else {
            let tasks: Vec<(f64, u64)> = spec.grid.iter().flat_map(|&p| spec.seeds.iter().map(move |&s| (p, s))).collect();
            tasks
                .par_iter()
                .map(|&(p, s)| {
                    let cfg = point_scenario(base, spec.kind, p);
                    let inst = build_instance(&cfg, s).with_context(|| format!("point {p}, seed {s}"))?;
                    run_point(&cfg, &inst, spec, p, s, &driver)
                })
                .collect()
        }
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| {
        let (ka, kb) = (sort_key(a), sort_key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.cmp(&kb.1)).then(ka.2.cmp(&kb.2))
    });
    Ok(rows)
}
