//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Sweeps run on the desk profile.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::time::Instant;

use common::{dense_operator, rand_cvec, rand_in_discs, rel_err, rng, tiny_channels};
use rand::Rng;
use ristap_core::driver::{RunStatus, Scheme};
use ristap_core::filter::{mvdr_filter, update_filter};
use ristap_core::linalg::{block_kron_self, cis, dotc, CMat, CVec, C64};
use ristap_core::ris::{build_f_matrices, ris_qp_solve, ris_surrogate, FilteredResponses};
use ristap_core::scenario::ScenarioConfig;
use ristap_core::stap::StackedModel;
use ristap_core::comm::{generate_symbols, CiConstraintSet};
use ristap_core::init::init_x;
use ristap_core::qp::QpSettings;
use ristap_core::waveform::{optimize_waveform, psi_update, AdmmOptions, WaveformSurrogate};
use ristap_harness::config::{ExperimentKind, ExperimentSpec};
use ristap_harness::detection::{detection_probability, detection_probability_monte_carlo};
use ristap_harness::experiment::{run_experiment, RunOptions, RunRecord};
use ristap_harness::output::median;

const SEEDS: u64 = 10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn spec(name: &str, kind: ExperimentKind, grid: Vec<f64>, schemes: Vec<Scheme>, seeds: Vec<u64>) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        kind,
        grid,
        schemes,
        seeds,
        out_dir: None,
        ber_trials: 1000,
        p_fa: vec![1e-4],
        max_outer: 50,
    }
}

fn run(base: &ScenarioConfig, s: &ExperimentSpec) -> Vec<RunRecord> {
    run_experiment(base, s, &RunOptions { jobs: std::thread::available_parallelism().map_or(1, |n| n.get()), ..RunOptions::default() })
        .expect("experiment runs")
}

fn pick(rows: &[RunRecord], point: f64, scheme: Scheme) -> Vec<&RunRecord> {
    rows.iter().filter(|r| r.point == point && r.scheme == scheme).collect()
}

fn median_db(rows: &[&RunRecord]) -> f64 {
    median(&rows.iter().map(|r| r.scnr_db()).collect::<Vec<_>>())
}

fn operators() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut shapes_ok = common::tiny_shape().n_clutter == 1;
    for seed in 0..20 {
        let ch = tiny_channels(seed);
        let d = ch.dims;
        shapes_ok &= d.n_antennas == 2 && d.n_pulses == 2 && d.n_slots == 2 && d.n_snapshots <= 6 && d.n_elements == 2 && d.n_ris == 1;
        let model = StackedModel::new(&ch).unwrap();
        let mut r = rng(seed + 100);
        let x = rand_cvec(&mut r, d.nml());
        let phi = rand_cvec(&mut r, d.rnr());
        let dt = dense_operator(&model.target, &d, ch.pulse_interval, &phi);
        let dc = dense_operator(&model.clutter, &d, ch.pulse_interval, &phi);
        worst = worst.max(rel_err(&model.apply_target_operator(&x, &phi).unwrap(), &(&dt * &x)));
        worst = worst.max(rel_err(&model.apply_clutter_operator(&x, &phi).unwrap(), &(&dc * &x)));
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(shapes_ok && worst <= 1e-12 && secs < 5.0, format!("max rel. error {worst:.2e} over 20 instances in {secs:.2} s"))
}

fn f_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let ch = tiny_channels(seed);
        let model = StackedModel::new(&ch).unwrap();
        let mut r = rng(seed);
        let x = rand_cvec(&mut r, model.dims.nml());
        let fm = build_f_matrices(&model, &x);
        let ind = model.target.indirect();
        let ind_c = model.clutter.indirect();
        for _ in 0..1000 {
            let phi = rand_cvec(&mut r, model.dims.rnr());
            let pb = block_kron_self(&phi, model.dims.n_elements);
            let lhs = &fm.target.linear * &phi + &fm.target.bilinear * &pb;
            let lhs_c = &fm.clutter.linear * &phi + &fm.clutter.bilinear * &pb;
            worst = worst.max(rel_err(&lhs, &ind.apply(&model.dims, &x, &phi)));
            worst = worst.max(rel_err(&lhs_c, &ind_c.apply(&model.dims, &x, &phi)));
        }
    }
    outcome(worst <= 1e-10, format!("max rel. error {worst:.2e} over 5 instances x 1000 reflections"))
}

fn mvdr() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut beaten = 0;
    for seed in 0..20 {
        let ch = tiny_channels(seed);
        let model = StackedModel::new(&ch).unwrap();
        let mut g = rng(400 + seed);
        let x = rand_cvec(&mut g, ch.dims.nml());
        let phi = rand_cvec(&mut g, ch.dims.rnr());
        let sigma = 0.02;
        let w = mvdr_filter(&model, &x, &phi, sigma).unwrap();
        let yt = model.apply_target_operator(&x, &phi).unwrap();
        let yc = model.apply_clutter_operator(&x, &phi).unwrap();
        let n = yt.len();
        let r = &yc * yc.adjoint() + CMat::identity(n, n) * C64::from(sigma);
        // Dense KKT solve of min wᴴRw s.t. yₜᴴw = yₜᴴw_mvdr.
        let mut k = CMat::zeros(n + 1, n + 1);
        k.view_mut((0, 0), (n, n)).copy_from(&r);
        for i in 0..n {
            k[(i, n)] = -yt[i];
            k[(n, i)] = yt[i].conj();
        }
        let mut rhs = CVec::zeros(n + 1);
        rhs[n] = dotc(&yt, &w);
        let reference = k.lu().solve(&rhs).unwrap().rows(0, n).into_owned();
        worst = worst.max(rel_err(&w, &reference));
        let var = |v: &CVec| dotc(v, &(&r * v)).re;
        let best = var(&w);
        for _ in 0..100 {
            let z = rand_cvec(&mut g, n);
            let other = &w + (&z - &yt * (dotc(&yt, &z) / dotc(&yt, &yt)));
            beaten += (var(&other) < best * (1.0 - 1e-12)) as usize;
        }
    }
    outcome(worst <= 1e-8 && beaten == 0, format!("max rel. error {worst:.2e}, {beaten} of 2000 random filters did better"))
}

/// Surrogates along an alternating run on tiny instances: at every outer
/// iteration both are checked at 100 feasible points and at the anchor.
fn domination() -> Outcome {
    let mut worst_gap: f64 = f64::INFINITY;
    let mut worst_tangent: f64 = 0.0;
    let mut checks = 0;
    let a_max = 2.0;
    let sigma_r2 = 0.05;
    for seed in 0..4 {
        let ch = tiny_channels(seed);
        let model = StackedModel::new(&ch).unwrap();
        let d = ch.dims;
        let mut g = rng(900 + seed);
        let block = generate_symbols(d.n_users, d.n_pulses, d.n_slots, 4, seed).unwrap();
        let ci = CiConstraintSet::new(d, block, &[1e-6, 1e-6], &[1.0, 1.0]).unwrap();
        let mut phi = rand_in_discs(&mut g, d.rnr(), a_max);
        let mut x = init_x(&ch, &ci, &phi, 1.0).unwrap().x;
        for _outer in 0..5 {
            let st = update_filter(&model, &x, &phi, sigma_r2).unwrap();
            let sur = WaveformSurrogate::new(model.target_adjoint(&st.w, &phi), model.clutter_adjoint(&st.w, &phi), st.eta, x.clone());
            let scale = sur.original(&x).abs().max(sur.scale() * sur.v.len() as f64);
            worst_tangent = worst_tangent.max((sur.value(&x) - sur.original(&x)).abs() / scale);
            for _ in 0..100 {
                let z = rand_in_discs(&mut g, d.nml(), 1.0);
                worst_gap = worst_gap.min((sur.value(&z) - sur.original(&z)) / scale);
                checks += 1;
            }
            let out = optimize_waveform(&sur, &ci.halfspaces_x(&ch, &phi), 1.0, &AdmmOptions::default()).unwrap();
            if out.ci_satisfied && sur.original(&out.x) <= sur.original(&x) {
                x = out.x;
            }

            let fm = build_f_matrices(&model, &x);
            let resp = FilteredResponses::new(&model, &fm, &x, &st.w, st.eta, sigma_r2);
            let rs = ris_surrogate(&resp, &phi, a_max);
            let f0 = resp.f2(&phi);
            let scale = f0.abs().max(1.0);
            worst_tangent = worst_tangent.max((rs.value(&phi) - f0).abs() / scale);
            for _ in 0..100 {
                let p = rand_in_discs(&mut g, d.rnr(), a_max);
                worst_gap = worst_gap.min((rs.value(&p) - resp.f2(&p)) / scale);
                checks += 1;
            }
            let form = ci.coefficients_phi(&ch, &x);
            let out = ris_qp_solve(&rs, &form, a_max, QpSettings::default()).unwrap();
            if form.margins(&out.phi).min() >= 0.0 && resp.f2(&out.phi) <= f0 {
                phi = out.phi;
            }
        }
    }
    outcome(
        worst_gap >= -1e-8 && worst_tangent <= 1e-8,
        format!("{checks} points: min scaled margin {worst_gap:.2e}, max anchor gap {worst_tangent:.2e}"),
    )
}

fn psi_grid() -> Outcome {
    let mut g = rng(1);
    let grid = 10_000;
    let step = std::f64::consts::TAU / grid as f64;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = 6;
        let x = rand_cvec(&mut g, n);
        let lambda = rand_cvec(&mut g, n);
        let rho = g.random_range(0.1..10.0);
        let b = g.random_range(0.5..2.0);
        let psi = psi_update(&x, &lambda, rho, b);
        for j in 0..n {
            let target = x[j] + lambda[j] / rho;
            let best = (0..grid)
                .map(|t| t as f64 * step)
                .min_by(|p, q| (target - cis(*p) * b).norm_sqr().total_cmp(&(target - cis(*q) * b).norm_sqr()))
                .unwrap();
            let d = (psi[j].arg() - best).rem_euclid(std::f64::consts::TAU);
            worst = worst.max(d.min(std::f64::consts::TAU - d));
        }
    }
    outcome(worst <= step, format!("worst phase gap {worst:.2e} rad, grid step {step:.2e} rad"))
}

fn convergence(power: &[RunRecord]) -> Outcome {
    let runs = pick(power, 50.0, Scheme::Proposed);
    let monotone = runs.iter().filter(|r| r.is_monotone(1e-6)).count();
    let capped = runs.iter().filter(|r| r.outer_iterations <= 50 && r.status != RunStatus::Infeasible).count();
    let slowest = runs.iter().map(|r| r.runtime_s).fold(0.0, f64::max);
    outcome(
        runs.len() == SEEDS as usize && monotone == runs.len() && capped == runs.len() && slowest <= 120.0,
        format!("{monotone}/{} monotone, {capped} within 50 iterations, slowest {slowest:.1} s", runs.len()),
    )
}

fn ordering(power: &[RunRecord]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [40.0, 50.0] {
        let m: Vec<f64> = [Scheme::Proposed, Scheme::RandomRis, Scheme::NoRis].iter().map(|&s| median_db(&pick(power, p, s))).collect();
        ok &= m[0] >= m[1] && m[1] >= m[2];
        parts.push(format!("{p} W: {:.2} / {:.2} / {:.2} dB", m[0], m[1], m[2]));
        let isac = pick(power, p, Scheme::Proposed);
        let radar = pick(power, p, Scheme::RadarOnly);
        let dominated = isac.iter().zip(&radar).filter(|(i, r)| i.seed == r.seed && r.scnr >= i.scnr).count();
        ok &= dominated == isac.len() && isac.len() == SEEDS as usize;
        parts.push(format!("radar-only >= ISAC on {dominated}/{}", isac.len()));
    }
    outcome(ok, format!("medians proposed / random / none, {}", parts.join(", ")))
}

fn ris_count(rows: &[RunRecord]) -> Outcome {
    let m: Vec<f64> = [0.0, 1.0, 2.0].iter().map(|&r| median_db(&pick(rows, r, Scheme::Proposed))).collect();
    outcome(m[0] <= m[1] && m[1] <= m[2], format!("median SCNR for R = 0, 1, 2: {:.2}, {:.2}, {:.2} dB", m[0], m[1], m[2]))
}

/// Clutter scatterer at the target position, strong enough to dominate a
/// slow target.
fn masking_scene() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::desk_default();
    cfg.clutter_positions = vec![cfg.target_position];
    cfg.clutter_reflectivity = 1000.0;
    cfg
}

fn masking(rows: &[RunRecord]) -> Outcome {
    let mut good = 0;
    let mut drops = Vec::new();
    for seed in 0..SEEDS {
        let get = |p: f64, s: Scheme| rows.iter().find(|r| r.point == p && r.scheme == s && r.seed == seed).map(|r| r.scnr_db());
        let (Some(n0), Some(n60), Some(p0), Some(p60)) =
            (get(0.0, Scheme::NoRis), get(60.0, Scheme::NoRis), get(0.0, Scheme::Proposed), get(60.0, Scheme::Proposed))
        else {
            continue;
        };
        let (dn, dp) = (n60 - n0, p60 - p0);
        drops.push(format!("{dn:.1}/{dp:.1}"));
        good += (dn >= 10.0 && dp < dn) as usize;
    }
    outcome(good >= 8, format!("{good}/{SEEDS} seeds; drop no-RIS/proposed in dB: {}", drops.join(" ")))
}

fn feasibility(all: &[&[RunRecord]]) -> Outcome {
    let mut accepted = 0;
    let mut bad = 0;
    let mut infeasible = 0;
    for rows in all {
        for r in rows.iter() {
            if r.status == RunStatus::Infeasible {
                infeasible += 1;
                continue;
            }
            accepted += 1;
            if !(r.modulus_deviation <= 1e-6 && r.ci_min_margin >= -1e-5 && r.phi_max <= r.a_max + 1e-9) {
                bad += 1;
            }
        }
    }
    outcome(bad == 0 && accepted > 0, format!("{accepted} accepted runs, {bad} violations, {infeasible} flagged infeasible"))
}

fn qos(rows: &[RunRecord], seeds: &[u64]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for &seed in seeds {
        let chain: Vec<&RunRecord> = rows.iter().filter(|r| r.seed == seed).collect();
        let scnr_ok = chain.windows(2).all(|w| w[1].scnr <= w[0].scnr);
        let ber_ok = chain.windows(2).all(|w| w[1].ber <= w[0].ber);
        ok &= scnr_ok && ber_ok && chain.iter().all(|r| r.status != RunStatus::Infeasible);
        let b: Vec<String> = chain.iter().map(|r| format!("{:.3}", r.ber)).collect();
        parts.push(format!("seed {seed} BER {}", b.join(">")));
    }
    outcome(ok, parts.join("; "))
}

fn roc(rows: &[RunRecord], speeds: &[f64]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for &v in speeds {
        let pd = |s: Scheme| {
            let db = median_db(&pick(rows, v, s));
            detection_probability(10f64.powf(db / 10.0), 1e-4).unwrap()
        };
        let (a, b) = (pd(Scheme::Proposed), pd(Scheme::NoRis));
        ok &= a > b;
        parts.push(format!("{v} m/s {a:.3e} vs {b:.3e}"));
    }
    let exact = detection_probability(4.0, 1e-3).unwrap();
    let mc = detection_probability_monte_carlo(4.0, 1e-3, 1_000_000, 2024);
    ok &= (exact - mc).abs() <= 0.01;
    outcome(ok, format!("P_d at P_fa 1e-4 proposed vs no-RIS: {}; oracle |{exact:.4} - {mc:.4}|", parts.join(", ")))
}

fn main() {
    let t0 = Instant::now();
    let seeds: Vec<u64> = (0..SEEDS).collect();
    let desk = ScenarioConfig::desk_default();
    let all_schemes = vec![Scheme::Proposed, Scheme::RandomRis, Scheme::NoRis, Scheme::RadarOnly];
    let duo = vec![Scheme::Proposed, Scheme::NoRis];

    let power = run(&desk, &spec("power", ExperimentKind::PowerSweep, vec![40.0, 50.0], all_schemes, seeds.clone()));
    let count = run(&desk, &spec("count", ExperimentKind::RisCountSweep, vec![0.0, 1.0, 2.0], vec![Scheme::Proposed], seeds.clone()));
    let mask = run(&masking_scene(), &spec("mask", ExperimentKind::VelocityMagnitudeSweep, vec![0.0, 60.0], duo.clone(), seeds.clone()));
    let qos_seeds = vec![0, 1, 2];
    let mut q = spec("qos", ExperimentKind::QosTradeoff, vec![0.0, 5.0, 10.0, 15.0], vec![Scheme::Proposed], qos_seeds.clone());
    q.ber_trials = 2000;
    let qos_rows = run(&desk, &q);
    let speeds = vec![10.0, 30.0, 50.0];
    let roc_rows = run(&desk, &spec("roc", ExperimentKind::Roc, speeds.clone(), duo, seeds.clone()));

    let criteria: Vec<(&str, Outcome)> = vec![
        ("operator correctness", operators()),
        ("F-identity", f_identity()),
        ("MVDR optimality", mvdr()),
        ("MM domination", domination()),
        ("psi closed form", psi_grid()),
        ("monotone convergence", convergence(&power)),
        ("scheme ordering", ordering(&power)),
        ("RIS-count monotonicity", ris_count(&count)),
        ("low-velocity clutter masking", masking(&mask)),
        ("feasibility", feasibility(&[&power, &count, &mask, &qos_rows, &roc_rows])),
        ("QoS tradeoff", qos(&qos_rows, &qos_seeds)),
        ("ROC sanity", roc(&roc_rows, &speeds)),
    ];
    let mut failed = 0;
    for (i, (name, o)) in criteria.iter().enumerate() {
        println!("{} criterion {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += (!o.pass) as usize;
    }
    println!("{} of {} criteria passed in {:.0} s", criteria.len() - failed, criteria.len(), t0.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
