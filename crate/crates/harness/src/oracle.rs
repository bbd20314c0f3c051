//! Named reference computations printed by `ristap oracle <name>`.

use anyhow::{bail, Result};
use rand::Rng;
use ristap_core::linalg::{cis, CVec, C64};
use ristap_core::scenario::stream_rng;
use ristap_core::waveform::psi_update;

use crate::detection::{detection_probability, detection_probability_monte_carlo};

pub const NAMES: [&str; 2] = ["detection", "psi-grid"];

pub fn run(name: &str) -> Result<String> {
    match name {
        "detection" => detection_table(1_000_000),
        "psi-grid" => Ok(psi_grid_table(50, 10_000)),
        other => bail!("unknown oracle '{other}', expected one of: {}", NAMES.join(", ")),
    }
}

/// Closed-form detection probability against the Monte Carlo threshold test.
pub fn detection_table(trials: usize) -> Result<String> {
    let mut out = String::from("scnr,p_fa,closed_form,monte_carlo,abs_error\n");
    let mut seed = 0;
    for scnr in [0.0, 0.5, 1.0, 4.0, 10.0] {
        for p_fa in [1e-4, 1e-3, 1e-2, 1e-1] {
            let exact = detection_probability(scnr, p_fa)?;
            let mc = detection_probability_monte_carlo(scnr, p_fa, trials, seed);
            seed += 1;
            out += &format!("{scnr},{p_fa:e},{exact:.6},{mc:.6},{:.6}\n", (exact - mc).abs());
        }
    }
    Ok(out)
}

/// Closed-form `ψ` against exhaustive search over a phase grid, one row per
/// input (worst coordinate).
pub fn psi_grid_table(inputs: usize, grid: usize) -> String {
    let mut rng = stream_rng(0, 12);
    let step = std::f64::consts::TAU / grid as f64;
    let mut out = String::from("input,modulus,worst_phase_gap,grid_step\n");
    for t in 0..inputs {
        let n = 6;
        let mut draw = || CVec::from_fn(n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let (x, lambda) = (draw(), draw());
        let rho = rng.random_range(0.1..10.0);
        let b = rng.random_range(0.5..2.0);
        let psi = psi_update(&x, &lambda, rho, b);
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let target = x[j] + lambda[j] / rho;
            let best = (0..grid)
                .map(|k| k as f64 * step)
                .min_by(|a, c| (target - cis(*a) * b).norm_sqr().total_cmp(&(target - cis(*c) * b).norm_sqr()))
                .unwrap();
            let d = (psi[j].arg() - best).rem_euclid(std::f64::consts::TAU);
            worst = worst.max(d.min(std::f64::consts::TAU - d));
        }
        out += &format!("{t},{b:.6},{worst:.3e},{step:.3e}\n");
    }
    out
}
