//! Detection probability of a coherent known-signal detector in Gaussian
//! noise, used to turn output SCNR into ROC points.

use anyhow::{bail, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use ristap_core::scenario::stream_rng;
use statrs::function::erf::{erfc, erfc_inv};

/// Gaussian tail `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `Q⁻¹(p)`; two Newton steps on `Q` polish the ~1e-10 relative accuracy of
/// `erfc_inv`.
pub fn q_inverse(p: f64) -> f64 {
    let mut x = std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..2 {
        let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if pdf > 0.0 {
            x += (q_function(x) - p) / pdf;
        }
    }
    x
}

/// `P_d = Q(Q⁻¹(P_fa) - √(2·SCNR))` for a linear SCNR.
pub fn detection_probability(scnr: f64, p_fa: f64) -> Result<f64> {
    if !(p_fa > 0.0 && p_fa < 1.0) {
        bail!("p_fa must lie in (0, 1), got {p_fa}");
    }
    if !(scnr >= 0.0) || scnr.is_nan() {
        bail!("scnr must be non-negative, got {scnr}");
    }
    Ok(q_function(q_inverse(p_fa) - (2.0 * scnr).sqrt()))
}

/// Monte Carlo threshold test: the threshold is the empirical `1 - P_fa`
/// quantile of the noise-only statistic, `P_d` the fraction of signal-present
/// trials above it. The statistic is `√2·Re{y}` with `y = √SCNR + n`,
/// `n ~ CN(0, 1)`.
pub fn detection_probability_monte_carlo(scnr: f64, p_fa: f64, trials: usize, seed: u64) -> f64 {
    let mut rng = stream_rng(seed, 11);
    let mut noise: Vec<f64> = (0..trials).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    noise.sort_by(|a, b| a.total_cmp(b));
    let idx = ((1.0 - p_fa) * trials as f64).ceil() as usize;
    let threshold = noise[idx.min(trials - 1)];
    let mean = (2.0 * scnr).sqrt();
    let hits = (0..trials).filter(|_| mean + rng.sample::<f64, _>(StandardNormal) > threshold).count();
    hits as f64 / trials as f64
}
