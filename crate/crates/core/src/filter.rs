//! MVDR receive filter and the Dinkelbach ratio variable.

use crate::error::{Error, Result};
use crate::linalg::{dotc, norm_sqr, CVec};
use crate::stap::{scnr_from_echoes, StackedModel};

/// Receive filter together with the echoes it was computed from.
#[derive(Debug, Clone)]
pub struct FilterState {
    pub w: CVec,
    pub eta: f64,
    /// Clutter echo `y_c`; the clutter covariance is `y_c y_cᴴ`.
    pub clutter_echo: CVec,
}

/// `(y_c y_cᴴ + σ²I)⁻¹ u` by the rank-one inversion identity.
pub fn apply_inverse_covariance(yc: &CVec, sigma_r2: f64, u: &CVec) -> CVec {
    let ycn = norm_sqr(yc);
    let proj = dotc(yc, u);
    let mut out = u.unscale(sigma_r2);
    if ycn > 0.0 {
        out -= yc * (proj / (sigma_r2 * (sigma_r2 + ycn)));
    }
    out
}

/// MVDR filter from given target and clutter echoes.
pub fn mvdr_from_echoes(yt: &CVec, yc: &CVec, sigma_r2: f64) -> Result<CVec> {
    if norm_sqr(yt) == 0.0 {
        return Err(Error::ZeroTargetResponse);
    }
    let u = apply_inverse_covariance(yc, sigma_r2, yt);
    let n2 = norm_sqr(&u);
    Ok(u.unscale(n2))
}

/// `w = R⁻¹y_t / ‖R⁻¹y_t‖²` with `R = y_c y_cᴴ + σ_r² I`.
pub fn mvdr_filter(model: &StackedModel, x: &CVec, phi: &CVec, sigma_r2: f64) -> Result<CVec> {
    let yt = model.apply_target_operator(x, phi)?;
    let yc = model.apply_clutter_operator(x, phi)?;
    mvdr_from_echoes(&yt, &yc, sigma_r2)
}

/// Optimal ratio variable, equal to the SCNR at `(x, φ, w)`.
pub fn dinkelbach_eta(model: &StackedModel, x: &CVec, phi: &CVec, w: &CVec, sigma_r2: f64) -> Result<f64> {
    crate::stap::scnr(model, x, phi, w, sigma_r2)
}

/// Parametrized objective `|wᴴy_t|² - η(|wᴴy_c|² + σ² wᴴw)`.
pub fn fp_objective(model: &StackedModel, x: &CVec, phi: &CVec, w: &CVec, eta: f64, sigma_r2: f64) -> Result<f64> {
    let yt = model.apply_target_operator(x, phi)?;
    let yc = model.apply_clutter_operator(x, phi)?;
    Ok(dotc(w, &yt).norm_sqr() - eta * (dotc(w, &yc).norm_sqr() + sigma_r2 * norm_sqr(w)))
}

/// Filter and ratio variable in one step.
pub fn update_filter(model: &StackedModel, x: &CVec, phi: &CVec, sigma_r2: f64) -> Result<FilterState> {
    let yt = model.apply_target_operator(x, phi)?;
    let yc = model.apply_clutter_operator(x, phi)?;
    let w = mvdr_from_echoes(&yt, &yc, sigma_r2)?;
    let eta = scnr_from_echoes(&yt, &yc, &w, sigma_r2);
    Ok(FilterState { w, eta, clutter_echo: yc })
}
