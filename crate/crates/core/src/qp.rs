//! Convex QP with real halfspaces and per-coordinate disc constraints.
//!
//! Solves `min xᴴQx + Re{xᴴq} + (ρ/2)‖x - v‖²` subject to `Re{h_iᵀx} ≥ γ_i`
//! and `|x_j| ≤ b_j` with an OSQP-style ADMM on the interleaved real
//! embedding. The constraint set is a product of halfspaces and 2-D discs, so
//! its projection is exact and cheap; the linear system is factored once per
//! penalty value.

use nalgebra::Cholesky;

use crate::comm::Halfspaces;
use crate::error::{Error, Result};
use crate::linalg::{dotc, from_real, realify_hermitian, to_real, CMat, CVec, RMat, RVec, C64};

/// Positive semidefinite Hermitian quadratic form.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadraticForm {
    Zero,
    /// `identity·I + Σ_k weights[k]·f_k f_kᴴ` with non-negative weights.
    LowRank { weights: Vec<f64>, factors: Vec<CVec>, identity: f64 },
    Dense(CMat),
}

impl QuadraticForm {
    pub fn dense(&self, n: usize) -> CMat {
        match self {
            QuadraticForm::Zero => CMat::zeros(n, n),
            QuadraticForm::LowRank { weights, factors, identity } => {
                let mut q = CMat::identity(n, n) * C64::from(*identity);
                for (w, f) in weights.iter().zip(factors) {
                    q += (f * f.adjoint()) * C64::from(*w);
                }
                q
            }
            QuadraticForm::Dense(m) => m.clone(),
        }
    }

    /// `xᴴQx`
    pub fn value(&self, x: &CVec) -> f64 {
        match self {
            QuadraticForm::Zero => 0.0,
            QuadraticForm::LowRank { weights, factors, identity } => {
                let mut v = identity * dotc(x, x).re;
                for (w, f) in weights.iter().zip(factors) {
                    v += w * dotc(f, x).norm_sqr();
                }
                v
            }
            QuadraticForm::Dense(m) => dotc(x, &(m * x)).re,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSettings {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub eps_infeasible: f64,
    pub max_iter: usize,
    pub alpha: f64,
    pub sigma: f64,
    pub rho0: f64,
    pub adaptive_rho_interval: usize,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            eps_abs: 1e-8,
            eps_rel: 1e-8,
            eps_infeasible: 1e-6,
            max_iter: 20_000,
            alpha: 1.6,
            sigma: 1e-6,
            rho0: 0.1,
            adaptive_rho_interval: 25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConeQpProblem {
    pub quad: QuadraticForm,
    pub linear: CVec,
    pub prox_weight: f64,
    pub prox_center: CVec,
    pub halfspaces: Halfspaces,
    /// Disc radius per coordinate; `f64::INFINITY` leaves a coordinate free.
    pub radii: Vec<f64>,
    pub settings: QpSettings,
    pub warm_start: Option<CVec>,
    /// Scaled multipliers and penalty from a previous solve of a similar problem.
    pub warm_dual: Option<(RVec, f64)>,
}

impl ConeQpProblem {
    /// Problem with no quadratic, linear or prox term over `n` coordinates.
    pub fn new(n: usize) -> Self {
        Self {
            quad: QuadraticForm::Zero,
            linear: CVec::zeros(n),
            prox_weight: 0.0,
            prox_center: CVec::zeros(n),
            halfspaces: Halfspaces::empty(n),
            radii: vec![f64::INFINITY; n],
            settings: QpSettings::default(),
            warm_start: None,
            warm_dual: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, x: &CVec) -> f64 {
        self.quad.value(x) + dotc(x, &self.linear).re + 0.5 * self.prox_weight * (x - &self.prox_center).norm_squared()
    }

    /// Largest violation of any constraint at `x` in original units.
    pub fn violation(&self, x: &CVec) -> f64 {
        let mut v: f64 = 0.0;
        for m in self.halfspaces.margins(x).iter() {
            v = v.max(-m);
        }
        for (z, b) in x.iter().zip(&self.radii) {
            v = v.max(z.norm() - b);
        }
        v.max(0.0)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.prox_center.len() != n || self.radii.len() != n || self.halfspaces.h.ncols() != n {
            return Err(Error::Dimension("QP components disagree on the variable length".into()));
        }
        if self.halfspaces.h.nrows() != self.halfspaces.gamma.len() {
            return Err(Error::Dimension("halfspace rows and thresholds differ in count".into()));
        }
        if self.radii.iter().any(|&b| !(b > 0.0)) {
            return Err(Error::InvalidArgument("disc radii must be positive".into()));
        }
        if self.prox_weight < 0.0 {
            return Err(Error::InvalidArgument("prox weight must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    MaxIter,
    InfeasibleDetected,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub point: CVec,
    pub objective: f64,
    /// Residuals of the normalized problem.
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Constraint violation in original units.
    pub max_violation: f64,
    pub iterations: usize,
    pub status: QpStatus,
    /// Scaled multipliers and final penalty, reusable as `warm_dual`.
    pub dual: (RVec, f64),
}

fn inf_norm(v: &RVec) -> f64 {
    v.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

struct Scaled {
    p: RMat,
    c: RVec,
    h: RMat,
    gamma: RVec,
    radii: Vec<f64>,
    sx: f64,
    /// Rows whose coefficients vanish; they are satisfied iff their threshold is ≤ 0.
    trivially_infeasible: bool,
}

fn scale(problem: &ConeQpProblem) -> Scaled {
    let n = problem.dim();
    let n2 = 2 * n;
    let sx = problem.radii.iter().cloned().filter(|b| b.is_finite()).fold(0.0, f64::max);
    let sx = if sx > 0.0 { sx } else { 1.0 };

    let mut p = realify_hermitian(&problem.quad.dense(n)) * 2.0;
    for i in 0..n2 {
        p[(i, i)] += problem.prox_weight;
    }
    let c = to_real(&problem.linear) - to_real(&problem.prox_center) * problem.prox_weight;
    p *= sx * sx;
    let c = c * sx;
    let mag = p.iter().chain(c.iter()).fold(0.0f64, |a, &b| a.max(b.abs()));
    let cobj = if mag > 0.0 { 1.0 / mag } else { 1.0 };
    let p = p * cobj;
    let c = c * cobj;

    let mut rows = Vec::new();
    let mut gam = Vec::new();
    let mut trivially_infeasible = false;
    for i in 0..problem.halfspaces.len() {
        let mut row = RVec::zeros(n2);
        for j in 0..n {
            let h = problem.halfspaces.h[(i, j)];
            row[2 * j] = h.re * sx;
            row[2 * j + 1] = -h.im * sx;
        }
        let norm = row.norm();
        let g = problem.halfspaces.gamma[i];
        if norm == 0.0 {
            if g > 0.0 {
                trivially_infeasible = true;
            }
            continue;
        }
        rows.push(row / norm);
        gam.push(g / norm);
    }
    let h = RMat::from_fn(rows.len(), n2, |i, j| rows[i][j]);
    Scaled {
        p,
        c,
        h,
        gamma: RVec::from_vec(gam),
        radii: problem.radii.iter().map(|b| b / sx).collect(),
        sx,
        trivially_infeasible,
    }
}

fn project(z: &mut RVec, mh: usize, gamma: &RVec, radii: &[f64]) {
    for i in 0..mh {
        if z[i] < gamma[i] {
            z[i] = gamma[i];
        }
    }
    for (j, &b) in radii.iter().enumerate() {
        let (a, c) = (mh + 2 * j, mh + 2 * j + 1);
        let r = (z[a] * z[a] + z[c] * z[c]).sqrt();
        if r > b {
            let s = b / r;
            z[a] *= s;
            z[c] *= s;
        }
    }
}

/// Support function of the constraint set at `dy`; `None` when unbounded.
fn support(dy: &RVec, mh: usize, gamma: &RVec, radii: &[f64], tol: f64) -> Option<f64> {
    let mut s = 0.0;
    for i in 0..mh {
        if dy[i] > tol {
            return None;
        }
        s += gamma[i] * dy[i].min(0.0);
    }
    for (j, &b) in radii.iter().enumerate() {
        let r = dy[mh + 2 * j].hypot(dy[mh + 2 * j + 1]);
        if b.is_infinite() {
            if r > tol {
                return None;
            }
        } else {
            s += b * r;
        }
    }
    Some(s)
}

struct Kkt {
    chol: Cholesky<f64, nalgebra::Dyn>,
}

fn factor(p: &RMat, hth: &RMat, sigma: f64, rho: f64) -> Result<Kkt> {
    let n2 = p.nrows();
    let mut k = p + hth * rho;
    for i in 0..n2 {
        k[(i, i)] += sigma + rho;
    }
    Cholesky::new(k).map(|chol| Kkt { chol }).ok_or_else(|| Error::InvalidArgument("QP matrix is not positive definite".into()))
}

pub fn solve_cone_qp(problem: &ConeQpProblem) -> Result<QpSolution> {
    problem.validate()?;
    let st = problem.settings;
    let sc = scale(problem);
    let n = problem.dim();
    let n2 = 2 * n;
    let mh = sc.h.nrows();
    let m = mh + n2;

    let a_mul = |x: &RVec| -> RVec {
        let hx = &sc.h * x;
        RVec::from_fn(m, |i, _| if i < mh { hx[i] } else { x[i - mh] })
    };
    let at_mul = |y: &RVec| -> RVec {
        let yh = y.rows(0, mh);
        let mut out = sc.h.tr_mul(&yh);
        out += y.rows(mh, n2);
        out
    };

    let mut x = match &problem.warm_start {
        Some(w) if w.len() == n => to_real(w) / sc.sx,
        _ => RVec::zeros(n2),
    };
    let mut z = a_mul(&x);
    project(&mut z, mh, &sc.gamma, &sc.radii);
    let (mut y, mut rho) = match &problem.warm_dual {
        Some((y0, r0)) if y0.len() == m && *r0 > 0.0 => (y0.clone(), *r0),
        _ => (RVec::zeros(m), st.rho0),
    };

    let hth = sc.h.tr_mul(&sc.h);
    let mut kkt = factor(&sc.p, &hth, st.sigma, rho)?;

    let mut status = QpStatus::MaxIter;
    let mut iterations = st.max_iter;
    let mut r_prim = f64::INFINITY;
    let mut r_dual = f64::INFINITY;

    if sc.trivially_infeasible {
        status = QpStatus::InfeasibleDetected;
        iterations = 0;
    } else {
        for it in 1..=st.max_iter {
            let mut rhs = &x * st.sigma - &sc.c;
            rhs += at_mul(&(&z * rho - &y));
            let xt = kkt.chol.solve(&rhs);
            let zt = a_mul(&xt);
            let x_new = &xt * st.alpha + &x * (1.0 - st.alpha);
            let z_relax = &zt * st.alpha + &z * (1.0 - st.alpha);
            let mut z_new = &z_relax + &y / rho;
            project(&mut z_new, mh, &sc.gamma, &sc.radii);
            let y_new = &y + (&z_relax - &z_new) * rho;
            let dy = &y_new - &y;
            x = x_new;
            z = z_new;
            y = y_new;

            let ax = a_mul(&x);
            let px = &sc.p * &x;
            let aty = at_mul(&y);
            r_prim = inf_norm(&(&ax - &z));
            r_dual = inf_norm(&(&px + &sc.c + &aty));
            let tol_p = st.eps_abs + st.eps_rel * inf_norm(&ax).max(inf_norm(&z));
            let tol_d = st.eps_abs + st.eps_rel * inf_norm(&px).max(inf_norm(&aty)).max(inf_norm(&sc.c));
            if r_prim <= tol_p && r_dual <= tol_d {
                status = QpStatus::Optimal;
                iterations = it;
                break;
            }

            let dy_norm = inf_norm(&dy);
            if dy_norm > 0.0 {
                let atdy = inf_norm(&at_mul(&dy));
                let tol = st.eps_infeasible * dy_norm;
                if atdy <= tol {
                    if let Some(s) = support(&dy, mh, &sc.gamma, &sc.radii, tol) {
                        if s < -tol {
                            status = QpStatus::InfeasibleDetected;
                            iterations = it;
                            break;
                        }
                    }
                }
            }

            if st.adaptive_rho_interval > 0 && it % st.adaptive_rho_interval == 0 {
                let np = r_prim / inf_norm(&ax).max(inf_norm(&z)).max(1e-30);
                let nd = r_dual / inf_norm(&px).max(inf_norm(&aty)).max(inf_norm(&sc.c)).max(1e-30);
                let ratio = (np / nd.max(1e-30)).sqrt();
                let new_rho = (rho * ratio).clamp(1e-6, 1e6);
                if new_rho > 5.0 * rho || new_rho < rho / 5.0 {
                    rho = new_rho;
                    kkt = factor(&sc.p, &hth, st.sigma, rho)?;
                }
            }
        }
    }

    let mut point = from_real(&(x * sc.sx));
    for (v, &b) in point.iter_mut().zip(&problem.radii) {
        let r = v.norm();
        if r > b {
            *v *= b / r;
        }
    }
    Ok(QpSolution {
        objective: problem.objective(&point),
        max_violation: problem.violation(&point),
        point,
        primal_residual: r_prim,
        dual_residual: r_dual,
        iterations,
        status,
        dual: (y, rho),
    })
}

#[derive(Debug, Clone)]
pub struct MaxMinSolution {
    pub x: CVec,
    /// Smallest `Re{h_iᵀx}` achieved by `x`.
    pub delta: f64,
    pub bisection_steps: usize,
}

/// `max_x min_i Re{h_iᵀx}` subject to `|x_j| ≤ radius`, by bisection on the
/// level with each feasibility check delegated to [`solve_cone_qp`].
pub fn solve_maxmin_margin(h: &CMat, radius: f64) -> Result<MaxMinSolution> {
    solve_maxmin_margin_with(h, radius, 1e-6, 60)
}

pub fn solve_maxmin_margin_with(h: &CMat, radius: f64, rel_tol: f64, max_steps: usize) -> Result<MaxMinSolution> {
    if h.nrows() == 0 {
        return Err(Error::InvalidArgument("max-min margin needs at least one constraint".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument("disc radius must be positive".into()));
    }
    let n = h.ncols();
    let min_level = |x: &CVec| -> f64 { (h * x).iter().map(|z| z.re).fold(f64::INFINITY, f64::min) };

    let mut lo = 0.0;
    let mut best = CVec::zeros(n);
    let mut hi = h.row_iter().map(|r| radius * r.iter().map(|z| z.norm()).sum::<f64>()).fold(f64::INFINITY, f64::min);
    // x = 0 always reaches level 0; feasibility is judged with a slack tied to the initial bracket
    let slack = 1e-5 * hi.abs();
    let mut steps = 0;
    while hi - lo > rel_tol * hi.abs().max(f64::MIN_POSITIVE) && steps < max_steps {
        steps += 1;
        let mid = 0.5 * (lo + hi);
        let mut p = ConeQpProblem::new(n);
        p.prox_weight = 1.0;
        p.prox_center = best.clone();
        p.halfspaces = Halfspaces { h: h.clone(), gamma: RVec::from_element(h.nrows(), mid) };
        p.radii = vec![radius; n];
        p.warm_start = Some(best.clone());
        p.settings.max_iter = 4000;
        let sol = solve_cone_qp(&p)?;
        if sol.status != QpStatus::InfeasibleDetected && min_level(&sol.point) >= mid - slack {
            lo = mid;
            best = sol.point;
        } else {
            hi = mid;
        }
    }
    let delta = min_level(&best);
    Ok(MaxMinSolution { x: best, delta, bisection_steps: steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_center_is_returned() {
        let mut p = ConeQpProblem::new(2);
        p.prox_weight = 1.0;
        p.prox_center = CVec::from_vec(vec![C64::new(0.2, 0.1), C64::new(-0.3, 0.0)]);
        p.radii = vec![1.0, 1.0];
        let s = solve_cone_qp(&p).unwrap();
        assert_eq!(s.status, QpStatus::Optimal);
        assert!((&s.point - &p.prox_center).norm() < 1e-6);
    }

    #[test]
    fn radial_projection() {
        // ‖x - 2‖² = xᴴx - 2·Re{xᴴ·2} + 4
        let mut p = ConeQpProblem::new(1);
        p.quad = QuadraticForm::LowRank { weights: vec![], factors: vec![], identity: 1.0 };
        p.linear = CVec::from_element(1, C64::new(-4.0, 0.0));
        p.radii = vec![1.0];
        let s = solve_cone_qp(&p).unwrap();
        assert!((s.point[0] - C64::new(1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn infeasible_detected() {
        let mut p = ConeQpProblem::new(1);
        p.prox_weight = 1.0;
        p.halfspaces = Halfspaces {
            h: CMat::from_element(1, 1, C64::new(1.0, 0.0)),
            gamma: RVec::from_element(1, 2.0),
        };
        p.radii = vec![1.0];
        let s = solve_cone_qp(&p).unwrap();
        assert_eq!(s.status, QpStatus::InfeasibleDetected);
    }

    #[test]
    fn maxmin_single_constraint() {
        let h = CMat::from_row_slice(1, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let s = solve_maxmin_margin(&h, 1.0).unwrap();
        assert!((s.delta - 1.0).abs() < 1e-5);
        assert!((s.x[0] - C64::new(1.0, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn maxmin_opposing_constraints() {
        let h = CMat::from_row_slice(2, 1, &[C64::new(0.0, 1.0), C64::new(0.0, -1.0)]);
        let s = solve_maxmin_margin(&h, 1.0).unwrap();
        assert!(s.delta.abs() < 1e-6);
        assert!(s.x[0].im.abs() < 1e-6);
    }
}
