#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ristap_core::comm::Halfspaces;
use ristap_core::linalg::{kron, CMat, CVec, C64};
use ristap_core::scenario::{synthetic_channels, ChannelSet, SyntheticShape};
use ristap_core::stap::{doppler_matrix, shift_matrix, EchoOperator};
use ristap_core::scenario::Dims;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_cvec(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Uniform point of the disc product `|z_j| ≤ r`.
pub fn rand_in_discs(rng: &mut ChaCha8Rng, n: usize, r: f64) -> CVec {
    CVec::from_fn(n, |_, _| {
        let rad = r * rng.random_range(0.0f64..1.0).sqrt();
        let ph = rng.random_range(0.0..std::f64::consts::TAU);
        C64::from_polar(rad, ph)
    })
}

pub fn tiny_shape() -> SyntheticShape {
    SyntheticShape {
        n_antennas: 2,
        n_pulses: 2,
        n_slots: 2,
        n_elements: 2,
        n_ris: 1,
        n_clutter: 1,
        n_users: 2,
        max_extra_delay: 4,
    }
}

pub fn tiny_channels(seed: u64) -> ChannelSet {
    synthetic_channels(tiny_shape(), seed)
}

/// `Σ_paths D(f_d) ⊗ Jᵀ ⊗ H(φ)` assembled densely.
pub fn dense_operator(op: &EchoOperator, dims: &Dims, pulse_interval: f64, phi: &CVec) -> CMat {
    let mut out = CMat::zeros(dims.nmp(), dims.nml());
    for p in &op.paths {
        let d = doppler_matrix(p.doppler_step / pulse_interval, dims.n_pulses, pulse_interval);
        let j = shift_matrix(p.shift, dims.n_slots, dims.n_snapshots).unwrap();
        let jt = j.transpose().map(|v| C64::new(v, 0.0));
        let h = p.channel(phi, dims.n_elements);
        out += kron(&d, &kron(&jt, &h));
    }
    out
}

pub fn rel_err(a: &CVec, b: &CVec) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Dykstra's alternating projection onto halfspaces ∩ discs.
pub fn dykstra(z: &CVec, hs: &Halfspaces, radii: &[f64]) -> CVec {
    let m = hs.len();
    let mut x = z.clone();
    let mut incr: Vec<CVec> = vec![CVec::zeros(z.len()); m + 1];
    for _ in 0..20_000 {
        let prev = x.clone();
        for i in 0..m {
            let y = &x + &incr[i];
            let row = hs.h.row(i).transpose();
            // Re{hᵀy} = Re{(conj h)ᴴ y}
            let a = row.map(|c| c.conj());
            let val: f64 = (0..y.len()).map(|j| (row[j] * y[j]).re).sum();
            let p = if val >= hs.gamma[i] {
                y.clone()
            } else {
                &y + &a * C64::from((hs.gamma[i] - val) / a.norm_squared())
            };
            incr[i] = &y - &p;
            x = p;
        }
        let y = &x + &incr[m];
        let p = CVec::from_fn(y.len(), |j, _| {
            let r = y[j].norm();
            if r > radii[j] {
                y[j] * (radii[j] / r)
            } else {
                y[j]
            }
        });
        incr[m] = &y - &p;
        x = p;
        if (&x - &prev).norm() < 1e-14 {
            break;
        }
    }
    x
}

/// Accelerated projected gradient on the complex objective.
///
/// Minimizes `xᴴQx + Re{xᴴq} + (ρ/2)‖x - v‖²` over halfspaces ∩ discs.
pub fn projected_gradient(q: &CMat, linear: &CVec, rho: f64, center: &CVec, hs: &Halfspaces, radii: &[f64]) -> CVec {
    let n = linear.len();
    let lmax = q.clone().symmetric_eigenvalues().max().max(0.0);
    let step = 1.0 / (2.0 * lmax + rho);
    let grad = |x: &CVec| -> CVec { q * x * C64::from(2.0) + linear + (x - center) * C64::from(rho) };
    let mut x = dykstra(&CVec::zeros(n), hs, radii);
    let mut y = x.clone();
    let mut t: f64 = 1.0;
    for _ in 0..5000 {
        let x_new = dykstra(&(&y - grad(&y) * C64::from(step)), hs, radii);
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &x_new + (&x_new - &x) * C64::from((t - 1.0) / t_new);
        let change = (&x_new - &x).norm();
        x = x_new;
        t = t_new;
        if change < 1e-10 {
            break;
        }
    }
    x
}

/// `max min_i Re{h_iᵀx}` over two discs by a polar grid followed by local
/// Cartesian grid refinement.
pub fn grid_maxmin(h: &CMat, b: f64) -> f64 {
    let level = |x: [C64; 2]| -> f64 {
        (0..h.nrows()).map(|i| (h[(i, 0)] * x[0] + h[(i, 1)] * x[1]).re).fold(f64::INFINITY, f64::min)
    };
    let mut pts = Vec::new();
    for ir in 0..=24 {
        for ip in 0..96 {
            pts.push(C64::from_polar(b * ir as f64 / 24.0, std::f64::consts::TAU * ip as f64 / 96.0));
        }
    }
    let mut best = (f64::NEG_INFINITY, [C64::new(0.0, 0.0); 2]);
    for &a in &pts {
        for &c in &pts {
            let v = level([a, c]);
            if v > best.0 {
                best = (v, [a, c]);
            }
        }
    }
    let clip = |z: C64| if z.norm() > b { z * (b / z.norm()) } else { z };
    let mut width = 2.0 * b / 24.0;
    for _ in 0..30 {
        let c = best.1;
        let k = 6;
        for i0 in -k..=k {
            for i1 in -k..=k {
                for i2 in -k..=k {
                    for i3 in -k..=k {
                        let s = width / k as f64;
                        let x = [
                            clip(c[0] + C64::new(i0 as f64 * s, i1 as f64 * s)),
                            clip(c[1] + C64::new(i2 as f64 * s, i3 as f64 * s)),
                        ];
                        let v = level(x);
                        if v > best.0 {
                            best = (v, x);
                        }
                    }
                }
            }
        }
        width *= 0.5;
    }
    best.0
}
