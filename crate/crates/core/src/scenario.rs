//! Scene configuration, geometry, and random channel realizations.
//!
//! All positions live in a 2-D plane with the base station (BS) array along the
//! x axis and broadside along +y. RIS arrays share that orientation, so every
//! angle is measured as `atan2(dx, dy)` from the observing array.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, CMat, CVec, C64};
use crate::stap::{steering_bs, steering_ris};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub type Point = [f64; 2];

/// Path-loss exponents for every channel family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossExponents {
    pub target_direct: f64,
    pub target_indirect: f64,
    pub clutter_direct: f64,
    pub clutter_indirect: f64,
    pub bs_user: f64,
    pub ris_user: f64,
    pub bs_ris: f64,
}

impl Default for PathLossExponents {
    fn default() -> Self {
        Self {
            target_direct: 2.7,
            target_indirect: 2.3,
            clutter_direct: 2.7,
            clutter_indirect: 2.3,
            bs_user: 3.0,
            ris_user: 2.8,
            bs_ris: 2.0,
        }
    }
}

/// Fading law of the BS→RIS channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RisChannelModel {
    /// iid circular Gaussian entries scaled by the path loss.
    #[default]
    Rayleigh,
    /// Deterministic rank-one `b(θ) a(θ)ᵀ` line-of-sight channel.
    LineOfSight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub bs_position: Point,
    pub n_tx_antennas: usize,
    pub n_users: usize,
    pub n_ris: usize,
    pub n_ris_elements: usize,
    pub n_pulses: usize,
    pub n_slots: usize,
    pub prf_hz: f64,
    pub carrier_freq_hz: f64,
    pub sampling_interval_s: f64,
    pub total_power_w: f64,
    pub a_max: f64,
    /// Per-user SINR requirement Γ in dB (applied to every user).
    pub qos_gamma_db: f64,
    pub noise_power_radar_dbm: f64,
    pub noise_power_user_dbm: f64,
    pub psk_order: usize,
    pub target_position: Point,
    pub target_velocity: Point,
    /// Amplitude reflectivity of the target (every path).
    #[serde(default = "one")]
    pub target_reflectivity: f64,
    /// Amplitude reflectivity of each clutter scatterer.
    #[serde(default = "one")]
    pub clutter_reflectivity: f64,
    pub ris_positions: Vec<Point>,
    pub clutter_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    #[serde(default)]
    pub pathloss_exponents: PathLossExponents,
    #[serde(default = "default_pl_ref_db")]
    pub pathloss_ref_db: f64,
    #[serde(default = "one")]
    pub pathloss_ref_distance_m: f64,
    #[serde(default)]
    pub ris_channel_model: RisChannelModel,
    pub rng_seed: u64,
}

fn one() -> f64 {
    1.0
}

fn default_pl_ref_db() -> f64 {
    -30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl ScenarioConfig {
    /// Full-size scene: 8 antennas, 3 users, two 25-element RISs, 8×8 pulses/slots.
    pub fn paper_default() -> Self {
        Self {
            bs_position: [0.0, 0.0],
            n_tx_antennas: 8,
            n_users: 3,
            n_ris: 2,
            n_ris_elements: 25,
            n_pulses: 8,
            n_slots: 8,
            prf_hz: 1000.0,
            carrier_freq_hz: 2.4e9,
            sampling_interval_s: 1e-7,
            total_power_w: 50.0,
            a_max: 5.0,
            qos_gamma_db: 10.0,
            noise_power_radar_dbm: -80.0,
            noise_power_user_dbm: -80.0,
            psk_order: 4,
            target_position: [0.0, 50.0],
            target_velocity: [0.0, 30.0],
            target_reflectivity: 1.0,
            clutter_reflectivity: 1.0,
            ris_positions: vec![[-12.0, 45.0], [12.0, 45.0]],
            clutter_positions: vec![[6.0, 55.0], [-4.0, 53.0], [3.0, 46.0]],
            user_positions: vec![[-7.0, 63.5], [-3.0, 66.0], [-5.5, 68.0]],
            pathloss_exponents: PathLossExponents::default(),
            pathloss_ref_db: -30.0,
            pathloss_ref_distance_m: 1.0,
            ris_channel_model: RisChannelModel::Rayleigh,
            rng_seed: 1,
        }
    }

    /// Reduced scene for fast runs: N=4, K=2, M=2, L=4, Nr=8, R=2.
    pub fn desk_default() -> Self {
        let mut cfg = Self::paper_default();
        cfg.n_tx_antennas = 4;
        cfg.n_users = 2;
        cfg.user_positions.truncate(2);
        cfg.n_pulses = 2;
        cfg.n_slots = 4;
        cfg.n_ris_elements = 8;
        cfg
    }

    pub fn qos_gamma_linear(&self) -> f64 {
        db_to_linear(self.qos_gamma_db)
    }

    /// Radar receiver noise power in watts.
    pub fn noise_power_radar(&self) -> f64 {
        db_to_linear(self.noise_power_radar_dbm - 30.0)
    }

    /// Per-user noise power in watts.
    pub fn noise_power_user(&self) -> f64 {
        db_to_linear(self.noise_power_user_dbm - 30.0)
    }

    pub fn pathloss_ref_linear(&self) -> f64 {
        db_to_linear(self.pathloss_ref_db)
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    pub fn pulse_interval(&self) -> f64 {
        1.0 / self.prf_hz
    }

    /// Keep only the first `count` RISs.
    pub fn with_ris_count(mut self, count: usize) -> Self {
        self.ris_positions.truncate(count);
        self.n_ris = self.ris_positions.len();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n_tx_antennas == 0 {
            return bad("n_tx_antennas must be at least 1");
        }
        if self.n_users == 0 {
            return bad("n_users must be at least 1");
        }
        if self.n_ris_elements == 0 {
            return bad("n_ris_elements must be at least 1");
        }
        if self.n_pulses == 0 || self.n_slots == 0 {
            return bad("n_pulses and n_slots must be at least 1");
        }
        if self.user_positions.len() != self.n_users {
            return bad("user_positions length must equal n_users");
        }
        if self.ris_positions.len() != self.n_ris {
            return bad("ris_positions length must equal n_ris");
        }
        let positive = [
            ("total_power_w", self.total_power_w),
            ("a_max", self.a_max),
            ("prf_hz", self.prf_hz),
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("sampling_interval_s", self.sampling_interval_s),
            ("pathloss_ref_distance_m", self.pathloss_ref_distance_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.target_reflectivity >= 0.0 && self.clutter_reflectivity >= 0.0) {
            return bad("reflectivities must be non-negative");
        }
        if self.psk_order < 2 || !self.psk_order.is_power_of_two() {
            return bad("psk_order must be a power of two and at least 2");
        }
        if self.n_slots as f64 * self.sampling_interval_s > self.pulse_interval() {
            return bad("n_slots * sampling_interval_s exceeds the pulse repetition interval");
        }
        for v in [self.qos_gamma_db, self.noise_power_radar_dbm, self.noise_power_user_dbm, self.pathloss_ref_db] {
            if !v.is_finite() {
                return bad("dB quantities must be finite");
            }
        }
        Ok(())
    }
}

/// Amplitude gain `√(C0 (d0/d)^ι)` of one propagation leg.
pub fn path_loss(d: f64, exponent: f64, c0: f64, d0: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::NonPositiveDistance(d));
    }
    Ok((c0 * (d0 / d).powf(exponent)).sqrt())
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Angle of `to` seen from an array at `from`, relative to broadside (+y).
pub fn angle_from(from: Point, to: Point) -> f64 {
    (to[0] - from[0]).atan2(to[1] - from[1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub theta_target: f64,
    pub theta_target_at_ris: Vec<f64>,
    pub theta_clutter: Vec<f64>,
    /// `[q][r]`
    pub theta_clutter_at_ris: Vec<Vec<f64>>,
    pub theta_ris_at_bs: Vec<f64>,
    pub theta_bs_at_ris: Vec<f64>,
    pub dist_bs_target: f64,
    pub dist_target_ris: Vec<f64>,
    pub dist_bs_ris: Vec<f64>,
    pub dist_bs_clutter: Vec<f64>,
    /// `[q][r]`
    pub dist_clutter_ris: Vec<Vec<f64>>,
    pub dist_bs_user: Vec<f64>,
    /// `[r][k]`
    pub dist_ris_user: Vec<Vec<f64>>,
}

/// Integer fast-time delays of every echo path, in slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayTable {
    pub target_direct: usize,
    /// `[r][i]` for the three NLoS compositions.
    pub target_indirect: Vec<[usize; 3]>,
    pub clutter_direct: Vec<usize>,
    /// `[q][r][i]`
    pub clutter_indirect: Vec<Vec<[usize; 3]>>,
}

impl DelayTable {
    fn all(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.target_direct)
            .chain(self.target_indirect.iter().flatten().copied())
            .chain(self.clutter_direct.iter().copied())
            .chain(self.clutter_indirect.iter().flatten().flatten().copied())
    }

    pub fn min(&self) -> usize {
        self.all().min().unwrap_or(0)
    }

    pub fn max(&self) -> usize {
        self.all().max().unwrap_or(0)
    }

    /// Snapshot count covering every echo of an `slots`-long pulse.
    pub fn snapshots(&self, slots: usize) -> usize {
        slots + self.max() - self.min()
    }

    pub fn without_ris(&self) -> Self {
        Self {
            target_direct: self.target_direct,
            target_indirect: Vec::new(),
            clutter_direct: self.clutter_direct.clone(),
            clutter_indirect: self.clutter_direct.iter().map(|_| Vec::new()).collect(),
        }
    }
}

/// Doppler angular frequencies (rad/s) of the target paths. Clutter is static.
#[derive(Debug, Clone, PartialEq)]
pub struct DopplerTable {
    pub direct: f64,
    /// `[r][i]`
    pub indirect: Vec<[f64; 3]>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub geometry: Geometry,
    pub delays: DelayTable,
    pub dopplers: DopplerTable,
    pub snapshots: usize,
}

pub fn build_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let bs = config.bs_position;
    let tgt = config.target_position;
    let check = |d: f64, what: String| -> Result<f64> {
        if d > 0.0 {
            Ok(d)
        } else {
            Err(Error::DegenerateGeometry(format!("{what} are coincident")))
        }
    };

    let dist_bs_target = check(dist(bs, tgt), "BS and target".into())?;
    let mut dist_target_ris = Vec::new();
    let mut dist_bs_ris = Vec::new();
    for (r, &p) in config.ris_positions.iter().enumerate() {
        dist_target_ris.push(check(dist(tgt, p), format!("target and RIS {r}"))?);
        dist_bs_ris.push(check(dist(bs, p), format!("BS and RIS {r}"))?);
    }
    let mut dist_bs_clutter = Vec::new();
    let mut dist_clutter_ris = Vec::new();
    for (q, &c) in config.clutter_positions.iter().enumerate() {
        dist_bs_clutter.push(check(dist(bs, c), format!("BS and clutter {q}"))?);
        let mut row = Vec::new();
        for (r, &p) in config.ris_positions.iter().enumerate() {
            row.push(check(dist(c, p), format!("clutter {q} and RIS {r}"))?);
        }
        dist_clutter_ris.push(row);
    }
    let mut dist_bs_user = Vec::new();
    for (k, &u) in config.user_positions.iter().enumerate() {
        dist_bs_user.push(check(dist(bs, u), format!("BS and user {k}"))?);
    }
    let mut dist_ris_user = Vec::new();
    for (r, &p) in config.ris_positions.iter().enumerate() {
        let mut row = Vec::new();
        for (k, &u) in config.user_positions.iter().enumerate() {
            row.push(check(dist(p, u), format!("RIS {r} and user {k}"))?);
        }
        dist_ris_user.push(row);
    }

    let geometry = Geometry {
        theta_target: angle_from(bs, tgt),
        theta_target_at_ris: config.ris_positions.iter().map(|&p| angle_from(p, tgt)).collect(),
        theta_clutter: config.clutter_positions.iter().map(|&c| angle_from(bs, c)).collect(),
        theta_clutter_at_ris: config
            .clutter_positions
            .iter()
            .map(|&c| config.ris_positions.iter().map(|&p| angle_from(p, c)).collect())
            .collect(),
        theta_ris_at_bs: config.ris_positions.iter().map(|&p| angle_from(bs, p)).collect(),
        theta_bs_at_ris: config.ris_positions.iter().map(|&p| angle_from(p, bs)).collect(),
        dist_bs_target,
        dist_target_ris,
        dist_bs_ris,
        dist_bs_clutter,
        dist_clutter_ris,
        dist_bs_user,
        dist_ris_user,
    };
    let delays = path_delays_for(config, &geometry);
    let dopplers = path_dopplers(config);
    let snapshots = delays.snapshots(config.n_slots);
    Ok(Scenario { config: config.clone(), geometry, delays, dopplers, snapshots })
}

/// Delay in slots of a path with total length `length` metres.
pub fn quantize_delay(length: f64, ts: f64) -> usize {
    (length / (SPEED_OF_LIGHT * ts)).round().max(0.0) as usize
}

/// Round-trip lengths of the three NLoS compositions through one RIS, given the
/// BS–scatterer, scatterer–RIS and RIS–BS leg lengths.
pub fn indirect_lengths(bs_s: f64, s_ris: f64, ris_bs: f64) -> [f64; 3] {
    [bs_s + s_ris + ris_bs, ris_bs + s_ris + bs_s, 2.0 * ris_bs + 2.0 * s_ris]
}

fn path_delays_for(config: &ScenarioConfig, g: &Geometry) -> DelayTable {
    let ts = config.sampling_interval_s;
    let q = |len: f64| quantize_delay(len, ts);
    let target_indirect = (0..config.n_ris)
        .map(|r| indirect_lengths(g.dist_bs_target, g.dist_target_ris[r], g.dist_bs_ris[r]).map(q))
        .collect();
    let clutter_indirect = (0..config.clutter_positions.len())
        .map(|c| {
            (0..config.n_ris)
                .map(|r| indirect_lengths(g.dist_bs_clutter[c], g.dist_clutter_ris[c][r], g.dist_bs_ris[r]).map(q))
                .collect()
        })
        .collect();
    DelayTable {
        target_direct: q(2.0 * g.dist_bs_target),
        target_indirect,
        clutter_direct: g.dist_bs_clutter.iter().map(|&d| q(2.0 * d)).collect(),
        clutter_indirect,
    }
}

pub fn path_delays(scenario: &Scenario) -> DelayTable {
    path_delays_for(&scenario.config, &scenario.geometry)
}

/// Bistatic Doppler of every target path from the closing speeds toward the
/// BS and each RIS.
pub fn path_dopplers(config: &ScenarioConfig) -> DopplerTable {
    let k = 2.0 * std::f64::consts::PI / config.wavelength();
    let t = config.target_position;
    let v = config.target_velocity;
    let closing = |to: Point| {
        let d = dist(t, to);
        if d == 0.0 {
            0.0
        } else {
            (v[0] * (to[0] - t[0]) + v[1] * (to[1] - t[1])) / d
        }
    };
    let vb = closing(config.bs_position);
    let indirect = config
        .ris_positions
        .iter()
        .map(|&p| {
            let vr = closing(p);
            [k * (vb + vr), k * (vb + vr), k * 2.0 * vr]
        })
        .collect();
    DopplerTable { direct: k * 2.0 * vb, indirect }
}

/// Complex path gains of every echo path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGains {
    pub target_direct: C64,
    /// `[r][i]`
    pub target_indirect: Vec<[C64; 3]>,
    pub clutter_direct: Vec<C64>,
    /// `[q][r][i]`
    pub clutter_indirect: Vec<Vec<[C64; 3]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n_antennas: usize,
    pub n_ris: usize,
    pub n_elements: usize,
    pub n_pulses: usize,
    pub n_slots: usize,
    pub n_snapshots: usize,
    pub n_users: usize,
}

impl Dims {
    /// `N·M·L`, the waveform length.
    pub fn nml(&self) -> usize {
        self.n_antennas * self.n_pulses * self.n_slots
    }

    /// `N·M·P`, the stacked echo length.
    pub fn nmp(&self) -> usize {
        self.n_antennas * self.n_pulses * self.n_snapshots
    }

    /// `M·L`, number of transmitted symbol slots.
    pub fn ml(&self) -> usize {
        self.n_pulses * self.n_slots
    }

    /// `R·Nr`, length of the stacked reflection vector.
    pub fn rnr(&self) -> usize {
        self.n_ris * self.n_elements
    }
}

/// One random channel realization together with the geometry it was drawn for.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub dims: Dims,
    pub pulse_interval: f64,
    /// BS→RIS, one `Nr×N` matrix per RIS.
    pub g: Vec<CMat>,
    /// BS→user, one length-`N` vector per user.
    pub h_d: Vec<CVec>,
    /// RIS→user, `[r][k]` vectors of length `Nr`.
    pub h_r: Vec<Vec<CVec>>,
    pub gains: PathGains,
    pub geometry: Geometry,
    pub delays: DelayTable,
    pub dopplers: DopplerTable,
}

impl ChannelSet {
    /// The same realization with every RIS removed.
    pub fn without_ris(&self) -> ChannelSet {
        let delays = self.delays.without_ris();
        let mut dims = self.dims;
        dims.n_ris = 0;
        dims.n_snapshots = delays.snapshots(dims.n_slots);
        let mut geometry = self.geometry.clone();
        geometry.theta_target_at_ris.clear();
        geometry.theta_ris_at_bs.clear();
        geometry.theta_bs_at_ris.clear();
        geometry.dist_target_ris.clear();
        geometry.dist_bs_ris.clear();
        geometry.dist_ris_user.clear();
        for row in geometry.theta_clutter_at_ris.iter_mut() {
            row.clear();
        }
        for row in geometry.dist_clutter_ris.iter_mut() {
            row.clear();
        }
        ChannelSet {
            dims,
            pulse_interval: self.pulse_interval,
            g: Vec::new(),
            h_d: self.h_d.clone(),
            h_r: Vec::new(),
            gains: PathGains {
                target_direct: self.gains.target_direct,
                target_indirect: Vec::new(),
                clutter_direct: self.gains.clutter_direct.clone(),
                clutter_indirect: self.gains.clutter_direct.iter().map(|_| Vec::new()).collect(),
            },
            geometry,
            delays,
            dopplers: DopplerTable { direct: self.dopplers.direct, indirect: Vec::new() },
        }
    }
}

// Independent generator streams so that, e.g., removing RISs leaves the direct
// channels of the same seed untouched.
const STREAM_BS_USER: u64 = 1;
const STREAM_BS_RIS: u64 = 2;
const STREAM_RIS_USER: u64 = 3;
const STREAM_DIRECT_PHASE: u64 = 4;
const STREAM_INDIRECT_PHASE: u64 = 5;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Circularly-symmetric complex Gaussian sample with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    cis(rng.random_range(0.0..(2.0 * std::f64::consts::PI)))
}

pub fn sample_channels(scenario: &Scenario, seed: u64) -> ChannelSet {
    let cfg = &scenario.config;
    let g_ = &scenario.geometry;
    let pl = &cfg.pathloss_exponents;
    let c0 = cfg.pathloss_ref_linear();
    let d0 = cfg.pathloss_ref_distance_m;
    // distances were validated positive when the scenario was built
    let amp = |d: f64, e: f64| path_loss(d, e, c0, d0).expect("validated distance");
    let n = cfg.n_tx_antennas;
    let nr = cfg.n_ris_elements;

    let mut rng = stream_rng(seed, STREAM_BS_USER);
    let h_d = g_
        .dist_bs_user
        .iter()
        .map(|&d| {
            let s = amp(d, pl.bs_user);
            CVec::from_fn(n, |_, _| complex_gaussian(&mut rng) * s)
        })
        .collect();

    let mut rng = stream_rng(seed, STREAM_BS_RIS);
    let g = (0..cfg.n_ris)
        .map(|r| {
            let s = amp(g_.dist_bs_ris[r], pl.bs_ris);
            match cfg.ris_channel_model {
                RisChannelModel::Rayleigh => CMat::from_fn(nr, n, |_, _| complex_gaussian(&mut rng) * s),
                RisChannelModel::LineOfSight => {
                    let b = steering_ris(g_.theta_bs_at_ris[r], nr);
                    let a = steering_bs(g_.theta_ris_at_bs[r], n);
                    (b * a.transpose()) * C64::from(s)
                }
            }
        })
        .collect();

    let mut rng = stream_rng(seed, STREAM_RIS_USER);
    let h_r = (0..cfg.n_ris)
        .map(|r| {
            g_.dist_ris_user[r]
                .iter()
                .map(|&d| {
                    let s = amp(d, pl.ris_user);
                    CVec::from_fn(nr, |_, _| complex_gaussian(&mut rng) * s)
                })
                .collect()
        })
        .collect();

    let mut rng = stream_rng(seed, STREAM_DIRECT_PHASE);
    let target_direct =
        random_phase(&mut rng) * cfg.target_reflectivity * amp(g_.dist_bs_target, pl.target_direct).powi(2);
    let clutter_direct = g_
        .dist_bs_clutter
        .iter()
        .map(|&d| random_phase(&mut rng) * cfg.clutter_reflectivity * amp(d, pl.clutter_direct).powi(2))
        .collect();

    // Each NLoS gain covers the legs not already carried by G_r.
    let mut rng = stream_rng(seed, STREAM_INDIRECT_PHASE);
    let indirect = |rng: &mut ChaCha8Rng, bs_s: f64, s_ris: f64, e: f64, refl: f64| -> [C64; 3] {
        let single = refl * amp(bs_s, e) * amp(s_ris, e);
        let double = refl * amp(s_ris, e).powi(2);
        [random_phase(rng) * single, random_phase(rng) * single, random_phase(rng) * double]
    };
    let target_indirect = (0..cfg.n_ris)
        .map(|r| indirect(&mut rng, g_.dist_bs_target, g_.dist_target_ris[r], pl.target_indirect, cfg.target_reflectivity))
        .collect();
    let clutter_indirect = (0..cfg.clutter_positions.len())
        .map(|q| {
            (0..cfg.n_ris)
                .map(|r| {
                    indirect(
                        &mut rng,
                        g_.dist_bs_clutter[q],
                        g_.dist_clutter_ris[q][r],
                        pl.clutter_indirect,
                        cfg.clutter_reflectivity,
                    )
                })
                .collect()
        })
        .collect();

    ChannelSet {
        dims: Dims {
            n_antennas: n,
            n_ris: cfg.n_ris,
            n_elements: nr,
            n_pulses: cfg.n_pulses,
            n_slots: cfg.n_slots,
            n_snapshots: scenario.snapshots,
            n_users: cfg.n_users,
        },
        pulse_interval: cfg.pulse_interval(),
        g,
        h_d,
        h_r,
        gains: PathGains { target_direct, target_indirect, clutter_direct, clutter_indirect },
        geometry: g_.clone(),
        delays: scenario.delays.clone(),
        dopplers: scenario.dopplers.clone(),
    }
}

/// Shape of a synthetic instance built by [`synthetic_channels`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticShape {
    pub n_antennas: usize,
    pub n_pulses: usize,
    pub n_slots: usize,
    pub n_elements: usize,
    pub n_ris: usize,
    pub n_clutter: usize,
    pub n_users: usize,
    /// Largest extra delay of any path over the earliest one.
    pub max_extra_delay: usize,
}

/// Random channel set with unit-scale gains, random angles, delays and
/// Dopplers. Meant for algebraic checks on tiny instances.
pub fn synthetic_channels(shape: SyntheticShape, seed: u64) -> ChannelSet {
    let mut rng = stream_rng(seed, 99);
    let s = shape;
    let angle = |rng: &mut ChaCha8Rng| rng.random_range(-1.4..1.4);
    let mut delay = |rng: &mut ChaCha8Rng| rng.random_range(0..=s.max_extra_delay);
    let theta_target = angle(&mut rng);
    let theta_target_at_ris: Vec<f64> = (0..s.n_ris).map(|_| angle(&mut rng)).collect();
    let theta_clutter: Vec<f64> = (0..s.n_clutter).map(|_| angle(&mut rng)).collect();
    let theta_clutter_at_ris: Vec<Vec<f64>> =
        (0..s.n_clutter).map(|_| (0..s.n_ris).map(|_| angle(&mut rng)).collect()).collect();
    let cg = |rng: &mut ChaCha8Rng| complex_gaussian(rng);
    let g: Vec<CMat> = (0..s.n_ris).map(|_| CMat::from_fn(s.n_elements, s.n_antennas, |_, _| cg(&mut rng))).collect();
    let h_d: Vec<CVec> = (0..s.n_users).map(|_| CVec::from_fn(s.n_antennas, |_, _| cg(&mut rng))).collect();
    let h_r: Vec<Vec<CVec>> = (0..s.n_ris)
        .map(|_| (0..s.n_users).map(|_| CVec::from_fn(s.n_elements, |_, _| cg(&mut rng))).collect())
        .collect();
    let trip = |rng: &mut ChaCha8Rng| [cg(rng), cg(rng), cg(rng)];
    let gains = PathGains {
        target_direct: cg(&mut rng),
        target_indirect: (0..s.n_ris).map(|_| trip(&mut rng)).collect(),
        clutter_direct: (0..s.n_clutter).map(|_| cg(&mut rng)).collect(),
        clutter_indirect: (0..s.n_clutter).map(|_| (0..s.n_ris).map(|_| trip(&mut rng)).collect()).collect(),
    };
    let dtrip = |rng: &mut ChaCha8Rng, f: &mut dyn FnMut(&mut ChaCha8Rng) -> usize| [f(rng), f(rng), f(rng)];
    let mut delays = DelayTable {
        target_direct: delay(&mut rng),
        target_indirect: (0..s.n_ris).map(|_| dtrip(&mut rng, &mut delay)).collect(),
        clutter_direct: (0..s.n_clutter).map(|_| delay(&mut rng)).collect(),
        clutter_indirect: (0..s.n_clutter).map(|_| (0..s.n_ris).map(|_| dtrip(&mut rng, &mut delay)).collect()).collect(),
    };
    // keep a path at zero so the window is exactly max - min wide
    delays.target_direct = 0;
    let dop = |rng: &mut ChaCha8Rng| rng.random_range(-2000.0..2000.0);
    let dopplers = DopplerTable {
        direct: dop(&mut rng),
        indirect: (0..s.n_ris).map(|_| [dop(&mut rng), dop(&mut rng), dop(&mut rng)]).collect(),
    };
    let n_snapshots = delays.snapshots(s.n_slots);
    let geometry = Geometry {
        theta_target,
        theta_target_at_ris,
        theta_clutter,
        theta_clutter_at_ris,
        theta_ris_at_bs: vec![0.0; s.n_ris],
        theta_bs_at_ris: vec![0.0; s.n_ris],
        dist_bs_target: 1.0,
        dist_target_ris: vec![1.0; s.n_ris],
        dist_bs_ris: vec![1.0; s.n_ris],
        dist_bs_clutter: vec![1.0; s.n_clutter],
        dist_clutter_ris: vec![vec![1.0; s.n_ris]; s.n_clutter],
        dist_bs_user: vec![1.0; s.n_users],
        dist_ris_user: vec![vec![1.0; s.n_users]; s.n_ris],
    };
    ChannelSet {
        dims: Dims {
            n_antennas: s.n_antennas,
            n_ris: s.n_ris,
            n_elements: s.n_elements,
            n_pulses: s.n_pulses,
            n_slots: s.n_slots,
            n_snapshots,
            n_users: s.n_users,
        },
        pulse_interval: 1e-3,
        g,
        h_d,
        h_r,
        gains,
        geometry,
        delays,
        dopplers,
    }
}
