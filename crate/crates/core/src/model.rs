//! Scenario construction: configuration, channel realisations and CSI
//! uncertainty radii.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cplx::{norm_sqr, CMat, CVec, C64};
use crate::error::ConfigError;

/// Shortest BS–receiver distance used inside the pathloss law (metres).
pub const MIN_LINK_DISTANCE: f64 = 1.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Every constant describing one network scenario. Powers in watts, rates
/// in nats/s/Hz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    #[serde(rename = "K")]
    pub cells: usize,
    #[serde(rename = "N_k")]
    pub users: usize,
    #[serde(rename = "N1_k")]
    pub zone1: usize,
    #[serde(rename = "M")]
    pub antennas: usize,
    #[serde(rename = "N_ev")]
    pub ev_antennas: usize,
    #[serde(rename = "Pk_max")]
    pub pk_max: f64,
    #[serde(rename = "P_max")]
    pub p_max: f64,
    pub e_min: f64,
    pub zeta: f64,
    pub sigma_a2: f64,
    pub eps0: f64,
    pub eps1: f64,
    pub cell_radius: f64,
    pub inner_radius: f64,
    pub pathloss_exp: f64,
    #[serde(rename = "rician_K")]
    pub rician_k: f64,
    pub xi: f64,
    #[serde(rename = "P_A")]
    pub p_a: f64,
    #[serde(rename = "P_c")]
    pub p_c: f64,
    pub r_qos: f64,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self::reference()
    }
}

impl NetworkConfig {
    /// The three-cell reference scenario (M = 5, e_min = −20 dBm).
    pub fn reference() -> Self {
        Self {
            cells: 3,
            users: 4,
            zone1: 2,
            antennas: 5,
            ev_antennas: 2,
            pk_max: dbm_to_watts(26.0),
            p_max: dbm_to_watts(30.0),
            e_min: dbm_to_watts(-20.0),
            zeta: 0.5,
            sigma_a2: dbm_to_watts(-90.0),
            eps0: 0.005,
            eps1: 1e-3,
            cell_radius: 40.0,
            inner_radius: 15.0,
            pathloss_exp: 3.0,
            rician_k: db_to_linear(10.0),
            xi: 0.2,
            p_a: 0.6,
            p_c: 2.5,
            r_qos: 0.5 * std::f64::consts::LN_2,
            seed: 0,
        }
    }

    pub fn zone2(&self) -> usize {
        self.users - self.zone1
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, reason: &str| {
            Err(ConfigError::Invalid {
                key: key.to_string(),
                reason: reason.to_string(),
            })
        };
        if self.cells == 0 {
            return bad("K", "must be at least 1");
        }
        if self.antennas == 0 {
            return bad("M", "must be at least 1");
        }
        if self.ev_antennas == 0 {
            return bad("N_ev", "must be at least 1");
        }
        if self.zone1 == 0 {
            return bad("N1_k", "must be at least 1");
        }
        if self.zone1 > self.users {
            return bad("N1_k", "cannot exceed N_k");
        }
        let positive = [
            ("Pk_max", self.pk_max),
            ("P_max", self.p_max),
            ("e_min", self.e_min),
            ("sigma_a2", self.sigma_a2),
            ("cell_radius", self.cell_radius),
            ("inner_radius", self.inner_radius),
            ("pathloss_exp", self.pathloss_exp),
            ("rician_K", self.rician_k),
            ("P_A", self.p_a),
            ("P_c", self.p_c),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(key, "must be finite and strictly positive");
            }
        }
        if self.inner_radius >= self.cell_radius {
            return bad("inner_radius", "must be smaller than cell_radius");
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return bad("zeta", "must lie in (0, 1)");
        }
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            return bad("xi", "must lie in (0, 1]");
        }
        if !(self.eps0.is_finite() && self.eps0 >= 0.0) {
            return bad("eps0", "must be nonnegative");
        }
        if !(self.eps1.is_finite() && self.eps1 >= 0.0) {
            return bad("eps1", "must be nonnegative");
        }
        if !(self.r_qos.is_finite() && self.r_qos >= 0.0) {
            return bad("r_qos", "must be nonnegative");
        }
        Ok(())
    }

    /// Parses the flat `key = value` format. Keys not present keep the
    /// reference-scenario value. Power-like keys also accept a `_dbm`
    /// suffixed variant.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::reference();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Parse {
                    line: lineno + 1,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            cfg.set(key.trim(), value.trim()).map_err(|e| match e {
                ConfigError::Parse { message, .. } => ConfigError::Parse {
                    line: lineno + 1,
                    message,
                },
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value (same vocabulary as [`parse`]).
    ///
    /// [`parse`]: NetworkConfig::parse
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let num = || -> Result<f64, ConfigError> {
            value.parse::<f64>().map_err(|_| ConfigError::Parse {
                line: 0,
                message: format!("`{key}`: `{value}` is not a number"),
            })
        };
        let int = || -> Result<usize, ConfigError> {
            value.parse::<usize>().map_err(|_| ConfigError::Parse {
                line: 0,
                message: format!("`{key}`: `{value}` is not a nonnegative integer"),
            })
        };
        match key {
            "K" => self.cells = int()?,
            "N_k" => self.users = int()?,
            "N1_k" => self.zone1 = int()?,
            "M" => self.antennas = int()?,
            "N_ev" => self.ev_antennas = int()?,
            "Pk_max" => self.pk_max = num()?,
            "Pk_max_dbm" => self.pk_max = dbm_to_watts(num()?),
            "P_max" => self.p_max = num()?,
            "P_max_dbm" => self.p_max = dbm_to_watts(num()?),
            "e_min" => self.e_min = num()?,
            "e_min_dbm" => self.e_min = dbm_to_watts(num()?),
            "zeta" => self.zeta = num()?,
            "sigma_a2" => self.sigma_a2 = num()?,
            "sigma_a2_dbm" => self.sigma_a2 = dbm_to_watts(num()?),
            "eps0" => self.eps0 = num()?,
            "eps1" => self.eps1 = num()?,
            "cell_radius" => self.cell_radius = num()?,
            "inner_radius" => self.inner_radius = num()?,
            "pathloss_exp" => self.pathloss_exp = num()?,
            "rician_K" => self.rician_k = num()?,
            "rician_K_db" => self.rician_k = db_to_linear(num()?),
            "xi" => self.xi = num()?,
            "P_A" => self.p_a = num()?,
            "P_A_dbm" => self.p_a = dbm_to_watts(num()?),
            "P_c" => self.p_c = num()?,
            "P_c_dbm" => self.p_c = dbm_to_watts(num()?),
            "r_qos" => self.r_qos = num()?,
            "r_qos_bits" => self.r_qos = num()? * std::f64::consts::LN_2,
            "seed" => {
                self.seed = value.parse::<u64>().map_err(|_| ConfigError::Parse {
                    line: 0,
                    message: format!("`seed`: `{value}` is not an unsigned integer"),
                })?
            }
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Renders the configuration back into the key-value format (watts).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "K = {}", self.cells);
        let _ = writeln!(s, "N_k = {}", self.users);
        let _ = writeln!(s, "N1_k = {}", self.zone1);
        let _ = writeln!(s, "M = {}", self.antennas);
        let _ = writeln!(s, "N_ev = {}", self.ev_antennas);
        let _ = writeln!(s, "Pk_max = {:e}", self.pk_max);
        let _ = writeln!(s, "P_max = {:e}", self.p_max);
        let _ = writeln!(s, "e_min = {:e}", self.e_min);
        let _ = writeln!(s, "zeta = {}", self.zeta);
        let _ = writeln!(s, "sigma_a2 = {:e}", self.sigma_a2);
        let _ = writeln!(s, "eps0 = {:e}", self.eps0);
        let _ = writeln!(s, "eps1 = {:e}", self.eps1);
        let _ = writeln!(s, "cell_radius = {}", self.cell_radius);
        let _ = writeln!(s, "inner_radius = {}", self.inner_radius);
        let _ = writeln!(s, "pathloss_exp = {}", self.pathloss_exp);
        let _ = writeln!(s, "rician_K = {}", self.rician_k);
        let _ = writeln!(s, "xi = {}", self.xi);
        let _ = writeln!(s, "P_A = {}", self.p_a);
        let _ = writeln!(s, "P_c = {}", self.p_c);
        let _ = writeln!(s, "r_qos = {:e}", self.r_qos);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<NetworkConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    NetworkConfig::parse(&text)
}

/// `eps1·‖h‖²` for a serving link, `eps0·‖h‖²` otherwise.
pub fn uncertainty_radius(cfg: &NetworkConfig, norm_sq: f64, serving: bool) -> f64 {
    if serving {
        cfg.eps1 * norm_sq
    } else {
        cfg.eps0 * norm_sq
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub base_stations: Vec<[f64; 2]>,
    /// Indexed `k * N + n`.
    pub users: Vec<[f64; 2]>,
    pub eavesdroppers: Vec<[f64; 2]>,
}

impl Geometry {
    /// Distance from UE `(k, n)` to its own BS.
    pub fn serving_distance(&self, users_per_cell: usize, k: usize, n: usize) -> f64 {
        dist(self.users[k * users_per_cell + n], self.base_stations[k])
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Nominal channel estimates and their uncertainty radii.
///
/// `h` is indexed by `(k̄, k, n)` → BS `k̄` to UE `(k, n)`; `hev` by
/// `(k̄, k)` → BS `k̄` to the eavesdropper of cell `k` (an `M × N_ev`
/// matrix).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub cells: usize,
    pub users: usize,
    pub zone1: usize,
    pub antennas: usize,
    pub ev_antennas: usize,
    pub h: Vec<CVec>,
    pub hev: Vec<CMat>,
    pub eps_ue: Vec<f64>,
    pub eps_ev: Vec<f64>,
    pub geometry: Geometry,
}

impl ChannelSet {
    #[inline]
    pub fn link(&self, kb: usize, k: usize, n: usize) -> usize {
        (kb * self.cells + k) * self.users + n
    }

    #[inline]
    pub fn h(&self, kb: usize, k: usize, n: usize) -> &[C64] {
        &self.h[self.link(kb, k, n)]
    }

    #[inline]
    pub fn eps_ue(&self, kb: usize, k: usize, n: usize) -> f64 {
        self.eps_ue[self.link(kb, k, n)]
    }

    #[inline]
    pub fn hev(&self, kb: usize, k: usize) -> &CMat {
        &self.hev[kb * self.cells + k]
    }

    #[inline]
    pub fn eps_ev(&self, kb: usize, k: usize) -> f64 {
        self.eps_ev[kb * self.cells + k]
    }

    /// Recomputes every radius from the nominal channels.
    pub fn fill_radii(&mut self, cfg: &NetworkConfig) {
        let kc = self.cells;
        for kb in 0..kc {
            for k in 0..kc {
                for n in 0..self.users {
                    let l = self.link(kb, k, n);
                    self.eps_ue[l] = uncertainty_radius(cfg, norm_sqr(&self.h[l]), kb == k);
                }
                self.eps_ev[kb * kc + k] = cfg.eps0 * self.hev[kb * kc + k].fro_sqr();
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// Base-station sites: a zig-zag strip of mutually tangent cells, so the
/// first three form the equilateral three-cell layout.
pub fn base_station_sites(cfg: &NetworkConfig) -> Vec<[f64; 2]> {
    let r = cfg.cell_radius;
    (0..cfg.cells)
        .map(|k| {
            let y = if k % 2 == 1 { 3f64.sqrt() * r } else { 0.0 };
            [r * k as f64, y]
        })
        .collect()
}

fn uniform_in_annulus(rng: &mut impl Rng, centre: [f64; 2], r_in: f64, r_out: f64) -> [f64; 2] {
    let u: f64 = rng.gen();
    let rho = (r_in * r_in + u * (r_out * r_out - r_in * r_in)).sqrt();
    let theta = 2.0 * PI * rng.gen::<f64>();
    [centre[0] + rho * theta.cos(), centre[1] + rho * theta.sin()]
}

fn cn01(rng: &mut impl Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Rician link gain `√(d^-α)·(√(K/(K+1))·LOS + √(1/(K+1))·CN(0,1))` with a
/// half-wavelength uniform linear array. `rx_antennas > 1` yields the
/// matrix channel to a multi-antenna receiver.
pub fn draw_link(
    rng: &mut impl Rng,
    tx: [f64; 2],
    rx: [f64; 2],
    antennas: usize,
    rx_antennas: usize,
    pathloss_exp: f64,
    rician_k: f64,
) -> CMat {
    let d = dist(tx, rx).max(MIN_LINK_DISTANCE);
    let gain = d.powf(-pathloss_exp).sqrt();
    let bearing = (rx[1] - tx[1]).atan2(rx[0] - tx[0]);
    let los_w = (rician_k / (rician_k + 1.0)).sqrt();
    let nlos_w = (1.0 / (rician_k + 1.0)).sqrt();
    let mut cols = Vec::with_capacity(rx_antennas);
    for j in 0..rx_antennas {
        let col = (0..antennas)
            .map(|m| {
                let phase = -PI * (m as f64 * bearing.cos() + j as f64 * bearing.sin());
                let los = C64::from_polar(1.0, phase);
                (los * los_w + cn01(rng) * nlos_w) * gain
            })
            .collect();
        cols.push(col);
    }
    CMat::from_columns(cols)
}

/// Draws a full scenario realisation; deterministic in `cfg.seed`.
pub fn generate_channels(cfg: &NetworkConfig) -> Result<ChannelSet, ConfigError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let kc = cfg.cells;
    let bs = base_station_sites(cfg);

    let mut users = Vec::with_capacity(kc * cfg.users);
    for site in bs.iter() {
        for n in 0..cfg.users {
            let p = if n < cfg.zone1 {
                uniform_in_annulus(&mut rng, *site, 0.0, cfg.inner_radius)
            } else {
                uniform_in_annulus(&mut rng, *site, cfg.inner_radius, cfg.cell_radius)
            };
            users.push(p);
        }
    }
    let eavesdroppers: Vec<[f64; 2]> = bs
        .iter()
        .map(|site| uniform_in_annulus(&mut rng, *site, 0.0, cfg.inner_radius))
        .collect();

    let mut h = Vec::with_capacity(kc * kc * cfg.users);
    let mut hev = Vec::with_capacity(kc * kc);
    for tx in bs.iter() {
        for k in 0..kc {
            for n in 0..cfg.users {
                let link = draw_link(
                    &mut rng,
                    *tx,
                    users[k * cfg.users + n],
                    cfg.antennas,
                    1,
                    cfg.pathloss_exp,
                    cfg.rician_k,
                );
                h.push(link.data);
            }
        }
        for ev in eavesdroppers.iter() {
            hev.push(draw_link(
                &mut rng,
                *tx,
                *ev,
                cfg.antennas,
                cfg.ev_antennas,
                cfg.pathloss_exp,
                cfg.rician_k,
            ));
        }
    }

    let mut cs = ChannelSet {
        cells: kc,
        users: cfg.users,
        zone1: cfg.zone1,
        antennas: cfg.antennas,
        ev_antennas: cfg.ev_antennas,
        eps_ue: vec![0.0; h.len()],
        eps_ev: vec![0.0; hev.len()],
        h,
        hev,
        geometry: Geometry {
            base_stations: bs,
            users,
            eavesdroppers,
        },
    };
    cs.fill_radii(cfg);
    Ok(cs)
}

/// Physical units used to express a normalised copy of a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Units {
    /// Watts per unit of beamformer power.
    pub power: f64,
    /// Watts per unit of received power.
    pub noise: f64,
}

impl Units {
    pub fn identity() -> Self {
        Self {
            power: 1.0,
            noise: 1.0,
        }
    }

    /// Amplitude factor applied to beamformers when leaving normalised units.
    pub fn beam_scale(&self) -> f64 {
        self.power.sqrt()
    }
}

/// A configuration together with one channel realisation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub cfg: NetworkConfig,
    pub channels: ChannelSet,
}

impl Scenario {
    pub fn generate(cfg: &NetworkConfig) -> Result<Self, ConfigError> {
        Ok(Self {
            cfg: cfg.clone(),
            channels: generate_channels(cfg)?,
        })
    }

    /// Rescales so beam power is measured in units of `Pk_max` and received
    /// power in units of `σ_a²`. Every rate (and SINR) is unchanged; SEE
    /// values are multiplied by `Pk_max`.
    pub fn normalized(&self) -> (Scenario, Units) {
        let units = Units {
            power: self.cfg.pk_max,
            noise: self.cfg.sigma_a2,
        };
        let amp = (units.power / units.noise).sqrt();
        let mut cfg = self.cfg.clone();
        cfg.pk_max /= units.power;
        cfg.p_max /= units.power;
        cfg.p_a /= units.power;
        cfg.p_c /= units.power;
        cfg.e_min /= units.noise;
        cfg.sigma_a2 = 1.0;
        let mut ch = self.channels.clone();
        for v in ch.h.iter_mut() {
            for z in v.iter_mut() {
                *z *= amp;
            }
        }
        for m in ch.hev.iter_mut() {
            *m = m.scaled(amp);
        }
        ch.fill_radii(&cfg);
        (Scenario { cfg, channels: ch }, units)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_conversion_matches_reference_values() {
        assert!((dbm_to_watts(26.0) - 0.398_107_170_553_497).abs() < 1e-12);
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        // inverse conversion
        assert!((watts_to_dbm(dbm_to_watts(26.0)) - 26.0).abs() < 1e-12);
        assert!((dbm_to_watts(-90.0) - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn parse_accepts_dbm_variants() {
        let cfg = NetworkConfig::parse("Pk_max_dbm = 26\nP_max_dbm = 30 # network\n").unwrap();
        assert!((cfg.pk_max - 0.398_107_17).abs() < 1e-8);
        assert!((cfg.p_max - 1.0).abs() < 1e-15);
    }

    #[test]
    fn parse_reports_offending_key() {
        match NetworkConfig::parse("zeta = 1.5") {
            Err(ConfigError::Invalid { key, .. }) => assert_eq!(key, "zeta"),
            other => panic!("expected invariant violation, got {other:?}"),
        }
        assert!(matches!(
            NetworkConfig::parse("bogus = 1"),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            NetworkConfig::parse("M = five"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            NetworkConfig::parse("N1_k = 5"),
            Err(ConfigError::Invalid { .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        let cfg = NetworkConfig {
            seed: 42,
            ..NetworkConfig::reference()
        };
        let back = NetworkConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back.cells, cfg.cells);
        assert!((back.pk_max - cfg.pk_max).abs() < 1e-15);
        assert!((back.r_qos - cfg.r_qos).abs() < 1e-15);
        assert_eq!(back.seed, 42);
    }

    #[test]
    fn radius_examples() {
        let cfg = NetworkConfig {
            eps0: 0.005,
            eps1: 1e-3,
            ..NetworkConfig::reference()
        };
        assert!((uncertainty_radius(&cfg, 2.0, true) - 0.002).abs() < 1e-18);
        assert_eq!(uncertainty_radius(&cfg, 0.0, false), 0.0);
        assert!((uncertainty_radius(&cfg, 4.0, false) - 0.02).abs() < 1e-18);
    }

    #[test]
    fn generation_is_deterministic_and_geometry_valid() {
        let cfg = NetworkConfig {
            seed: 7,
            ..NetworkConfig::reference()
        };
        let a = generate_channels(&cfg).unwrap();
        let b = generate_channels(&cfg).unwrap();
        assert_eq!(a, b);
        for k in 0..cfg.cells {
            for n in 0..cfg.users {
                let d = a.geometry.serving_distance(cfg.users, k, n);
                assert!(d > 0.0 && d <= cfg.cell_radius + 1e-9);
                if n < cfg.zone1 {
                    assert!(d <= cfg.inner_radius + 1e-9);
                } else {
                    assert!(d >= cfg.inner_radius - 1e-9);
                }
            }
            let ev = a.geometry.eavesdroppers[k];
            assert!(dist(ev, a.geometry.base_stations[k]) <= cfg.inner_radius + 1e-9);
        }
        let other = generate_channels(&NetworkConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a.h, other.h);
    }

    #[test]
    fn radii_follow_definition() {
        let cfg = NetworkConfig::reference();
        let cs = generate_channels(&cfg).unwrap();
        for kb in 0..cfg.cells {
            for k in 0..cfg.cells {
                for n in 0..cfg.users {
                    let want = if kb == k { cfg.eps1 } else { cfg.eps0 } * norm_sqr(cs.h(kb, k, n));
                    assert_eq!(cs.eps_ue(kb, k, n), want);
                }
                assert_eq!(cs.eps_ev(kb, k), cfg.eps0 * cs.hev(kb, k).fro_sqr());
            }
        }
        let zero = generate_channels(&NetworkConfig {
            eps1: 0.0,
            ..cfg.clone()
        })
        .unwrap();
        for k in 0..cfg.cells {
            for n in 0..cfg.users {
                assert_eq!(zero.eps_ue(k, k, n), 0.0);
            }
        }
    }

    #[test]
    fn doubling_distance_divides_mean_gain_by_eight() {
        // Monte-Carlo mean of ‖h‖² at distances d and 2d, α = 3.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 20_000;
        let mean = |rng: &mut ChaCha8Rng, d: f64| {
            (0..draws)
                .map(|_| draw_link(rng, [0.0, 0.0], [d, 0.0], 4, 1, 3.0, 10.0).fro_sqr())
                .sum::<f64>()
                / draws as f64
        };
        let near = mean(&mut rng, 5.0);
        let far = mean(&mut rng, 10.0);
        assert!(
            ((near / far) / 8.0 - 1.0).abs() < 0.05,
            "ratio {}",
            near / far
        );
    }

    #[test]
    fn normalisation_preserves_link_budgets() {
        let scn = Scenario::generate(&NetworkConfig::reference()).unwrap();
        let (ns, units) = scn.normalized();
        assert_eq!(ns.cfg.sigma_a2, 1.0);
        assert!((ns.cfg.pk_max - 1.0).abs() < 1e-15);
        let ratio = norm_sqr(ns.channels.h(0, 0, 0)) / norm_sqr(scn.channels.h(0, 0, 0));
        assert!((ratio / (units.power / units.noise) - 1.0).abs() < 1e-12);
        assert!(
            (ns.channels.eps_ue(0, 0, 0) / scn.channels.eps_ue(0, 0, 0) / ratio - 1.0).abs()
                < 1e-12
        );
    }
}
