//! Exact evaluation of rates, harvested energy, powers and secrecy energy
//! efficiency. Nothing here depends on the optimiser, so these functions
//! double as the audit path for its output.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cplx::{inner, norm_sqr, zeros, CVec, C64};
use crate::error::MetricError;
use crate::model::{ChannelSet, NetworkConfig};

/// Energy beams for zone-1 UEs (`xe[k * N1 + n1]`) and information beams
/// for every UE (`xi[k * N + n]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamformerSet {
    pub cells: usize,
    pub users: usize,
    pub zone1: usize,
    pub antennas: usize,
    pub xe: Vec<CVec>,
    pub xi: Vec<CVec>,
}

impl BeamformerSet {
    pub fn zeros(cells: usize, users: usize, zone1: usize, antennas: usize) -> Self {
        Self {
            cells,
            users,
            zone1,
            antennas,
            xe: vec![zeros(antennas); cells * zone1],
            xi: vec![zeros(antennas); cells * users],
        }
    }

    pub fn zeros_like(cs: &ChannelSet) -> Self {
        Self::zeros(cs.cells, cs.users, cs.zone1, cs.antennas)
    }

    /// i.i.d. `CN(0, scale²)` entries.
    pub fn random(cs: &ChannelSet, scale: f64, rng: &mut impl Rng) -> Self {
        let mut x = Self::zeros_like(cs);
        for v in x.xe.iter_mut().chain(x.xi.iter_mut()) {
            for z in v.iter_mut() {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                *z = C64::new(re, im) * (scale * std::f64::consts::FRAC_1_SQRT_2);
            }
        }
        x
    }

    #[inline]
    pub fn xe(&self, k: usize, n1: usize) -> &[C64] {
        &self.xe[k * self.zone1 + n1]
    }

    #[inline]
    pub fn xi(&self, k: usize, n: usize) -> &[C64] {
        &self.xi[k * self.users + n]
    }

    #[inline]
    pub fn xe_mut(&mut self, k: usize, n1: usize) -> &mut CVec {
        &mut self.xe[k * self.zone1 + n1]
    }

    #[inline]
    pub fn xi_mut(&mut self, k: usize, n: usize) -> &mut CVec {
        &mut self.xi[k * self.users + n]
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in out.xe.iter_mut().chain(out.xi.iter_mut()) {
            for z in v.iter_mut() {
                *z *= s;
            }
        }
        out
    }

    /// `Σ_{n1} ‖xE_{k,n1}‖²`.
    pub fn cell_energy_power(&self, k: usize) -> f64 {
        (0..self.zone1).map(|n| norm_sqr(self.xe(k, n))).sum()
    }

    /// `Σ_n ‖xI_{k,n}‖²`.
    pub fn cell_info_power(&self, k: usize) -> f64 {
        (0..self.users).map(|n| norm_sqr(self.xi(k, n))).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.xe
            .iter()
            .chain(self.xi.iter())
            .all(|v| v.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

/// Fraction `eta` of each block carries energy; `mu = 1/(1 − eta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSplit {
    pub eta: f64,
    pub mu: f64,
}

impl TimeSplit {
    pub fn from_eta(eta: f64) -> Result<Self, MetricError> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(MetricError::InvalidTimeSplit(eta));
        }
        Ok(Self {
            eta,
            mu: 1.0 / (1.0 - eta),
        })
    }

    pub fn from_mu(mu: f64) -> Result<Self, MetricError> {
        if !(mu > 1.0 && mu.is_finite()) {
            return Err(MetricError::InvalidTimeSplit(1.0 - 1.0 / mu));
        }
        Ok(Self {
            eta: 1.0 - 1.0 / mu,
            mu,
        })
    }
}

/// Noiseless energy-harvesting receive power `Σ |hᴴ xE|²` at zone-1 UE
/// `(k, n1)`, summed over every energy beam in the network.
pub fn eh_signal(cs: &ChannelSet, x: &BeamformerSet, k: usize, n1: usize) -> f64 {
    let mut acc = 0.0;
    for kb in 0..cs.cells {
        let h = cs.h(kb, k, n1);
        for nb in 0..cs.zone1 {
            acc += inner(h, x.xe(kb, nb)).norm_sqr();
        }
    }
    acc
}

/// Per zone-1 UE `ζ·η·(Σ|hᴴxE|² + σ²)`, indexed `k * N1 + n1`.
pub fn harvested_energy(
    cs: &ChannelSet,
    x: &BeamformerSet,
    ts: TimeSplit,
    cfg: &NetworkConfig,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(cs.cells * cs.zone1);
    for k in 0..cs.cells {
        for n1 in 0..cs.zone1 {
            out.push(cfg.zeta * ts.eta * (eh_signal(cs, x, k, n1) + cfg.sigma_a2));
        }
    }
    out
}

/// Worst-case interference-plus-noise at UE `(k, n)`.
pub fn phi(cs: &ChannelSet, x: &BeamformerSet, cfg: &NetworkConfig, k: usize, n: usize) -> f64 {
    let mut acc = cfg.sigma_a2;
    for kb in 0..cs.cells {
        let h = cs.h(kb, k, n);
        let eps = cs.eps_ue(kb, k, n);
        for nb in 0..cs.users {
            if kb == k && nb == n {
                continue;
            }
            let v = x.xi(kb, nb);
            acc += inner(h, v).norm_sqr() + eps * norm_sqr(v);
        }
    }
    acc
}

/// `|hᴴx|² − ε‖x‖²` for the serving link of UE `(k, n)` (may be negative).
pub fn rate_numerator(cs: &ChannelSet, x: &BeamformerSet, k: usize, n: usize) -> f64 {
    let v = x.xi(k, n);
    inner(cs.h(k, k, n), v).norm_sqr() - cs.eps_ue(k, k, n) * norm_sqr(v)
}

/// `ln(1 + max(0, |hᴴx|² − ε‖x‖²)/φ)`, the time-split-free rate term.
pub fn f1(cs: &ChannelSet, x: &BeamformerSet, cfg: &NetworkConfig, k: usize, n: usize) -> f64 {
    let num = rate_numerator(cs, x, k, n).max(0.0);
    (num / phi(cs, x, cfg, k, n)).ln_1p()
}

/// Same as [`f1`] but with `(Re hᴴx)²` in place of `|hᴴx|²`; the two agree
/// once beams are phase-aligned.
pub fn f1_re(cs: &ChannelSet, x: &BeamformerSet, cfg: &NetworkConfig, k: usize, n: usize) -> f64 {
    let v = x.xi(k, n);
    let re = inner(cs.h(k, k, n), v).re;
    let num = (re * re - cs.eps_ue(k, k, n) * norm_sqr(v)).max(0.0);
    (num / phi(cs, x, cfg, k, n)).ln_1p()
}

/// Worst-case signal the eavesdropper of cell `k` collects from the beam of
/// UE `(k, n)`: `‖Hᴴx‖² + ε‖x‖²`.
pub fn ev_signal(cs: &ChannelSet, x: &BeamformerSet, k: usize, n: usize) -> f64 {
    let v = x.xi(k, n);
    norm_sqr(&cs.hev(k, k).herm_mul(v)) + cs.eps_ev(k, k) * norm_sqr(v)
}

/// Worst-case energy-beam jamming at eavesdropper `k` (without the
/// time-split factor).
pub fn ev_jamming(cs: &ChannelSet, x: &BeamformerSet, k: usize) -> f64 {
    let mut acc = 0.0;
    for kb in 0..cs.cells {
        let hm = cs.hev(kb, k);
        let eps = cs.eps_ev(kb, k);
        for nb in 0..cs.zone1 {
            let v = x.xe(kb, nb);
            acc += norm_sqr(&hm.herm_mul(v)) - eps * norm_sqr(v);
        }
    }
    acc
}

/// Worst-case information-beam interference at eavesdropper `k` when it
/// decodes the stream of UE `(k, n)`.
pub fn ev_interference(cs: &ChannelSet, x: &BeamformerSet, k: usize, n: usize) -> f64 {
    let mut acc = 0.0;
    for kb in 0..cs.cells {
        let hm = cs.hev(kb, k);
        let eps = cs.eps_ev(kb, k);
        for nb in 0..cs.users {
            if kb == k && nb == n {
                continue;
            }
            let v = x.xi(kb, nb);
            acc += norm_sqr(&hm.herm_mul(v)) - eps * norm_sqr(v);
        }
    }
    acc
}

/// Eavesdropper interference-plus-noise in the time-split form.
pub fn q_eta(
    cs: &ChannelSet,
    x: &BeamformerSet,
    cfg: &NetworkConfig,
    eta: f64,
    k: usize,
    n: usize,
) -> f64 {
    eta / (1.0 - eta) * ev_jamming(cs, x, k)
        + ev_interference(cs, x, k, n)
        + cfg.ev_antennas as f64 * cfg.sigma_a2 / (1.0 - eta)
}

/// Eavesdropper interference-plus-noise in the `mu` form:
/// `(mu − 1)·J + I + mu·N_ev·σ²`.
pub fn q_bar(
    cs: &ChannelSet,
    x: &BeamformerSet,
    cfg: &NetworkConfig,
    mu: f64,
    k: usize,
    n: usize,
) -> f64 {
    (mu - 1.0) * ev_jamming(cs, x, k)
        + ev_interference(cs, x, k, n)
        + mu * cfg.ev_antennas as f64 * cfg.sigma_a2
}

fn checked_ratio(s: f64, q: f64, k: usize, n: usize) -> Result<f64, MetricError> {
    if q > 0.0 {
        Ok(s / q)
    } else {
        Err(MetricError::NonPositiveDenominator { k, n, value: q })
    }
}

/// `ln(1 + S/q̄)` in the `mu` form.
pub fn f2_bar(
    cs: &ChannelSet,
    x: &BeamformerSet,
    cfg: &NetworkConfig,
    mu: f64,
    k: usize,
    n: usize,
) -> Result<f64, MetricError> {
    let q = q_bar(cs, x, cfg, mu, k, n);
    Ok(checked_ratio(ev_signal(cs, x, k, n), q, k, n)?.ln_1p())
}

/// `f1/mu − f2` in the `mu` form; equals the secrecy rate.
pub fn secrecy_bar(
    cs: &ChannelSet,
    x: &BeamformerSet,
    cfg: &NetworkConfig,
    mu: f64,
    k: usize,
    n: usize,
) -> Result<f64, MetricError> {
    Ok(f1(cs, x, cfg, k, n) / mu - f2_bar(cs, x, cfg, mu, k, n)?)
}

/// `(1 − η)·f1` for every UE, indexed `k * N + n`.
pub fn worst_ue_rate(
    cs: &ChannelSet,
    x: &BeamformerSet,
    ts: TimeSplit,
    cfg: &NetworkConfig,
) -> Vec<f64> {
    ue_indices(cs)
        .map(|(k, n)| (1.0 - ts.eta) * f1(cs, x, cfg, k, n))
        .collect()
}

/// Worst-case eavesdropper SINR for every UE stream.
pub fn worst_ev_sinr(
    cs: &ChannelSet,
    x: &BeamformerSet,
    ts: TimeSplit,
    cfg: &NetworkConfig,
) -> Result<Vec<f64>, MetricError> {
    ue_indices(cs)
        .map(|(k, n)| {
            checked_ratio(
                ev_signal(cs, x, k, n),
                q_eta(cs, x, cfg, ts.eta, k, n),
                k,
                n,
            )
        })
        .collect()
}

/// `(1 − η)·f1 − f2` for every UE, nats/s/Hz.
pub fn secrecy_rate(
    cs: &ChannelSet,
    x: &BeamformerSet,
    ts: TimeSplit,
    cfg: &NetworkConfig,
) -> Result<Vec<f64>, MetricError> {
    let ue = worst_ue_rate(cs, x, ts, cfg);
    let ev = worst_ev_sinr(cs, x, ts, cfg)?;
    Ok(ue.iter().zip(&ev).map(|(r, s)| r - s.ln_1p()).collect())
}

pub fn min_secrecy_rate(
    cs: &ChannelSet,
    x: &BeamformerSet,
    ts: TimeSplit,
    cfg: &NetworkConfig,
) -> Result<f64, MetricError> {
    Ok(secrecy_rate(cs, x, ts, cfg)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

pub fn min_ue_rate(cs: &ChannelSet, x: &BeamformerSet, ts: TimeSplit, cfg: &NetworkConfig) -> f64 {
    worst_ue_rate(cs, x, ts, cfg)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Per-cell transmit power `η·Σ‖xE‖² + (1 − η)·Σ‖xI‖²` and the network total.
pub fn powers(x: &BeamformerSet, ts: TimeSplit) -> (Vec<f64>, f64) {
    let cells: Vec<f64> = (0..x.cells)
        .map(|k| ts.eta * x.cell_energy_power(k) + (1.0 - ts.eta) * x.cell_info_power(k))
        .collect();
    let total = cells.iter().sum();
    (cells, total)
}

/// Cell power written in the `mu` form:
/// `Σ‖xE‖² + (Σ‖xI‖² − Σ‖xE‖²)/mu`.
pub fn cell_power_bar(x: &BeamformerSet, mu: f64, k: usize) -> f64 {
    let e = x.cell_energy_power(k);
    e + (x.cell_info_power(k) - e) / mu
}

/// Total consumed power of cell `k`: `g_k/ξ + M·P_A + P_c`.
pub fn consumed_power(cfg: &NetworkConfig, cell_power: f64) -> f64 {
    cell_power / cfg.xi + cfg.antennas as f64 * cfg.p_a + cfg.p_c
}

/// Per-cell secrecy energy efficiency (nats/J/Hz).
pub fn see_values(
    cs: &ChannelSet,
    x: &BeamformerSet,
    ts: TimeSplit,
    cfg: &NetworkConfig,
) -> Result<Vec<f64>, MetricError> {
    let f = secrecy_rate(cs, x, ts, cfg)?;
    let (g, _) = powers(x, ts);
    Ok((0..cs.cells)
        .map(|k| {
            let num: f64 = f[k * cs.users..(k + 1) * cs.users].iter().sum();
            num / consumed_power(cfg, g[k])
        })
        .collect())
}

fn ue_indices(cs: &ChannelSet) -> impl Iterator<Item = (usize, usize)> {
    let users = cs.users;
    (0..cs.cells).flat_map(move |k| (0..users).map(move |n| (k, n)))
}

/// Every performance quantity at one operating point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub eta: f64,
    pub ue_rate: Vec<f64>,
    pub ev_rate: Vec<f64>,
    pub secrecy_rate: Vec<f64>,
    pub harvested: Vec<f64>,
    pub cell_power: Vec<f64>,
    pub network_power: f64,
    /// Per-cell sum secrecy rate (numerator of the SEE).
    pub cell_sum_rate: Vec<f64>,
    /// Per-cell consumed power (denominator of the SEE).
    pub cell_consumed: Vec<f64>,
    pub see: Vec<f64>,
    pub min_secrecy_rate: f64,
    pub min_see: f64,
}

impl MetricReport {
    pub fn evaluate(
        cs: &ChannelSet,
        x: &BeamformerSet,
        ts: TimeSplit,
        cfg: &NetworkConfig,
    ) -> Result<Self, MetricError> {
        let ue_rate = worst_ue_rate(cs, x, ts, cfg);
        let ev_rate: Vec<f64> = worst_ev_sinr(cs, x, ts, cfg)?
            .into_iter()
            .map(f64::ln_1p)
            .collect();
        let secrecy: Vec<f64> = ue_rate.iter().zip(&ev_rate).map(|(a, b)| a - b).collect();
        let (cell_power, network_power) = powers(x, ts);
        let cell_sum_rate: Vec<f64> = secrecy.chunks(cs.users).map(|c| c.iter().sum()).collect();
        let cell_consumed: Vec<f64> = cell_power.iter().map(|g| consumed_power(cfg, *g)).collect();
        let see: Vec<f64> = cell_sum_rate
            .iter()
            .zip(&cell_consumed)
            .map(|(r, d)| r / d)
            .collect();
        Ok(Self {
            eta: ts.eta,
            min_secrecy_rate: secrecy.iter().copied().fold(f64::INFINITY, f64::min),
            min_see: see.iter().copied().fold(f64::INFINITY, f64::min),
            ue_rate,
            ev_rate,
            secrecy_rate: secrecy,
            harvested: harvested_energy(cs, x, ts, cfg),
            cell_power,
            network_power,
            cell_sum_rate,
            cell_consumed,
            see,
        })
    }

    /// One row per UE; rates in bits/s/Hz.
    pub fn to_csv(&self, users: usize) -> String {
        let mut s = String::from("cell,ue,ue_rate_bits,ev_rate_bits,secrecy_rate_bits\n");
        for (i, ((u, e), f)) in self
            .ue_rate
            .iter()
            .zip(&self.ev_rate)
            .zip(&self.secrecy_rate)
            .enumerate()
        {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                i / users,
                i % users,
                u / std::f64::consts::LN_2,
                e / std::f64::consts::LN_2,
                f / std::f64::consts::LN_2
            );
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyCheck {
    pub name: String,
    pub pass: bool,
    /// Largest relative violation (0 when satisfied).
    pub worst_violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub tol: f64,
    pub families: Vec<FamilyCheck>,
}

impl FeasibilityReport {
    pub fn all_pass(&self) -> bool {
        self.families.iter().all(|f| f.pass)
    }

    pub fn family(&self, name: &str) -> Option<&FamilyCheck> {
        self.families.iter().find(|f| f.name == name)
    }
}

/// Checks the original constraints. Violations are relative to the bound
/// (`(lhs − bound)/bound`), so the tolerance means the same thing for
/// watt-scale budgets and microwatt-scale harvesting targets.
pub fn feasibility_audit(
    cs: &ChannelSet,
    x: &BeamformerSet,
    ts: TimeSplit,
    cfg: &NetworkConfig,
    tol: f64,
) -> FeasibilityReport {
    let family = |name: &str, worst: f64| FamilyCheck {
        name: name.to_string(),
        pass: worst <= tol && worst.is_finite(),
        worst_violation: worst,
    };
    let over = |v: f64, cap: f64| ((v - cap) / cap).max(0.0);

    let beam =
        x.xe.iter()
            .chain(x.xi.iter())
            .map(|v| over(norm_sqr(v), cfg.pk_max))
            .fold(0.0, f64::max);
    let (cells, total) = powers(x, ts);
    let cell = cells
        .iter()
        .map(|g| over(*g, cfg.pk_max))
        .fold(0.0, f64::max);
    let network = over(total, cfg.p_max);
    let eh = harvested_energy(cs, x, ts, cfg)
        .iter()
        .map(|e| ((cfg.e_min - e) / cfg.e_min).max(0.0))
        .fold(0.0, f64::max);
    let split = if ts.eta > 0.0 && ts.eta < 1.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let finite = if x.is_finite() { 0.0 } else { f64::INFINITY };

    FeasibilityReport {
        tol,
        families: vec![
            family("beam_power_cap", beam.max(finite)),
            family("cell_power", cell),
            family("network_power", network),
            family("energy_harvesting", eh),
            family("time_split", split),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cplx::CMat;
    use crate::model::{generate_channels, Geometry};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// One cell, one UE, one antenna, single-antenna eavesdropper.
    fn single_link(h: C64, hev: C64, cfg: &NetworkConfig) -> ChannelSet {
        let mut cs = ChannelSet {
            cells: 1,
            users: 1,
            zone1: 1,
            antennas: 1,
            ev_antennas: 1,
            h: vec![vec![h]],
            hev: vec![CMat::from_columns(vec![vec![hev]])],
            eps_ue: vec![0.0],
            eps_ev: vec![0.0],
            geometry: Geometry {
                base_stations: vec![[0.0, 0.0]],
                users: vec![[1.0, 0.0]],
                eavesdroppers: vec![[2.0, 0.0]],
            },
        };
        cs.fill_radii(cfg);
        cs
    }

    fn tiny_cfg() -> NetworkConfig {
        NetworkConfig {
            cells: 1,
            users: 1,
            zone1: 1,
            antennas: 1,
            ev_antennas: 1,
            eps0: 0.0,
            eps1: 0.0,
            sigma_a2: 1.0,
            ..NetworkConfig::reference()
        }
    }

    fn reference_case(seed: u64) -> (NetworkConfig, ChannelSet, BeamformerSet, TimeSplit) {
        let cfg = NetworkConfig {
            seed,
            ..NetworkConfig::reference()
        };
        let cs = generate_channels(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let x = BeamformerSet::random(&cs, 0.2, &mut rng);
        let ts = TimeSplit::from_eta(rng.gen_range(0.05..0.95)).unwrap();
        (cfg, cs, x, ts)
    }

    #[test]
    fn harvested_energy_examples() {
        let cfg = NetworkConfig {
            zeta: 0.5,
            ..tiny_cfg()
        };
        let cs = single_link(c(2f64.sqrt(), 0.0), c(0.0, 0.0), &cfg);
        let ts = TimeSplit::from_eta(0.5).unwrap();
        let zero = BeamformerSet::zeros_like(&cs);
        assert_eq!(
            harvested_energy(&cs, &zero, ts, &cfg),
            vec![0.5 * 0.5 * 1.0]
        );

        let mut x = zero.clone();
        x.xe[0][0] = c(1.0, 0.0);
        let no_noise = NetworkConfig {
            sigma_a2: 0.0,
            ..cfg.clone()
        };
        let e = harvested_energy(&cs, &x, ts, &no_noise)[0];
        assert!((e - 0.5).abs() < 1e-12);

        let (cfg, cs, x, ts) = reference_case(3);
        let base = cfg.zeta * ts.eta * cfg.sigma_a2;
        let e1 = harvested_energy(&cs, &x, ts, &cfg);
        let e2 = harvested_energy(&cs, &x.scaled(2.0), ts, &cfg);
        for (a, b) in e1.iter().zip(&e2) {
            assert!(((b - base) / (a - base) - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ue_rate_examples() {
        let cfg = tiny_cfg();
        let cs = single_link(c(0.0, 1.0), c(0.0, 0.0), &cfg);
        let ts = TimeSplit::from_eta(0.3).unwrap();
        let mut x = BeamformerSet::zeros_like(&cs);
        assert_eq!(worst_ue_rate(&cs, &x, ts, &cfg), vec![0.0]);
        x.xi[0][0] = c(1.0, 0.0); // |hᴴx|² = 1 = σ²
        let r = worst_ue_rate(&cs, &x, ts, &cfg)[0];
        assert!((r - 0.7 * std::f64::consts::LN_2).abs() < 1e-14);

        let heavy = NetworkConfig {
            eps1: 2.0,
            ..cfg.clone()
        };
        let cs = single_link(c(0.0, 1.0), c(0.0, 0.0), &heavy);
        assert_eq!(worst_ue_rate(&cs, &x, ts, &heavy), vec![0.0]);
    }

    #[test]
    fn ev_sinr_examples() {
        let cfg = tiny_cfg();
        let cs = single_link(c(1.0, 0.0), c(0.0, 0.0), &cfg);
        let ts = TimeSplit::from_eta(0.4).unwrap();
        let mut x = BeamformerSet::zeros_like(&cs);
        x.xi[0][0] = c(1.0, 1.0);
        assert_eq!(worst_ev_sinr(&cs, &x, ts, &cfg).unwrap(), vec![0.0]);

        let cs = single_link(c(1.0, 0.0), c(0.5, 0.5), &cfg);
        let s = worst_ev_sinr(&cs, &x, ts, &cfg).unwrap()[0];
        let want = 1.0 / (cfg.sigma_a2 / 0.6);
        assert!((s - want).abs() < 1e-14);
    }

    #[test]
    fn ev_sinr_decreases_with_eta_under_jamming() {
        let (cfg, cs, x, _) = reference_case(5);
        for k in 0..cs.cells {
            assert!(ev_jamming(&cs, &x, k) > 0.0);
        }
        let lo = worst_ev_sinr(&cs, &x, TimeSplit::from_eta(0.3).unwrap(), &cfg).unwrap();
        let hi = worst_ev_sinr(&cs, &x, TimeSplit::from_eta(0.6).unwrap(), &cfg).unwrap();
        for (a, b) in lo.iter().zip(&hi) {
            assert!(b < a);
        }
    }

    #[test]
    fn nonpositive_denominator_is_an_error() {
        let cfg = NetworkConfig {
            eps0: 5.0,
            ..tiny_cfg()
        };
        let cs = single_link(c(1.0, 0.0), c(1.0, 0.0), &cfg);
        let mut x = BeamformerSet::zeros_like(&cs);
        x.xe[0][0] = c(10.0, 0.0);
        x.xi[0][0] = c(1.0, 0.0);
        let ts = TimeSplit::from_eta(0.9).unwrap();
        assert!(matches!(
            secrecy_rate(&cs, &x, ts, &cfg),
            Err(MetricError::NonPositiveDenominator { .. })
        ));
    }

    #[test]
    fn secrecy_rate_examples() {
        let cfg = tiny_cfg();
        let cs = single_link(c(0.3, -0.2), c(0.0, 0.0), &cfg);
        let ts = TimeSplit::from_eta(0.2).unwrap();
        let mut x = BeamformerSet::zeros_like(&cs);
        x.xi[0][0] = c(3.0, 1.0);
        assert_eq!(
            secrecy_rate(&cs, &x, ts, &cfg).unwrap(),
            worst_ue_rate(&cs, &x, ts, &cfg)
        );
        let zero = BeamformerSet::zeros_like(&cs);
        assert_eq!(secrecy_rate(&cs, &zero, ts, &cfg).unwrap(), vec![0.0]);
    }

    /// Term-by-term evaluation written directly against the definitions,
    /// iterating over explicit interferer lists instead of the helpers.
    fn secrecy_reference(
        cs: &ChannelSet,
        x: &BeamformerSet,
        eta: f64,
        cfg: &NetworkConfig,
        k: usize,
        n: usize,
    ) -> f64 {
        let (kc, nu, n1) = (cs.cells, cs.users, cs.zone1);
        let h = &cs.h[(k * kc + k) * nu + n];
        let xs = &x.xi[k * nu + n];
        let sig = inner(h, xs).norm_sqr() - cs.eps_ue[(k * kc + k) * nu + n] * norm_sqr(xs);
        let mut interf = cfg.sigma_a2;
        for kb in 0..kc {
            for nb in 0..nu {
                if (kb, nb) == (k, n) {
                    continue;
                }
                let l = (kb * kc + k) * nu + n;
                let v = &x.xi[kb * nu + nb];
                interf += inner(&cs.h[l], v).norm_sqr() + cs.eps_ue[l] * norm_sqr(v);
            }
        }
        let f1 = (1.0 + sig.max(0.0) / interf).ln();
        let ev = |kb: usize, v: &[C64]| {
            let m = &cs.hev[kb * kc + k];
            let mut s = 0.0;
            for j in 0..m.cols {
                s += inner(m.col(j), v).norm_sqr();
            }
            s
        };
        let num = ev(k, xs) + cs.eps_ev[k * kc + k] * norm_sqr(xs);
        let mut jam = 0.0;
        for kb in 0..kc {
            for nb in 0..n1 {
                let v = &x.xe[kb * n1 + nb];
                jam += ev(kb, v) - cs.eps_ev[kb * kc + k] * norm_sqr(v);
            }
        }
        let mut rest = 0.0;
        for kb in 0..kc {
            for nb in 0..nu {
                if (kb, nb) == (k, n) {
                    continue;
                }
                let v = &x.xi[kb * nu + nb];
                rest += ev(kb, v) - cs.eps_ev[kb * kc + k] * norm_sqr(v);
            }
        }
        let q =
            eta / (1.0 - eta) * jam + rest + cfg.ev_antennas as f64 * cfg.sigma_a2 / (1.0 - eta);
        (1.0 - eta) * f1 - (1.0 + num / q).ln()
    }

    #[test]
    fn secrecy_rate_matches_reference_evaluation() {
        for seed in 0..5 {
            let (cfg, cs, x, ts) = reference_case(seed);
            let f = secrecy_rate(&cs, &x, ts, &cfg).unwrap();
            for k in 0..cs.cells {
                for n in 0..cs.users {
                    let want = secrecy_reference(&cs, &x, ts.eta, &cfg, k, n);
                    assert!((f[k * cs.users + n] - want).abs() <= 1e-10 * want.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn mu_form_matches_eta_form() {
        for seed in 0..5 {
            let (cfg, cs, x, ts) = reference_case(seed);
            for k in 0..cs.cells {
                for n in 0..cs.users {
                    let a = q_bar(&cs, &x, &cfg, ts.mu, k, n);
                    let b = q_eta(&cs, &x, &cfg, ts.eta, k, n);
                    assert!((a - b).abs() <= 1e-10 * b.abs());
                    let f_eta = secrecy_reference(&cs, &x, ts.eta, &cfg, k, n);
                    let f_mu = secrecy_bar(&cs, &x, &cfg, ts.mu, k, n).unwrap();
                    assert!((f_eta - f_mu).abs() <= 1e-10 * f_eta.abs().max(1e-3));
                }
                let (g, _) = powers(&x, ts);
                assert!((cell_power_bar(&x, ts.mu, k) - g[k]).abs() <= 1e-12 * g[k].max(1.0));
            }
        }
    }

    #[test]
    fn power_examples() {
        let (_, cs, _, _) = reference_case(1);
        let ts = TimeSplit::from_eta(0.5).unwrap();
        let mut x = BeamformerSet::zeros_like(&cs);
        assert_eq!(powers(&x, ts).1, 0.0);
        // Σ‖xE‖² = Σ‖xI‖² = 1 in cell 0.
        x.xe_mut(0, 0)[0] = c(1.0, 0.0);
        x.xi_mut(0, 0)[0] = c(0.0, 1.0);
        let (g, total) = powers(&x, ts);
        assert!((g[0] - 1.0).abs() < 1e-15);
        assert_eq!(total, g.iter().sum::<f64>());

        let (_, _, xr, tsr) = reference_case(2);
        let (g, total) = powers(&xr, tsr);
        assert_eq!(total, g.iter().sum::<f64>());
    }

    #[test]
    fn see_examples() {
        let (cfg, cs, _, ts) = reference_case(4);
        let zero = BeamformerSet::zeros_like(&cs);
        assert!(see_values(&cs, &zero, ts, &cfg)
            .unwrap()
            .iter()
            .all(|v| *v == 0.0));
        assert!((consumed_power(&cfg, 0.2) - 6.5).abs() < 1e-12);

        let (cfg, cs, x, ts) = reference_case(6);
        let rep = MetricReport::evaluate(&cs, &x, ts, &cfg).unwrap();
        for k in 0..cs.cells {
            assert!((rep.see[k] * rep.cell_consumed[k] - rep.cell_sum_rate[k]).abs() < 1e-12);
        }
        for i in 0..rep.secrecy_rate.len() {
            assert!(rep.secrecy_rate[i] <= rep.ue_rate[i]);
        }
        assert_eq!(
            rep.to_csv(cs.users).lines().count(),
            1 + cs.cells * cs.users
        );
    }

    #[test]
    fn audit_examples() {
        let (cfg, cs, _, ts) = reference_case(0);
        let zero = BeamformerSet::zeros_like(&cs);
        let rep = feasibility_audit(&cs, &zero, ts, &cfg, 1e-6);
        assert!(!rep.family("energy_harvesting").unwrap().pass);
        assert!(rep.family("beam_power_cap").unwrap().pass);

        let tol = 1e-6;
        let mut x = zero.clone();
        x.xi[0][0] = c((cfg.pk_max + 2.0 * tol).sqrt(), 0.0);
        let rep = feasibility_audit(&cs, &x, ts, &cfg, tol);
        assert!(!rep.family("beam_power_cap").unwrap().pass);
    }

    #[test]
    fn scaling_information_beam_never_lowers_signal() {
        let (_, cs, x, _) = reference_case(9);
        for k in 0..cs.cells {
            for n in 0..cs.users {
                let mut y = x.clone();
                for z in y.xi_mut(k, n).iter_mut() {
                    *z *= 1.7;
                }
                let a = rate_numerator(&cs, &x, k, n).max(0.0);
                let b = rate_numerator(&cs, &y, k, n).max(0.0);
                assert!(b >= a);
            }
        }
    }

    #[test]
    fn time_split_round_trip() {
        let ts = TimeSplit::from_eta(0.37).unwrap();
        assert!((ts.mu * (1.0 - ts.eta) - 1.0).abs() < 1e-12);
        let back = TimeSplit::from_mu(ts.mu).unwrap();
        assert!((back.eta - 0.37).abs() < 1e-12);
        assert!(TimeSplit::from_eta(1.0).is_err());
        assert!(TimeSplit::from_mu(1.0).is_err());
    }
}
