//! Convex bounds built around an expansion point: the concave minorant of
//! the user-rate term, the convex majorant of the eavesdropper term, inner
//! approximations of the power and harvesting constraints, and their
//! energy-efficiency counterparts.
//!
//! Each bound carries the scalar coefficients the conic layer needs plus an
//! exact evaluator, so tangency and domination can be checked numerically.

use serde::{Deserialize, Serialize};

use crate::cplx::{inner, norm_sqr, CVec, C64};
use crate::error::BoundError;
use crate::metrics::{
    self, consumed_power, ev_signal, f1_re, f2_bar, phi, q_bar, BeamformerSet, TimeSplit,
};
use crate::model::{ChannelSet, NetworkConfig};

/// Floor on the rate auxiliary, relative to the noise power.
pub const NU_FLOOR: f64 = 1e-9;
/// Strict margin kept inside the trust regions.
pub const TRUST_MARGIN: f64 = 1e-9;

/// A feasible operating point with its auxiliary variables. `beta` is empty
/// when no eavesdropper term is modelled; `t` is empty outside the
/// energy-efficiency problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub x: BeamformerSet,
    pub mu: f64,
    /// `(Re hᴴx)² − ε‖x‖²` per UE.
    pub nu: Vec<f64>,
    /// Squared eavesdropper denominator per UE.
    pub beta: Vec<f64>,
    /// Squared consumed power per cell.
    pub t: Vec<f64>,
}

impl Iterate {
    /// Builds the expansion point at `(x, mu)` with every auxiliary reset to
    /// its tight value.
    pub fn at_point(
        cs: &ChannelSet,
        cfg: &NetworkConfig,
        x: BeamformerSet,
        mu: f64,
        with_eavesdropper: bool,
        with_power_ratio: bool,
    ) -> Self {
        let mut nu = Vec::with_capacity(cs.cells * cs.users);
        let mut beta = Vec::new();
        for k in 0..cs.cells {
            for n in 0..cs.users {
                let v = x.xi(k, n);
                let re = inner(cs.h(k, k, n), v).re;
                nu.push(re * re - cs.eps_ue(k, k, n) * norm_sqr(v));
                if with_eavesdropper {
                    beta.push(q_bar(cs, &x, cfg, mu, k, n).powi(2));
                }
            }
        }
        let t = if with_power_ratio {
            (0..cs.cells)
                .map(|k| consumed_power(cfg, metrics::cell_power_bar(&x, mu, k)).powi(2))
                .collect()
        } else {
            Vec::new()
        };
        Self { x, mu, nu, beta, t }
    }

    pub fn time_split(&self) -> TimeSplit {
        TimeSplit {
            eta: 1.0 - 1.0 / self.mu,
            mu: self.mu,
        }
    }

    /// `√β` per UE.
    pub fn gamma(&self) -> Vec<f64> {
        self.beta.iter().map(|b| b.sqrt()).collect()
    }

    /// `√t` per cell.
    pub fn tau(&self) -> Vec<f64> {
        self.t.iter().map(|t| t.sqrt()).collect()
    }

    pub fn has_eavesdropper(&self) -> bool {
        !self.beta.is_empty()
    }
}

/// Multiplies each information beam by the phase that makes its serving
/// inner product real and nonnegative.
pub fn rotate_phases(x: &BeamformerSet, cs: &ChannelSet) -> BeamformerSet {
    let mut out = x.clone();
    for k in 0..cs.cells {
        for n in 0..cs.users {
            let z = inner(cs.h(k, k, n), x.xi(k, n));
            if z.norm() > 0.0 {
                let rot = z.conj() / z.norm();
                for v in out.xi_mut(k, n).iter_mut() {
                    *v *= rot;
                }
            }
        }
    }
    out
}

/// Coefficients `(a, b, c)` of the tangent plane of `ln(1 + 1/x)/t` at
/// `(1/d, tbar)`, written in terms of the SINR `d`:
/// `ln(1 + s)/t ≥ a − b/s − c·t`.
pub fn log_ratio_coefficients(d: f64, tbar: f64) -> (f64, f64, f64) {
    let l = d.ln_1p();
    (
        2.0 * l / tbar + d / (tbar * (d + 1.0)),
        d * d / (tbar * (d + 1.0)),
        l / (tbar * tbar),
    )
}

fn check_expansion(
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    exp: &Iterate,
    k: usize,
    n: usize,
) -> Result<(f64, f64, f64), BoundError> {
    if !(exp.mu > 1.0) {
        return Err(BoundError::InvalidPoint(format!(
            "mu = {} must exceed 1",
            exp.mu
        )));
    }
    let v = exp.x.xi(k, n);
    let re = inner(cs.h(k, k, n), v).re;
    if re
        < -1e-12
            * (norm_sqr(cs.h(k, k, n)) * norm_sqr(v))
                .sqrt()
                .max(f64::MIN_POSITIVE)
    {
        return Err(BoundError::InvalidExpansion {
            k,
            n,
            reason: format!("serving inner product has negative real part {re:e}"),
        });
    }
    let re = re.max(0.0);
    let ph = phi(cs, &exp.x, cfg, k, n);
    let d = (re * re - cs.eps_ue(k, k, n) * norm_sqr(v)) / ph;
    if d < 0.0 {
        return Err(BoundError::InvalidExpansion {
            k,
            n,
            reason: format!("worst-case SINR {d:e} is negative"),
        });
    }
    Ok((re, ph, d))
}

/// Concave lower bound `a − b·φ(x)/ν − c·μ` on `ln(1 + SINR)/μ`, valid while
/// `0 < ν ≤ ψ(x) − ε‖x‖²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Minorant {
    pub k: usize,
    pub n: usize,
    pub d: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub mu_l: f64,
    /// `Re hᴴx` at the expansion point.
    pub re_l: f64,
    pub phi_l: f64,
    pub eps: f64,
}

impl F1Minorant {
    /// Linearised squared signal `2·re_l·Re(hᴴx) − re_l²`.
    pub fn psi(&self, cs: &ChannelSet, x: &BeamformerSet) -> f64 {
        let re = inner(cs.h(self.k, self.k, self.n), x.xi(self.k, self.n)).re;
        2.0 * self.re_l * re - self.re_l * self.re_l
    }

    /// Largest admissible `ν` at `x`.
    pub fn nu_max(&self, cs: &ChannelSet, x: &BeamformerSet) -> f64 {
        self.psi(cs, x) - self.eps * norm_sqr(x.xi(self.k, self.n))
    }

    pub fn value(&self, phi_x: f64, nu: f64, mu: f64) -> f64 {
        if self.b == 0.0 {
            return self.a - self.c * mu;
        }
        self.a - self.b * phi_x / nu - self.c * mu
    }

    /// Bound value using the largest admissible `ν`, or `None` outside the
    /// validity region.
    pub fn value_at(
        &self,
        cs: &ChannelSet,
        cfg: &NetworkConfig,
        x: &BeamformerSet,
        mu: f64,
    ) -> Option<f64> {
        let nu = self.nu_max(cs, x);
        (nu > 0.0).then(|| self.value(phi(cs, x, cfg, self.k, self.n), nu, mu))
    }

    /// The function being bounded.
    pub fn target(&self, cs: &ChannelSet, cfg: &NetworkConfig, x: &BeamformerSet, mu: f64) -> f64 {
        f1_re(cs, x, cfg, self.k, self.n) / mu
    }
}

pub fn minorant_f1(
    exp: &Iterate,
    cs: &ChannelSet,
    cfg: &NetworkConfig,
) -> Result<Vec<F1Minorant>, BoundError> {
    let mut out = Vec::with_capacity(cs.cells * cs.users);
    for k in 0..cs.cells {
        for n in 0..cs.users {
            let (re, ph, d) = check_expansion(cs, cfg, exp, k, n)?;
            let (a, b, c) = log_ratio_coefficients(d, exp.mu);
            out.push(F1Minorant {
                k,
                n,
                d,
                a,
                b,
                c,
                mu_l: exp.mu,
                re_l: re,
                phi_l: ph,
                eps: cs.eps_ue(k, k, n),
            });
        }
    }
    Ok(out)
}

/// Linearised eavesdropper denominator around the expansion point; every
/// nonconvex piece of `q̄/(μ − 1)` is replaced by its tangent from below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QLinear {
    pub k: usize,
    pub n: usize,
    pub mu_l: f64,
    /// `H gℓ` for every jamming beam (indexed `k̄ * N1 + n̄`), so that
    /// `Re⟨gℓ, Hᴴx⟩ = Re(aᴴx)`.
    pub jam_pull: Vec<CVec>,
    /// `Σ ‖Hᴴ xEℓ‖²` over jamming beams.
    pub jam_const: f64,
    /// Pulled-back vectors for the other information beams (indexed
    /// `k̄ * N + n̄`, `None` for the UE's own beam).
    pub other_pull: Vec<Option<CVec>>,
    /// `Σ ‖Hᴴ x_oℓ‖²` over the other information beams.
    pub other_const: f64,
    /// Uncertainty radius of each eavesdropper link, indexed `k̄`.
    pub eps_ev: Vec<f64>,
    pub noise: f64,
}

impl QLinear {
    fn new(
        cs: &ChannelSet,
        cfg: &NetworkConfig,
        x_l: &BeamformerSet,
        mu_l: f64,
        k: usize,
        n: usize,
    ) -> Self {
        let mut jam_pull = Vec::with_capacity(cs.cells * cs.zone1);
        let mut jam_const = 0.0;
        let mut other_pull = Vec::with_capacity(cs.cells * cs.users);
        let mut other_const = 0.0;
        for kb in 0..cs.cells {
            let hm = cs.hev(kb, k);
            for nb in 0..cs.zone1 {
                let g = hm.herm_mul(x_l.xe(kb, nb));
                jam_const += norm_sqr(&g);
                jam_pull.push(pull_back(hm, &g));
            }
            for nb in 0..cs.users {
                if kb == k && nb == n {
                    other_pull.push(None);
                    continue;
                }
                let g = hm.herm_mul(x_l.xi(kb, nb));
                other_const += norm_sqr(&g);
                other_pull.push(Some(pull_back(hm, &g)));
            }
        }
        Self {
            k,
            n,
            mu_l,
            jam_pull,
            jam_const,
            other_pull,
            other_const,
            eps_ev: (0..cs.cells).map(|kb| cs.eps_ev(kb, k)).collect(),
            noise: cfg.ev_antennas as f64 * cfg.sigma_a2,
        }
    }

    /// Evaluates the linearised denominator with exact convex pieces
    /// (`‖xE‖²` and `‖x_o‖²/(μ − 1)`).
    pub fn value(&self, cs: &ChannelSet, x: &BeamformerSet, mu: f64) -> f64 {
        let dl = self.mu_l - 1.0;
        let dm = mu - 1.0;
        let mut acc = 0.0;
        for kb in 0..cs.cells {
            for nb in 0..cs.zone1 {
                let v = x.xe(kb, nb);
                acc += 2.0 * inner(&self.jam_pull[kb * cs.zone1 + nb], v).re
                    - self.eps_ev[kb] * norm_sqr(v);
            }
            for nb in 0..cs.users {
                if let Some(a) = &self.other_pull[kb * cs.users + nb] {
                    let v = x.xi(kb, nb);
                    acc += 2.0 / dl * inner(a, v).re - self.eps_ev[kb] * norm_sqr(v) / dm;
                }
            }
        }
        acc - self.jam_const - self.other_const * dm / (dl * dl)
            + (1.0 + 2.0 / dl - dm / (dl * dl)) * self.noise
    }
}

/// `H g` for `H` of size `M × N_ev`.
fn pull_back(hm: &crate::cplx::CMat, g: &[C64]) -> CVec {
    let mut out = vec![C64::new(0.0, 0.0); hm.rows];
    for (j, gj) in g.iter().enumerate() {
        for (o, h) in out.iter_mut().zip(hm.col(j)) {
            *o += h * gj;
        }
    }
    out
}

/// Convex upper bound `f̄²ℓ + κ·(S(x)/√β − Sℓ/q̄ℓ)` on the eavesdropper
/// term, valid under the linearised denominator constraint and the trust
/// region `μ < 2μℓ − 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F2Majorant {
    pub k: usize,
    pub n: usize,
    pub mu_l: f64,
    /// `q̄ = √βℓ` at the expansion point.
    pub q_l: f64,
    /// Eavesdropped signal at the expansion point.
    pub s_l: f64,
    pub f2_l: f64,
    pub kappa: f64,
    pub q_lin: QLinear,
}

impl F2Majorant {
    pub fn value(&self, s: f64, beta: f64) -> f64 {
        self.f2_l + self.kappa * (s / beta.sqrt() - self.s_l / self.q_l)
    }

    /// Left side of the convexified denominator constraint,
    /// `½(β/(√βℓ(μℓ−1)) + √βℓ(μℓ−1)/(μ−1)²)`.
    pub fn denominator_lhs(&self, beta: f64, mu: f64) -> f64 {
        let c = self.q_l * (self.mu_l - 1.0);
        0.5 * (beta / c + c / ((mu - 1.0) * (mu - 1.0)))
    }

    /// Largest `β` satisfying the convexified constraint at `(x, μ)`, or
    /// `None` when no positive `β` does.
    pub fn beta_max(&self, cs: &ChannelSet, x: &BeamformerSet, mu: f64) -> Option<f64> {
        let c = self.q_l * (self.mu_l - 1.0);
        let b = c * (2.0 * self.q_lin.value(cs, x, mu) - c / ((mu - 1.0) * (mu - 1.0)));
        (b > 0.0).then_some(b)
    }

    pub fn trust_upper(&self) -> f64 {
        2.0 * self.mu_l - 1.0 - TRUST_MARGIN
    }

    pub fn value_at(&self, cs: &ChannelSet, x: &BeamformerSet, mu: f64) -> Option<f64> {
        if !(mu > 1.0 && mu <= self.trust_upper()) {
            return None;
        }
        let beta = self.beta_max(cs, x, mu)?;
        Some(self.value(ev_signal(cs, x, self.k, self.n), beta))
    }

    pub fn target(
        &self,
        cs: &ChannelSet,
        cfg: &NetworkConfig,
        x: &BeamformerSet,
        mu: f64,
    ) -> Option<f64> {
        f2_bar(cs, x, cfg, mu, self.k, self.n).ok()
    }
}

pub fn majorant_f2(
    exp: &Iterate,
    cs: &ChannelSet,
    cfg: &NetworkConfig,
) -> Result<Vec<F2Majorant>, BoundError> {
    if !(exp.mu > 1.0) {
        return Err(BoundError::InvalidPoint(format!(
            "mu = {} must exceed 1",
            exp.mu
        )));
    }
    let mut out = Vec::with_capacity(cs.cells * cs.users);
    for k in 0..cs.cells {
        for n in 0..cs.users {
            let q = q_bar(cs, &exp.x, cfg, exp.mu, k, n);
            if !(q > 0.0) {
                return Err(BoundError::InvalidExpansion {
                    k,
                    n,
                    reason: format!("eavesdropper denominator {q:e} is not positive"),
                });
            }
            let s = ev_signal(cs, &exp.x, k, n);
            out.push(F2Majorant {
                k,
                n,
                mu_l: exp.mu,
                q_l: q,
                s_l: s,
                f2_l: (s / q).ln_1p(),
                kappa: 1.0 / (1.0 + s / q),
                q_lin: QLinear::new(cs, cfg, &exp.x, exp.mu, k, n),
            });
        }
    }
    Ok(out)
}

/// Inner approximation of the per-cell and network power budgets: the
/// concave `−‖xE‖²/μ` terms are replaced by their tangent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerInner {
    pub mu_l: f64,
    pub xe_l: Vec<CVec>,
    pub zone1: usize,
    pub cells: usize,
}

impl PowerInner {
    pub fn cell_lhs(&self, x: &BeamformerSet, mu: f64, k: usize) -> f64 {
        let mut acc = x.cell_info_power(k) / mu;
        for n1 in 0..self.zone1 {
            let xl = &self.xe_l[k * self.zone1 + n1];
            let v = x.xe(k, n1);
            acc += norm_sqr(v) - 2.0 * inner(xl, v).re / self.mu_l
                + mu * norm_sqr(xl) / (self.mu_l * self.mu_l);
        }
        acc
    }

    pub fn network_lhs(&self, x: &BeamformerSet, mu: f64) -> f64 {
        (0..self.cells).map(|k| self.cell_lhs(x, mu, k)).sum()
    }
}

pub fn inner_power_constraints(exp: &Iterate, _cfg: &NetworkConfig) -> PowerInner {
    PowerInner {
        mu_l: exp.mu,
        xe_l: exp.x.xe.clone(),
        zone1: exp.x.zone1,
        cells: exp.x.cells,
    }
}

/// Inner approximation of the harvesting constraint of zone-1 UE `(k, n1)`:
/// the received energy-beam power is replaced by its tangent from below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EhInner {
    pub k: usize,
    pub n1: usize,
    /// `hᴴ xEℓ` for each energy beam, indexed `k̄ * N1 + n̄`.
    pub inner_l: Vec<C64>,
    /// `e_min/ζ`.
    pub target: f64,
    pub noise: f64,
}

impl EhInner {
    pub fn lhs(&self, cs: &ChannelSet, x: &BeamformerSet) -> f64 {
        let mut acc = 0.0;
        for kb in 0..cs.cells {
            let h = cs.h(kb, self.k, self.n1);
            for nb in 0..cs.zone1 {
                let c = self.inner_l[kb * cs.zone1 + nb];
                acc += 2.0 * (c.conj() * inner(h, x.xe(kb, nb))).re - c.norm_sqr();
            }
        }
        acc
    }

    /// `(e_min/ζ)(1 + 1/(μ − 1)) − σ²`.
    pub fn rhs(&self, mu: f64) -> f64 {
        self.target * (1.0 + 1.0 / (mu - 1.0)) - self.noise
    }
}

pub fn inner_eh_constraint(exp: &Iterate, cs: &ChannelSet, cfg: &NetworkConfig) -> Vec<EhInner> {
    let mut out = Vec::with_capacity(cs.cells * cs.zone1);
    for k in 0..cs.cells {
        for n1 in 0..cs.zone1 {
            let mut inner_l = Vec::with_capacity(cs.cells * cs.zone1);
            for kb in 0..cs.cells {
                for nb in 0..cs.zone1 {
                    inner_l.push(inner(cs.h(kb, k, n1), exp.x.xe(kb, nb)));
                }
            }
            out.push(EhInner {
                k,
                n1,
                inner_l,
                target: cfg.e_min / cfg.zeta,
                noise: cfg.sigma_a2,
            });
        }
    }
    out
}

/// Concave lower bound on `ln(1 + SINR)/(μ√t)`:
/// `A − B·φ/ν − C·(√tℓ/(2μℓ)·μ² + μℓ/(2√tℓ)·t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiMinorant {
    pub rate: F1Minorant,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `√tℓ`.
    pub tau_l: f64,
}

impl PhiMinorant {
    pub fn value(&self, phi_x: f64, nu: f64, mu: f64, t: f64) -> f64 {
        let m = &self.rate;
        let ratio = if self.b == 0.0 {
            0.0
        } else {
            self.b * phi_x / nu
        };
        self.a
            - ratio
            - self.c * (self.tau_l / (2.0 * m.mu_l) * mu * mu + m.mu_l / (2.0 * self.tau_l) * t)
    }

    pub fn value_at(
        &self,
        cs: &ChannelSet,
        cfg: &NetworkConfig,
        x: &BeamformerSet,
        mu: f64,
        t: f64,
    ) -> Option<f64> {
        let nu = self.rate.nu_max(cs, x);
        (nu > 0.0).then(|| self.value(phi(cs, x, cfg, self.rate.k, self.rate.n), nu, mu, t))
    }

    pub fn target(
        &self,
        cs: &ChannelSet,
        cfg: &NetworkConfig,
        x: &BeamformerSet,
        mu: f64,
        t: f64,
    ) -> f64 {
        f1_re(cs, x, cfg, self.rate.k, self.rate.n) / (mu * t.sqrt())
    }
}

fn see_tau(exp: &Iterate) -> Result<&[f64], BoundError> {
    if exp.t.is_empty() || exp.t.iter().any(|t| !(*t > 0.0)) {
        return Err(BoundError::InvalidPoint(
            "power-ratio auxiliaries must be present and positive".into(),
        ));
    }
    Ok(&exp.t)
}

pub fn see_minorant_phi(
    exp: &Iterate,
    cs: &ChannelSet,
    cfg: &NetworkConfig,
) -> Result<Vec<PhiMinorant>, BoundError> {
    let t = see_tau(exp)?;
    Ok(minorant_f1(exp, cs, cfg)?
        .into_iter()
        .map(|m| {
            let tau_l = t[m.k].sqrt();
            let (a, b, c) = log_ratio_coefficients(m.d, m.mu_l * tau_l);
            PhiMinorant {
                rate: m,
                a,
                b,
                c,
                tau_l,
            }
        })
        .collect())
}

/// Convex upper bound on `f̄²/√t`:
/// `f̄²ℓ/√t + κ(S/√(tβ) − Sℓ/(2q̄ℓ√tℓ)·(3 − t/tℓ))`, valid for `0 < t ≤ 3tℓ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiMajorant {
    pub ev: F2Majorant,
    pub t_l: f64,
}

impl PsiMajorant {
    pub fn value(&self, s: f64, beta: f64, t: f64) -> f64 {
        let e = &self.ev;
        e.f2_l / t.sqrt()
            + e.kappa
                * (s / (t * beta).sqrt()
                    - e.s_l / (2.0 * e.q_l * self.t_l.sqrt()) * (3.0 - t / self.t_l))
    }

    pub fn value_at(&self, cs: &ChannelSet, x: &BeamformerSet, mu: f64, t: f64) -> Option<f64> {
        if !(t > 0.0 && t <= 3.0 * self.t_l) || !(mu > 1.0 && mu <= self.ev.trust_upper()) {
            return None;
        }
        let beta = self.ev.beta_max(cs, x, mu)?;
        Some(self.value(ev_signal(cs, x, self.ev.k, self.ev.n), beta, t))
    }

    pub fn target(
        &self,
        cs: &ChannelSet,
        cfg: &NetworkConfig,
        x: &BeamformerSet,
        mu: f64,
        t: f64,
    ) -> Option<f64> {
        Some(self.ev.target(cs, cfg, x, mu)? / t.sqrt())
    }
}

pub fn see_majorant_psi(
    exp: &Iterate,
    cs: &ChannelSet,
    cfg: &NetworkConfig,
) -> Result<Vec<PsiMajorant>, BoundError> {
    let t = see_tau(exp)?;
    Ok(majorant_f2(exp, cs, cfg)?
        .into_iter()
        .map(|ev| PsiMajorant { t_l: t[ev.k], ev })
        .collect())
}

/// Shape of one bound term, for inspection dumps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PieceKind {
    Linear,
    ConvexQuadratic,
    QuadraticOverLinear,
    Reciprocal,
    EpigraphCone,
}

/// One named term of a bound with its coefficients, for JSON dumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundPiece {
    pub kind: PieceKind,
    pub tag: String,
    pub cell: usize,
    pub ue: Option<usize>,
    pub coefficients: Vec<f64>,
}

/// Flattens the bounds at `exp` into inspectable pieces.
pub fn bound_pieces(
    exp: &Iterate,
    cs: &ChannelSet,
    cfg: &NetworkConfig,
) -> Result<Vec<BoundPiece>, BoundError> {
    let mut out = Vec::new();
    for m in minorant_f1(exp, cs, cfg)? {
        out.push(BoundPiece {
            kind: PieceKind::QuadraticOverLinear,
            tag: "rate_minorant".into(),
            cell: m.k,
            ue: Some(m.n),
            coefficients: vec![m.a, m.b, m.c, m.d],
        });
        out.push(BoundPiece {
            kind: PieceKind::ConvexQuadratic,
            tag: "rate_signal_cap".into(),
            cell: m.k,
            ue: Some(m.n),
            coefficients: vec![m.re_l, m.eps],
        });
    }
    if exp.has_eavesdropper() {
        for m in majorant_f2(exp, cs, cfg)? {
            out.push(BoundPiece {
                kind: PieceKind::QuadraticOverLinear,
                tag: "eavesdropper_majorant".into(),
                cell: m.k,
                ue: Some(m.n),
                coefficients: vec![m.f2_l, m.kappa, m.s_l, m.q_l],
            });
            out.push(BoundPiece {
                kind: PieceKind::Reciprocal,
                tag: "eavesdropper_denominator".into(),
                cell: m.k,
                ue: Some(m.n),
                coefficients: vec![
                    m.q_l * (m.mu_l - 1.0),
                    m.q_lin.jam_const,
                    m.q_lin.other_const,
                ],
            });
        }
    }
    for k in 0..cs.cells {
        out.push(BoundPiece {
            kind: PieceKind::QuadraticOverLinear,
            tag: "cell_power".into(),
            cell: k,
            ue: None,
            coefficients: vec![exp.mu, exp.x.cell_energy_power(k)],
        });
    }
    for e in inner_eh_constraint(exp, cs, cfg) {
        out.push(BoundPiece {
            kind: PieceKind::Linear,
            tag: "energy_harvesting".into(),
            cell: e.k,
            ue: Some(e.n1),
            coefficients: vec![e.target, e.noise],
        });
    }
    Ok(out)
}

/// The elementary inequalities behind every bound, written as
/// `(larger side, smaller side)` so that `first ≥ second` on the stated
/// domain, with equality at the expansion point.
pub mod inequalities {
    use crate::cplx::{inner, norm_sqr, C64};

    /// `ln(1 + 1/x)/t` against its tangent plane at `(x̄, t̄)`; all positive.
    pub fn log_inverse(x: f64, t: f64, xb: f64, tb: f64) -> (f64, f64) {
        let l = (1.0 / xb).ln_1p();
        (
            (1.0 / x).ln_1p() / t,
            2.0 * l / tb + 1.0 / (tb * (xb + 1.0)) - x / ((xb + 1.0) * xb * tb) - l * t / (tb * tb),
        )
    }

    /// `ln(1 + s)/t ≥ a − b/s − c·t` with coefficients from `(s̄, t̄)`.
    pub fn log_sinr(s: f64, t: f64, sb: f64, tb: f64) -> (f64, f64) {
        let (a, b, c) = super::log_ratio_coefficients(sb, tb);
        (s.ln_1p() / t, a - b / s - c * t)
    }

    /// `ln(1 + s) ≤ ln(1 + s̄) + (s − s̄)/(1 + s̄)` for `s, s̄ ≥ 0`.
    pub fn log_concavity(s: f64, sb: f64) -> (f64, f64) {
        (sb.ln_1p() + (s - sb) / (1.0 + sb), s.ln_1p())
    }

    /// `‖x‖²/y ≥ 2Re(x̄ᴴx)/ȳ − ‖x̄‖²·y/ȳ²` for `y, ȳ > 0`.
    pub fn quad_over_linear(x: &[C64], y: f64, xb: &[C64], yb: f64) -> (f64, f64) {
        (
            norm_sqr(x) / y,
            2.0 * inner(xb, x).re / yb - norm_sqr(xb) * y / (yb * yb),
        )
    }

    /// `‖x‖² ≥ 2Re(x̄ᴴx) − ‖x̄‖²`.
    pub fn squared_norm(x: &[C64], xb: &[C64]) -> (f64, f64) {
        (norm_sqr(x), 2.0 * inner(xb, x).re - norm_sqr(xb))
    }

    /// `|hᴴx|² ≥ 2Re(conj(hᴴx̄)·hᴴx) − |hᴴx̄|²`.
    pub fn projected_power(h: &[C64], x: &[C64], xb: &[C64]) -> (f64, f64) {
        let z = inner(h, x);
        let zb = inner(h, xb);
        (z.norm_sqr(), 2.0 * (zb.conj() * z).re - zb.norm_sqr())
    }

    /// `1/(μ − 1) ≥ 2/(μ̄ − 1) − (μ − 1)/(μ̄ − 1)²` for `μ, μ̄ > 1`.
    pub fn reciprocal(mu: f64, mub: f64) -> (f64, f64) {
        let d = mub - 1.0;
        (1.0 / (mu - 1.0), 2.0 / d - (mu - 1.0) / (d * d))
    }

    /// `½(β/(√β̄(μ̄−1)) + √β̄(μ̄−1)/(μ−1)²) ≥ √β/(μ − 1)`.
    pub fn sqrt_ratio(beta: f64, mu: f64, betab: f64, mub: f64) -> (f64, f64) {
        let c = betab.sqrt() * (mub - 1.0);
        (
            0.5 * (beta / c + c / ((mu - 1.0) * (mu - 1.0))),
            beta.sqrt() / (mu - 1.0),
        )
    }

    /// `1/√t ≥ (3 − t/t̄)/(2√t̄)` for `t, t̄ > 0`.
    pub fn inverse_sqrt(t: f64, tb: f64) -> (f64, f64) {
        (1.0 / t.sqrt(), (3.0 - t / tb) / (2.0 * tb.sqrt()))
    }

    /// `(√t̄/(2μ̄))μ² + (μ̄/(2√t̄))t ≥ μ√t`.
    pub fn product_split(mu: f64, t: f64, mub: f64, tb: f64) -> (f64, f64) {
        let sb = tb.sqrt();
        (
            sb / (2.0 * mub) * mu * mu + mub / (2.0 * sb) * t,
            mu * t.sqrt(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_channels;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn expansion(seed: u64) -> (NetworkConfig, ChannelSet, Iterate) {
        let cfg = NetworkConfig {
            seed,
            ..NetworkConfig::reference()
        };
        let cs = generate_channels(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = rotate_phases(&BeamformerSet::random(&cs, 0.2, &mut rng), &cs);
        let mu = rng.gen_range(1.1..3.0);
        (
            cfg.clone(),
            cs.clone(),
            Iterate::at_point(&cs, &cfg, x, mu, true, true),
        )
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn coefficients_vanish_at_zero_sinr_and_are_positive_otherwise() {
        assert_eq!(log_ratio_coefficients(0.0, 1.5), (0.0, 0.0, 0.0));
        let (a, b, c) = log_ratio_coefficients(0.3, 1.2);
        assert!(a > 0.0 && b > 0.0 && c > 0.0);
    }

    #[test]
    fn rate_minorant_is_tight() {
        let (cfg, cs, exp) = expansion(1);
        for m in minorant_f1(&exp, &cs, &cfg).unwrap() {
            let v = m.value_at(&cs, &cfg, &exp.x, exp.mu).unwrap();
            assert!(rel(v, m.target(&cs, &cfg, &exp.x, exp.mu)) < 1e-12);
        }
    }

    #[test]
    fn eavesdropper_majorant_is_tight_and_denominator_constraint_active() {
        let (cfg, cs, exp) = expansion(2);
        for m in majorant_f2(&exp, &cs, &cfg).unwrap() {
            let beta = exp.beta[m.k * cs.users + m.n];
            let s = ev_signal(&cs, &exp.x, m.k, m.n);
            let target = m.target(&cs, &cfg, &exp.x, exp.mu).unwrap();
            assert!(rel(m.value(s, beta), target) < 1e-12);
            let qlin = m.q_lin.value(&cs, &exp.x, exp.mu);
            assert!(rel(qlin * (exp.mu - 1.0), m.q_l) < 1e-10);
            assert!(rel(m.denominator_lhs(beta, exp.mu), qlin) < 1e-10);
        }
    }

    #[test]
    fn zero_target_beam_reduces_majorant_to_constant() {
        let (cfg, cs, mut exp) = expansion(3);
        exp.x
            .xi_mut(0, 0)
            .iter_mut()
            .for_each(|z| *z = C64::new(0.0, 0.0));
        let m = &majorant_f2(&exp, &cs, &cfg).unwrap()[0];
        assert_eq!(m.s_l, 0.0);
        assert_eq!(m.value(0.0, 2.0), m.f2_l - m.kappa * m.s_l / m.q_l);
    }

    #[test]
    fn power_inner_is_tight_and_collapses_without_energy_beams() {
        let (cfg, _, exp) = expansion(4);
        let p = inner_power_constraints(&exp, &cfg);
        for k in 0..exp.x.cells {
            let exact = metrics::cell_power_bar(&exp.x, exp.mu, k);
            assert!(rel(p.cell_lhs(&exp.x, exp.mu, k), exact) < 1e-12);
        }
        let mut zero_e = exp.clone();
        zero_e
            .x
            .xe
            .iter_mut()
            .for_each(|v| v.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0)));
        let p = inner_power_constraints(&zero_e, &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cs = generate_channels(&cfg).unwrap();
        let y = BeamformerSet::random(&cs, 0.3, &mut rng);
        let want = y.cell_energy_power(0) + y.cell_info_power(0) / 1.7;
        assert!(rel(p.cell_lhs(&y, 1.7, 0), want) < 1e-12);
    }

    #[test]
    fn eh_inner_is_tight_and_has_expected_limit() {
        let (cfg, cs, exp) = expansion(5);
        for e in inner_eh_constraint(&exp, &cs, &cfg) {
            let exact = metrics::eh_signal(&cs, &exp.x, e.k, e.n1);
            assert!(rel(e.lhs(&cs, &exp.x), exact) < 1e-12);
            let limit = cfg.e_min / cfg.zeta - cfg.sigma_a2;
            assert!(rel(e.rhs(1e12), limit) < 1e-9);
        }
    }

    #[test]
    fn see_bounds_are_tight() {
        let (cfg, cs, exp) = expansion(6);
        let phis = see_minorant_phi(&exp, &cs, &cfg).unwrap();
        let psis = see_majorant_psi(&exp, &cs, &cfg).unwrap();
        for (p, q) in phis.iter().zip(&psis) {
            let t = exp.t[p.rate.k];
            let v = p.value_at(&cs, &cfg, &exp.x, exp.mu, t).unwrap();
            assert!(rel(v, p.target(&cs, &cfg, &exp.x, exp.mu, t)) < 1e-12);
            let beta = exp.beta[q.ev.k * cs.users + q.ev.n];
            let s = ev_signal(&cs, &exp.x, q.ev.k, q.ev.n);
            let want = q.target(&cs, &cfg, &exp.x, exp.mu, t).unwrap();
            assert!(rel(q.value(s, beta, t), want) < 1e-12);
        }
    }

    #[test]
    fn rotation_examples() {
        let (cfg, cs, exp) = expansion(7);
        // Already aligned: unchanged.
        let again = rotate_phases(&exp.x, &cs);
        for (a, b) in again.xi.iter().zip(&exp.x.xi) {
            for (u, v) in a.iter().zip(b) {
                assert!((u - v).norm() < 1e-12 * v.norm().max(1e-300) + 1e-300);
            }
        }
        // hᴴx = −1 becomes +1.
        let mut x = BeamformerSet::zeros_like(&cs);
        let h = cs.h(0, 0, 0).to_vec();
        let hn = norm_sqr(&h);
        *x.xi_mut(0, 0) = h.iter().map(|z| -z / hn).collect();
        let r = rotate_phases(&x, &cs);
        let z = inner(cs.h(0, 0, 0), r.xi(0, 0));
        assert!((z - C64::new(1.0, 0.0)).norm() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let y = BeamformerSet::random(&cs, 0.2, &mut rng);
        let ry = rotate_phases(&y, &cs);
        let ts = exp.time_split();
        let a = metrics::MetricReport::evaluate(&cs, &y, ts, &cfg).unwrap();
        let b = metrics::MetricReport::evaluate(&cs, &ry, ts, &cfg).unwrap();
        for (u, v) in a.secrecy_rate.iter().zip(&b.secrecy_rate) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn invalid_expansions_are_rejected() {
        let (cfg, cs, mut exp) = expansion(8);
        *exp.x.xi_mut(1, 1) = exp.x.xi(1, 1).iter().map(|z| -z).collect();
        assert!(matches!(
            minorant_f1(&exp, &cs, &cfg),
            Err(BoundError::InvalidExpansion { k: 1, n: 1, .. })
        ));
        let (cfg, cs, mut exp) = expansion(8);
        exp.mu = 1.0;
        assert!(majorant_f2(&exp, &cs, &cfg).is_err());
        let (cfg, cs, mut exp) = expansion(8);
        exp.t.clear();
        assert!(see_minorant_phi(&exp, &cs, &cfg).is_err());
    }

    #[test]
    fn inverse_sqrt_bound_vanishes_at_three_times_expansion() {
        let (_, rhs) = inequalities::inverse_sqrt(3.0 * 2.5, 2.5);
        assert_eq!(rhs, 0.0);
    }
}
