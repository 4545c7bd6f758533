//! Builds the convex subproblems solved at each iteration from the bounds of
//! [`crate::sca`], plus the fixed-split programs used for initialisation.
//!
//! All programs are written in the units of the scenario they receive;
//! callers pass normalised scenarios (beam power in units of `Pk_max`,
//! received power in units of `σ²`) so that coefficients are well scaled.
//! Several rows are divided by their expansion-point magnitude for the same
//! reason; the scaled auxiliaries are documented where they are declared.

use serde::{Deserialize, Serialize};

use super::program::{complex_rows, Affine, ConicProgram, ConstraintClass};
use crate::cplx::{inner, norm_sqr, CVec, C64};
use crate::error::BoundError;
use crate::metrics::{self, ev_signal, f1_re, BeamformerSet};
use crate::model::{ChannelSet, NetworkConfig};
use crate::sca::{
    majorant_f2, minorant_f1, see_majorant_psi, see_minorant_phi, F1Minorant, F2Majorant, Iterate,
    NU_FLOOR, TRUST_MARGIN,
};

use ConstraintClass::{Auxiliary, Bound, Linear, Quadratic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Max-min secrecy rate.
    Secrecy,
    /// Max-min user rate with the eavesdropper term dropped.
    NoEavesdropper,
    /// Max-min per-cell secrecy energy efficiency.
    EnergyEfficiency,
    /// Fixed time split, harvesting-margin objective.
    Init,
}

impl Mode {
    fn has_eavesdropper(self) -> bool {
        matches!(self, Mode::Secrecy | Mode::EnergyEfficiency)
    }
}

/// Variable indices of an assembled program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub mode: Mode,
    pub cells: usize,
    pub users: usize,
    pub zone1: usize,
    pub antennas: usize,
    pub xe: usize,
    pub xi: usize,
    pub r: usize,
    pub mu: Option<usize>,
    /// Rate auxiliary `ν/(φℓ dℓ)` per UE, `dℓ` the expansion-point SINR.
    pub nu: Option<usize>,
    /// Epigraph of `φ/(φℓ·ν̃)` per UE; equals `dℓ·φ/ν`.
    pub s1: Option<usize>,
    /// `‖xE‖²` epigraph per energy beam.
    pub e_pow: Option<usize>,
    /// `‖xI‖²/μ` epigraph per information beam.
    pub i_pow: Option<usize>,
    /// `1/(μ − 1)` epigraph.
    pub recip: Option<usize>,
    /// Epigraph of `S/(qℓ·ṽ)` per UE.
    pub s2: Option<usize>,
    /// `β/qℓ²` per UE.
    pub beta: Option<usize>,
    /// `ṽ ≤ √(β/qℓ²)` per UE.
    pub vt: Option<usize>,
    /// `‖xI‖²/(μ − 1)` epigraph per information beam.
    pub i_pow_m1: Option<usize>,
    /// `1/(μ − 1)²` epigraph.
    pub recip_sq: Option<usize>,
    /// `t/tℓ` per cell.
    pub t: Option<usize>,
    /// `ỹ ≤ √(t/tℓ)` per cell.
    pub y: Option<usize>,
    /// `w̃ ≥ 1/ỹ` per cell.
    pub w: Option<usize>,
    /// `μ²` epigraph.
    pub mu_sq: Option<usize>,
    /// `v3 ≤ √(t̃ β̃)` per UE.
    pub v3: Option<usize>,
    /// Epigraph of `S/(qℓ·v3)` per UE.
    pub s3: Option<usize>,
}

impl Layout {
    fn new(p: &mut ConicProgram, cs: &ChannelSet, mode: Mode) -> Self {
        let (k, n, n1, m) = (cs.cells, cs.users, cs.zone1, cs.antennas);
        let xe = p.names.len();
        for kk in 0..k {
            for j in 0..n1 {
                p.add_complex(&format!("xE[{kk},{j}]"), m);
            }
        }
        let xi = p.names.len();
        for kk in 0..k {
            for j in 0..n {
                p.add_complex(&format!("xI[{kk},{j}]"), m);
            }
        }
        let r = p.add_var("r");
        let block = |p: &mut ConicProgram, on: bool, name: &str, count: usize| -> Option<usize> {
            on.then(|| {
                let base = p.names.len();
                for i in 0..count {
                    p.add_var(format!("{name}[{i}]"));
                }
                base
            })
        };
        let iter = mode != Mode::Init;
        let eve = mode.has_eavesdropper();
        let see = mode == Mode::EnergyEfficiency;
        let ues = k * n;
        Layout {
            mode,
            cells: k,
            users: n,
            zone1: n1,
            antennas: m,
            xe,
            xi,
            r,
            mu: block(p, iter, "mu", 1),
            nu: block(p, iter, "nu", ues),
            s1: block(p, iter, "s1", ues),
            e_pow: block(p, iter, "e_pow", k * n1),
            i_pow: block(p, iter, "i_pow", ues),
            recip: block(p, iter, "recip", 1),
            s2: block(p, eve, "s2", ues),
            beta: block(p, eve, "beta", ues),
            vt: block(p, eve, "vt", ues),
            i_pow_m1: block(p, eve, "i_pow_m1", ues),
            recip_sq: block(p, eve, "recip_sq", 1),
            t: block(p, see, "t", k),
            y: block(p, see, "y", k),
            w: block(p, see, "w", k),
            mu_sq: block(p, see, "mu_sq", 1),
            v3: block(p, see, "v3", ues),
            s3: block(p, see, "s3", ues),
        }
    }

    pub fn xe_base(&self, k: usize, n1: usize) -> usize {
        self.xe + 2 * self.antennas * (k * self.zone1 + n1)
    }

    pub fn xi_base(&self, k: usize, n: usize) -> usize {
        self.xi + 2 * self.antennas * (k * self.users + n)
    }

    fn ue(&self, k: usize, n: usize) -> usize {
        k * self.users + n
    }

    /// Beamformers and time split read from a model-variable vector.
    pub fn extract(&self, x: &[f64]) -> (BeamformerSet, Option<f64>) {
        let mut out = BeamformerSet::zeros(self.cells, self.users, self.zone1, self.antennas);
        let read = |base: usize| -> CVec {
            (0..self.antennas)
                .map(|i| C64::new(x[base + 2 * i], x[base + 2 * i + 1]))
                .collect()
        };
        for k in 0..self.cells {
            for j in 0..self.zone1 {
                *out.xe_mut(k, j) = read(self.xe_base(k, j));
            }
            for j in 0..self.users {
                *out.xi_mut(k, j) = read(self.xi_base(k, j));
            }
        }
        (out, self.mu.map(|i| x[i]))
    }

    fn write_beams(&self, x: &mut [f64], b: &BeamformerSet) {
        let mut put = |base: usize, v: &[C64]| {
            for (i, z) in v.iter().enumerate() {
                x[base + 2 * i] = z.re;
                x[base + 2 * i + 1] = z.im;
            }
        };
        for k in 0..self.cells {
            for j in 0..self.zone1 {
                put(self.xe_base(k, j), b.xe(k, j));
            }
            for j in 0..self.users {
                put(self.xi_base(k, j), b.xi(k, j));
            }
        }
    }
}

/// An assembled program with its layout and the expansion point (when
/// there is one).
///
/// The program's variables are `x̂ = x/scale`, with `x` the model values the
/// layout describes; `expansion` is stored in program variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subproblem {
    pub program: ConicProgram,
    pub layout: Layout,
    pub scale: Vec<f64>,
    pub expansion: Option<Vec<f64>>,
}

/// Smallest column scale; beam norms are at most 1 in normalised units.
const SCALE_FLOOR: f64 = 1e-2;

impl Subproblem {
    /// Scales columns to the size of the model point `x0` (beams by their
    /// norm, auxiliaries by magnitude) and equilibrates the blocks.
    fn new(mut program: ConicProgram, layout: Layout, x0: Option<Vec<f64>>) -> Self {
        let n = program.num_vars();
        let mut scale = vec![1.0; n];
        if let Some(x0) = &x0 {
            let beams = layout.r - layout.xe;
            let width = 2 * layout.antennas;
            for b in (layout.xe..layout.r).step_by(width.max(1)) {
                let nrm = x0[b..b + width].iter().map(|v| v * v).sum::<f64>().sqrt();
                scale[b..b + width].fill(nrm.max(SCALE_FLOOR));
            }
            debug_assert_eq!(beams % width.max(1), 0);
            for j in layout.r..n {
                scale[j] = x0[j].abs().max(SCALE_FLOOR);
            }
            program.scale_columns(&scale);
        }
        program.equilibrate_rows();
        let expansion = x0.map(|x| x.iter().zip(&scale).map(|(v, c)| v / c).collect());
        Subproblem {
            program,
            layout,
            scale,
            expansion,
        }
    }

    /// Model values of program variables `xh`.
    pub fn model_values(&self, xh: &[f64]) -> Vec<f64> {
        xh.iter().zip(&self.scale).map(|(v, c)| v * c).collect()
    }

    /// Beamformers and time split at program variables `xh`.
    pub fn extract(&self, xh: &[f64]) -> (BeamformerSet, Option<f64>) {
        self.layout.extract(&self.model_values(xh))
    }
}

fn unit(h: &[C64]) -> CVec {
    let n = norm_sqr(h).sqrt();
    h.iter().map(|z| z / n).collect()
}

fn re_inner(a: &[C64], base: usize, s: f64) -> Affine {
    let mut e = Affine::zero();
    e.add_re_inner(a, base, s);
    e
}

fn im_inner(a: &[C64], base: usize, s: f64) -> Affine {
    let mut e = Affine::zero();
    e.add_im_inner(a, base, s);
    e
}

/// `‖Hᴴx‖²` rows (re, im per eavesdropper antenna), scaled by `s`.
fn ev_rows(cs: &ChannelSet, kb: usize, k: usize, base: usize, s: f64) -> Vec<Affine> {
    let hm = cs.hev(kb, k);
    let mut rows = Vec::with_capacity(2 * hm.cols);
    for j in 0..hm.cols {
        rows.push(re_inner(hm.col(j), base, s));
        rows.push(im_inner(hm.col(j), base, s));
    }
    rows
}

fn var(i: usize) -> Affine {
    Affine::var(i)
}

fn cst(c: f64) -> Affine {
    Affine::constant(c)
}

fn beam_caps(p: &mut ConicProgram, lay: &Layout, cfg: &NetworkConfig) {
    let cap = cfg.pk_max.sqrt();
    let m = lay.antennas;
    for k in 0..lay.cells {
        for j in 0..lay.users {
            p.add_soc(
                cst(cap),
                complex_rows(lay.xi_base(k, j), m, 1.0),
                "info_beam_cap",
                Quadratic,
            );
        }
        for j in 0..lay.zone1 {
            p.add_soc(
                cst(cap),
                complex_rows(lay.xe_base(k, j), m, 1.0),
                "energy_beam_cap",
                Quadratic,
            );
        }
    }
}

/// Inner-approximated transmit power of cell `k` as an affine expression in
/// the power epigraphs.
fn cell_power_expr(lay: &Layout, exp: &Iterate, k: usize) -> Affine {
    let (mu, ep, ip) = (lay.mu.unwrap(), lay.e_pow.unwrap(), lay.i_pow.unwrap());
    let mul = exp.mu;
    let mut e = Affine::zero();
    for j in 0..lay.zone1 {
        let xl = exp.x.xe(k, j);
        e.add_term(ep + k * lay.zone1 + j, 1.0);
        e.add_re_inner(xl, lay.xe_base(k, j), -2.0 / mul);
        e.add_term(mu, norm_sqr(xl) / (mul * mul));
    }
    for j in 0..lay.users {
        e.add_term(ip + lay.ue(k, j), 1.0);
    }
    e
}

fn common_constraints(
    p: &mut ConicProgram,
    lay: &Layout,
    exp: &Iterate,
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    f1: &[F1Minorant],
) {
    let m = lay.antennas;
    let (mu, nu, s1) = (lay.mu.unwrap(), lay.nu.unwrap(), lay.s1.unwrap());
    let (ep, ip, recip) = (lay.e_pow.unwrap(), lay.i_pow.unwrap(), lay.recip.unwrap());

    for b in f1 {
        let (k, n) = (b.k, b.n);
        let ue = lay.ue(k, n);
        let h = cs.h(k, k, n);
        let hu = unit(h);
        let hn = norm_sqr(h).sqrt();
        let base = lay.xi_base(k, n);
        p.add_nonneg(re_inner(&hu, base, 1.0), "serving_phase", Linear);
        p.add_nonneg(
            re_inner(&hu, base, 1.0).minus(&cst(b.re_l / (2.0 * hn))),
            "signal_positive",
            Linear,
        );
        let dl = sinr_scale(b);
        p.add_nonneg(
            var(nu + ue).minus(&cst(NU_FLOOR * cfg.sigma_a2 / (b.phi_l * dl))),
            "rate_positive",
            Linear,
        );
        let lin = re_inner(h, base, 2.0 * b.re_l / (b.phi_l * dl))
            .minus(&cst(b.re_l * b.re_l / (b.phi_l * dl)))
            .minus(&var(nu + ue));
        p.add_rsoc(
            lin,
            cst(1.0),
            complex_rows(base, m, (b.eps / (b.phi_l * dl)).sqrt()),
            "rate_signal_cap",
            Quadratic,
        );

        let sp = b.phi_l.sqrt();
        let mut rows = Vec::new();
        for kb in 0..lay.cells {
            let hk = cs.h(kb, k, n);
            let eps = cs.eps_ue(kb, k, n);
            for nb in 0..lay.users {
                if kb == k && nb == n {
                    continue;
                }
                let ob = lay.xi_base(kb, nb);
                rows.push(re_inner(hk, ob, 1.0 / sp));
                rows.push(im_inner(hk, ob, 1.0 / sp));
                if eps > 0.0 {
                    rows.extend(complex_rows(ob, m, (eps / b.phi_l).sqrt()));
                }
            }
        }
        rows.push(cst((cfg.sigma_a2 / b.phi_l).sqrt()));
        p.add_rsoc(
            var(s1 + ue),
            var(nu + ue),
            rows,
            "interference_ratio",
            Auxiliary,
        );
    }

    beam_caps(p, lay, cfg);

    for k in 0..lay.cells {
        for j in 0..lay.zone1 {
            p.add_rsoc(
                var(ep + k * lay.zone1 + j),
                cst(1.0),
                complex_rows(lay.xe_base(k, j), m, 1.0),
                "energy_beam_power",
                Quadratic,
            );
        }
        for j in 0..lay.users {
            p.add_rsoc(
                var(ip + lay.ue(k, j)),
                var(mu),
                complex_rows(lay.xi_base(k, j), m, 1.0),
                "info_power_ratio",
                Auxiliary,
            );
        }
    }
    let mut total = Affine::zero();
    for k in 0..lay.cells {
        let g = cell_power_expr(lay, exp, k);
        total.add_scaled(&g, 1.0);
        p.add_nonneg(cst(cfg.pk_max).minus(&g), "cell_power", Linear);
    }
    p.add_nonneg(cst(cfg.p_max).minus(&total), "network_power", Linear);
    p.add_rsoc(
        var(recip),
        var(mu).minus(&cst(1.0)),
        vec![cst(1.0)],
        "split_reciprocal",
        Quadratic,
    );

    let target = cfg.e_min / cfg.zeta;
    let scale = if target > 0.0 {
        target * exp.mu / (exp.mu - 1.0)
    } else {
        1.0
    };
    for k in 0..lay.cells {
        for n1 in 0..lay.zone1 {
            let mut e = Affine::zero();
            for kb in 0..lay.cells {
                let h = cs.h(kb, k, n1);
                for nb in 0..lay.zone1 {
                    let c = inner(h, exp.x.xe(kb, nb));
                    let a: CVec = h.iter().map(|z| z * c).collect();
                    e.add_re_inner(&a, lay.xe_base(kb, nb), 2.0 / scale);
                    e.add_constant(-c.norm_sqr() / scale);
                }
            }
            e.add_term(recip, -target / scale);
            e.add_constant((cfg.sigma_a2 - target) / scale);
            p.add_nonneg(e, "energy_harvesting", Linear);
        }
    }
}

/// `(μℓ − 1)/qℓ` times the linearised eavesdropper denominator.
fn denominator_expr(lay: &Layout, b: &F2Majorant) -> Affine {
    let q = &b.q_lin;
    let dl = b.mu_l - 1.0;
    let (mu, ep, ipm) = (lay.mu.unwrap(), lay.e_pow.unwrap(), lay.i_pow_m1.unwrap());
    let mut e = Affine::zero();
    for kb in 0..lay.cells {
        for nb in 0..lay.zone1 {
            e.add_re_inner(&q.jam_pull[kb * lay.zone1 + nb], lay.xe_base(kb, nb), 2.0);
            e.add_term(ep + kb * lay.zone1 + nb, -q.eps_ev[kb]);
        }
        for nb in 0..lay.users {
            if let Some(a) = &q.other_pull[kb * lay.users + nb] {
                e.add_re_inner(a, lay.xi_base(kb, nb), 2.0 / dl);
                e.add_term(ipm + lay.ue(kb, nb), -q.eps_ev[kb]);
            }
        }
    }
    e.add_constant(-q.jam_const);
    // −G(μ − 1)/dl² and the noise term (1 + 2/dl − (μ − 1)/dl²)·N σ²
    let slope = (q.other_const + q.noise) / (dl * dl);
    e.add_term(mu, -slope);
    e.add_constant(slope + (1.0 + 2.0 / dl) * q.noise);
    e.scaled(dl / b.q_l)
}

/// `S/qℓ` rows for UE `(k, n)`.
fn ev_signal_rows(lay: &Layout, cs: &ChannelSet, b: &F2Majorant) -> Vec<Affine> {
    let base = lay.xi_base(b.k, b.n);
    let sq = b.q_l.sqrt();
    let mut rows = ev_rows(cs, b.k, b.k, base, 1.0 / sq);
    let eps = cs.eps_ev(b.k, b.k);
    if eps > 0.0 {
        rows.extend(complex_rows(base, lay.antennas, (eps / b.q_l).sqrt()));
    }
    rows
}

fn eavesdropper_constraints(
    p: &mut ConicProgram,
    lay: &Layout,
    exp: &Iterate,
    cs: &ChannelSet,
    f2: &[F2Majorant],
) {
    let m = lay.antennas;
    let (mu, s2, beta, vt) = (
        lay.mu.unwrap(),
        lay.s2.unwrap(),
        lay.beta.unwrap(),
        lay.vt.unwrap(),
    );
    let (ipm, recip, rsq) = (
        lay.i_pow_m1.unwrap(),
        lay.recip.unwrap(),
        lay.recip_sq.unwrap(),
    );
    for k in 0..lay.cells {
        for j in 0..lay.users {
            p.add_rsoc(
                var(ipm + lay.ue(k, j)),
                var(mu).minus(&cst(1.0)),
                complex_rows(lay.xi_base(k, j), m, 1.0),
                "info_power_excess_ratio",
                Auxiliary,
            );
        }
    }
    p.add_rsoc(
        var(rsq),
        cst(1.0),
        vec![var(recip)],
        "split_reciprocal_square",
        Auxiliary,
    );
    for b in f2 {
        let ue = lay.ue(b.k, b.n);
        p.add_rsoc(
            var(s2 + ue),
            var(vt + ue),
            ev_signal_rows(lay, cs, b),
            "eavesdropper_ratio",
            Auxiliary,
        );
        p.add_rsoc(
            var(beta + ue),
            cst(1.0),
            vec![var(vt + ue)],
            "eavesdropper_root",
            Auxiliary,
        );
        let dl = b.mu_l - 1.0;
        let row = denominator_expr(lay, b)
            .minus(&Affine::term(beta + ue, 0.5))
            .minus(&Affine::term(rsq, 0.5 * dl * dl));
        p.add_nonneg(row, "eavesdropper_denominator", Quadratic);
    }
    p.add_nonneg(
        cst(2.0 * exp.mu - 1.0 - TRUST_MARGIN).minus(&var(mu)),
        "trust_region",
        Bound,
    );
}

/// Expansion-point SINR used to scale `ν` and `s1` to unit size.
fn sinr_scale(b: &F1Minorant) -> f64 {
    b.d.max(1e-6)
}

/// `f̄¹ − f̄²` lower bound for UE `(k, n)` as an affine expression.
fn secrecy_expr(lay: &Layout, a: &F1Minorant, b: Option<&F2Majorant>) -> Affine {
    let ue = lay.ue(a.k, a.n);
    let mut e = cst(a.a);
    e.add_term(lay.s1.unwrap() + ue, -a.b / sinr_scale(a));
    e.add_term(lay.mu.unwrap(), -a.c);
    if let Some(b) = b {
        e.add_constant(-b.f2_l + b.kappa * b.s_l / b.q_l);
        e.add_term(lay.s2.unwrap() + ue, -b.kappa);
    }
    e
}

/// Writes the tight auxiliary values at the expansion point.
fn expansion_values(
    lay: &Layout,
    exp: &Iterate,
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    f1: &[F1Minorant],
    f2: &[F2Majorant],
) -> Vec<f64> {
    let mut x = vec![0.0; lay.r + 1 + count_after_r(lay)];
    lay.write_beams(&mut x, &exp.x);
    let mul = exp.mu;
    x[lay.mu.unwrap()] = mul;
    for b in f1 {
        let ue = lay.ue(b.k, b.n);
        x[lay.nu.unwrap() + ue] = b.d / sinr_scale(b);
        x[lay.s1.unwrap() + ue] = if b.d > 0.0 { sinr_scale(b) / b.d } else { 0.0 };
    }
    for k in 0..lay.cells {
        for j in 0..lay.zone1 {
            x[lay.e_pow.unwrap() + k * lay.zone1 + j] = norm_sqr(exp.x.xe(k, j));
        }
        for j in 0..lay.users {
            let pw = norm_sqr(exp.x.xi(k, j));
            x[lay.i_pow.unwrap() + lay.ue(k, j)] = pw / mul;
            if let Some(i) = lay.i_pow_m1 {
                x[i + lay.ue(k, j)] = pw / (mul - 1.0);
            }
        }
    }
    x[lay.recip.unwrap()] = 1.0 / (mul - 1.0);
    if let Some(i) = lay.recip_sq {
        x[i] = 1.0 / ((mul - 1.0) * (mul - 1.0));
    }
    for b in f2 {
        let ue = lay.ue(b.k, b.n);
        x[lay.s2.unwrap() + ue] = b.s_l / b.q_l;
        x[lay.beta.unwrap() + ue] = 1.0;
        x[lay.vt.unwrap() + ue] = 1.0;
        if let (Some(v3), Some(s3)) = (lay.v3, lay.s3) {
            x[v3 + ue] = 1.0;
            x[s3 + ue] = b.s_l / b.q_l;
        }
    }
    if let (Some(t), Some(y), Some(w), Some(m2)) = (lay.t, lay.y, lay.w, lay.mu_sq) {
        for k in 0..lay.cells {
            x[t + k] = 1.0;
            x[y + k] = 1.0;
            x[w + k] = 1.0;
        }
        x[m2] = mul * mul;
    }
    let ts = exp.time_split();
    x[lay.r] = match lay.mode {
        Mode::NoEavesdropper => f1
            .iter()
            .map(|b| f1_re(cs, &exp.x, cfg, b.k, b.n) / mul)
            .fold(f64::INFINITY, f64::min),
        Mode::Secrecy => f1
            .iter()
            .zip(f2)
            .map(|(a, b)| f1_re(cs, &exp.x, cfg, a.k, a.n) / mul - b.f2_l)
            .fold(f64::INFINITY, f64::min),
        Mode::EnergyEfficiency => {
            let (g, _) = metrics::powers(&exp.x, ts);
            (0..lay.cells)
                .map(|k| {
                    let num: f64 = f1[k * lay.users..(k + 1) * lay.users]
                        .iter()
                        .zip(&f2[k * lay.users..(k + 1) * lay.users])
                        .map(|(a, b)| f1_re(cs, &exp.x, cfg, a.k, a.n) / mul - b.f2_l)
                        .sum();
                    num / metrics::consumed_power(cfg, g[k])
                })
                .fold(f64::INFINITY, f64::min)
        }
        Mode::Init => 0.0,
    };
    x
}

fn count_after_r(lay: &Layout) -> usize {
    // Every optional block is declared after `r`; the last declared index
    // bounds the vector length.
    let ues = lay.cells * lay.users;
    [
        lay.mu.map(|i| i + 1),
        lay.nu.map(|i| i + ues),
        lay.s1.map(|i| i + ues),
        lay.e_pow.map(|i| i + lay.cells * lay.zone1),
        lay.i_pow.map(|i| i + ues),
        lay.recip.map(|i| i + 1),
        lay.s2.map(|i| i + ues),
        lay.beta.map(|i| i + ues),
        lay.vt.map(|i| i + ues),
        lay.i_pow_m1.map(|i| i + ues),
        lay.recip_sq.map(|i| i + 1),
        lay.t.map(|i| i + lay.cells),
        lay.y.map(|i| i + lay.cells),
        lay.w.map(|i| i + lay.cells),
        lay.mu_sq.map(|i| i + 1),
        lay.v3.map(|i| i + ues),
        lay.s3.map(|i| i + ues),
    ]
    .into_iter()
    .flatten()
    .max()
    .unwrap_or(lay.r + 1)
        - lay.r
        - 1
}

/// Max-min secrecy-rate subproblem around `exp`. With
/// `with_eavesdropper = false` the eavesdropper term and its auxiliaries are
/// dropped and the user rate itself is maximised.
pub fn assemble_secrecy_subproblem(
    exp: &Iterate,
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    with_eavesdropper: bool,
) -> Result<Subproblem, BoundError> {
    let mode = if with_eavesdropper {
        Mode::Secrecy
    } else {
        Mode::NoEavesdropper
    };
    let f1 = minorant_f1(exp, cs, cfg)?;
    let f2 = if with_eavesdropper {
        majorant_f2(exp, cs, cfg)?
    } else {
        Vec::new()
    };
    let mut p = ConicProgram::new();
    let lay = Layout::new(&mut p, cs, mode);
    p.set_objective(var(lay.r));
    for (i, a) in f1.iter().enumerate() {
        let row = secrecy_expr(&lay, a, f2.get(i)).minus(&var(lay.r));
        p.add_nonneg(row, "rate_epigraph", Quadratic);
    }
    common_constraints(&mut p, &lay, exp, cs, cfg, &f1);
    if with_eavesdropper {
        eavesdropper_constraints(&mut p, &lay, exp, cs, &f2);
    }
    let x0 = expansion_values(&lay, exp, cs, cfg, &f1, &f2);
    Ok(Subproblem::new(p, lay, Some(x0)))
}

/// Max-min per-cell secrecy-energy-efficiency subproblem around `exp`,
/// with per-UE secrecy-rate floor `cfg.r_qos`.
pub fn assemble_see_subproblem(
    exp: &Iterate,
    cs: &ChannelSet,
    cfg: &NetworkConfig,
) -> Result<Subproblem, BoundError> {
    let phis = see_minorant_phi(exp, cs, cfg)?;
    let psis = see_majorant_psi(exp, cs, cfg)?;
    let f1: Vec<F1Minorant> = phis.iter().map(|p| p.rate.clone()).collect();
    let f2: Vec<F2Majorant> = psis.iter().map(|p| p.ev.clone()).collect();
    let mut p = ConicProgram::new();
    let lay = Layout::new(&mut p, cs, Mode::EnergyEfficiency);
    let (t, y, w, m2) = (
        lay.t.unwrap(),
        lay.y.unwrap(),
        lay.w.unwrap(),
        lay.mu_sq.unwrap(),
    );
    let (v3, s3, beta, s1) = (
        lay.v3.unwrap(),
        lay.s3.unwrap(),
        lay.beta.unwrap(),
        lay.s1.unwrap(),
    );
    let mul = exp.mu;
    p.set_objective(var(lay.r));
    for k in 0..lay.cells {
        let tau = exp.t[k].sqrt();
        let mut row = Affine::term(lay.r, -tau);
        for n in 0..lay.users {
            let ue = lay.ue(k, n);
            let a = &f1[ue];
            let b = &f2[ue];
            let ratio = b.s_l / b.q_l;
            row.add_constant(a.a);
            row.add_term(s1 + ue, -a.b / sinr_scale(a));
            row.add_term(m2, -a.c / (2.0 * mul));
            row.add_term(t + k, -a.c * mul / 2.0);
            row.add_term(w + k, -b.f2_l);
            row.add_term(s3 + ue, -b.kappa);
            // κ·(S/q)·(3 − t̃)/2
            row.add_constant(1.5 * b.kappa * ratio);
            row.add_term(t + k, -0.5 * b.kappa * ratio);
        }
        p.add_nonneg(row, "efficiency_epigraph", Quadratic);
    }
    for (i, a) in f1.iter().enumerate() {
        let row = secrecy_expr(&lay, a, Some(&f2[i])).minus(&cst(cfg.r_qos));
        p.add_nonneg(row, "secrecy_floor", Linear);
    }
    common_constraints(&mut p, &lay, exp, cs, cfg, &f1);
    eavesdropper_constraints(&mut p, &lay, exp, cs, &f2);
    p.add_rsoc(
        var(m2),
        cst(1.0),
        vec![var(lay.mu.unwrap())],
        "split_square",
        Auxiliary,
    );
    let static_power = cfg.antennas as f64 * cfg.p_a + cfg.p_c;
    for k in 0..lay.cells {
        let tau = exp.t[k].sqrt();
        p.add_rsoc(
            var(t + k),
            cst(1.0),
            vec![var(y + k)],
            "consumption_root",
            Auxiliary,
        );
        p.add_rsoc(
            var(w + k),
            var(y + k),
            vec![cst(1.0)],
            "consumption_inverse_root",
            Auxiliary,
        );
        p.add_nonneg(
            cst(3.0).minus(&var(t + k)),
            "consumption_trust_region",
            Bound,
        );
        let g = cell_power_expr(&lay, exp, k);
        let link = var(y + k)
            .minus(&g.scaled(1.0 / (cfg.xi * tau)))
            .minus(&cst(static_power / tau));
        p.add_nonneg(link, "consumption_link", Linear);
    }
    for b in &f2 {
        let ue = lay.ue(b.k, b.n);
        p.add_rsoc(
            var(t + b.k),
            var(beta + ue),
            vec![var(v3 + ue)],
            "efficiency_root",
            Auxiliary,
        );
        p.add_rsoc(
            var(s3 + ue),
            var(v3 + ue),
            ev_signal_rows(&lay, cs, b),
            "efficiency_ratio",
            Auxiliary,
        );
    }
    let x0 = expansion_values(&lay, exp, cs, cfg, &f1, &f2);
    Ok(Subproblem::new(p, lay, Some(x0)))
}

/// Fixed-split initialisation program.
///
/// Without `previous`, maximises the smallest normalised margin
/// `Re(hᴴxE) − √(e_min/(ζη₀))` over zone-1 UEs; with `previous`, maximises
/// the smallest normalised margin of the harvesting constraint linearised
/// at `previous`. Both keep per-beam caps, a robust per-UE rate floor of
/// `r_min` (nats, per unit time) and the power budgets at `μ₀`.
pub fn assemble_init_program(
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    mu0: f64,
    r_min: f64,
    previous: Option<&BeamformerSet>,
) -> Subproblem {
    let mut p = ConicProgram::new();
    let lay = Layout::new(&mut p, cs, Mode::Init);
    let m = lay.antennas;
    p.set_objective(var(lay.r));
    let eta = 1.0 - 1.0 / mu0;
    let target = cfg.e_min / cfg.zeta;
    for k in 0..lay.cells {
        for n1 in 0..lay.zone1 {
            let row = match previous {
                None => {
                    let thr = (target / eta).sqrt();
                    let scale = if thr > 0.0 { thr } else { 1.0 };
                    re_inner(cs.h(k, k, n1), lay.xe_base(k, n1), 1.0 / scale)
                        .minus(&cst(thr / scale))
                }
                Some(prev) => {
                    let need = target / eta;
                    let scale = if need > 0.0 { need } else { 1.0 };
                    let mut e = Affine::zero();
                    for kb in 0..lay.cells {
                        let h = cs.h(kb, k, n1);
                        for nb in 0..lay.zone1 {
                            let c = inner(h, prev.xe(kb, nb));
                            let a: CVec = h.iter().map(|z| z * c).collect();
                            e.add_re_inner(&a, lay.xe_base(kb, nb), 2.0 / scale);
                            e.add_constant(-c.norm_sqr() / scale);
                        }
                    }
                    e.add_constant((cfg.sigma_a2 - need) / scale);
                    e
                }
            };
            p.add_nonneg(row.minus(&var(lay.r)), "harvest_margin", Linear);
        }
    }
    beam_caps(&mut p, &lay, cfg);
    let theta = (r_min * mu0).exp_m1();
    let st = theta.sqrt();
    for k in 0..lay.cells {
        for n in 0..lay.users {
            let base = lay.xi_base(k, n);
            let mut rows = vec![cst(st * cfg.sigma_a2.sqrt())];
            for kb in 0..lay.cells {
                let h = cs.h(kb, k, n);
                let eps = cs.eps_ue(kb, k, n);
                for nb in 0..lay.users {
                    if kb == k && nb == n {
                        continue;
                    }
                    let ob = lay.xi_base(kb, nb);
                    rows.push(re_inner(h, ob, st));
                    rows.push(im_inner(h, ob, st));
                    if eps > 0.0 {
                        rows.extend(complex_rows(ob, m, (theta * eps).sqrt()));
                    }
                }
            }
            let own = cs.eps_ue(k, k, n);
            if own > 0.0 {
                rows.extend(complex_rows(base, m, own.sqrt()));
            }
            p.add_soc(
                re_inner(cs.h(k, k, n), base, 1.0),
                rows,
                "rate_floor",
                Quadratic,
            );
        }
    }
    let (we, wi) = (eta.sqrt(), (1.0 / mu0).sqrt());
    let mut all = Vec::new();
    for k in 0..lay.cells {
        let mut rows = Vec::new();
        for j in 0..lay.zone1 {
            rows.extend(complex_rows(lay.xe_base(k, j), m, we));
        }
        for j in 0..lay.users {
            rows.extend(complex_rows(lay.xi_base(k, j), m, wi));
        }
        all.extend(rows.iter().cloned());
        p.add_soc(cst(cfg.pk_max.sqrt()), rows, "cell_power", Quadratic);
    }
    p.add_soc(cst(cfg.p_max.sqrt()), all, "network_power", Quadratic);
    Subproblem::new(p, lay, None)
}

/// Size of the secrecy subproblem: complex beamformer
/// entries plus the time split, and the linear and quadratic constraint
/// counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    pub scalar_variables: usize,
    pub linear_constraints: usize,
    pub quadratic_constraints: usize,
}

pub fn secrecy_dimensions(cells: usize, users: usize, zone1: usize, antennas: usize) -> Dimensions {
    let (k, n, n1, m) = (cells, users, zone1, antennas);
    Dimensions {
        scalar_variables: m * k * (n + n1) + 1,
        linear_constraints: 3 * k * n + k * n1 + k + 1,
        quadratic_constraints: 4 * k * n + 2 * k * n1 + 1,
    }
}

/// Ratio helper exposed for diagnostics: `S/q̄` at the expansion point.
pub fn eavesdropper_ratio(
    exp: &Iterate,
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    k: usize,
    n: usize,
) -> f64 {
    ev_signal(cs, &exp.x, k, n) / metrics::q_bar(cs, &exp.x, cfg, exp.mu, k, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::solver::{certify, solve, SolveOptions, SolveStatus};
    use crate::model::Scenario;
    use crate::sca::rotate_phases;

    fn scenario(seed: u64) -> (NetworkConfig, ChannelSet) {
        let cfg = NetworkConfig {
            seed,
            antennas: 4,
            ..NetworkConfig::reference()
        };
        let (s, _) = Scenario::generate(&cfg).unwrap().normalized();
        (s.cfg, s.channels)
    }

    #[test]
    fn init_program_solves_and_counts() {
        let (cfg, cs) = scenario(3);
        let sp = assemble_init_program(&cs, &cfg, 1.11, 0.1, None);
        let r = solve(&sp.program, SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal, "{}", r.backend_status);
        assert!(certify(&sp.program, &r, 1e-7).pass);
    }

    #[test]
    fn dimension_formulas() {
        assert_eq!(
            secrecy_dimensions(3, 4, 2, 4),
            Dimensions {
                scalar_variables: 73,
                linear_constraints: 46,
                quadratic_constraints: 61
            }
        );
        assert_eq!(secrecy_dimensions(1, 1, 1, 1).scalar_variables, 3);
    }

    #[test]
    fn secrecy_program_counts_match_formulas() {
        let (cfg, cs) = scenario(4);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        let x = rotate_phases(&BeamformerSet::random(&cs, 0.2, &mut rng), &cs);
        let exp = Iterate::at_point(&cs, &cfg, x, 1.5, true, false);
        let sp = assemble_secrecy_subproblem(&exp, &cs, &cfg, true).unwrap();
        let c = sp.program.counts();
        let d = secrecy_dimensions(3, 4, 2, 4);
        assert_eq!(c.linear, d.linear_constraints);
        assert_eq!(c.quadratic, d.quadratic_constraints);
        let complex = sp.layout.r - sp.layout.xe;
        assert_eq!(complex / 2 + 1, d.scalar_variables);
    }
}
