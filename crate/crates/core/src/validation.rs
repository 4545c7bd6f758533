//! Oracles that check the bounds of [`crate::sca`] and the programs built
//! from them without trusting the optimiser.
//!
//! Checks run on normalised scenarios (beam power in units of `Pk_max`,
//! received power in units of `σ²`), so absolute tolerances refer to O(1)
//! quantities. Sampled beamformers are the expansion point plus i.i.d.
//! complex Gaussian entries of standard deviation `0.1·√Pk_max`; `μ` is
//! uniform on the trust region `(1, 2μℓ − 1)` and `t` uniform on
//! `(0, 3tℓ]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algorithms::{run_secrecy_from, RunOptions};
use crate::conic::assemble::{assemble_secrecy_subproblem, assemble_see_subproblem};
use crate::cplx::{norm_sqr, CVec, C64};
use crate::error::ValidationError;
use crate::metrics::{
    self, eh_signal, feasibility_audit, harvested_energy, min_secrecy_rate, powers, q_bar,
    BeamformerSet, TimeSplit,
};
use crate::model::{generate_channels, ChannelSet, NetworkConfig, Scenario};
use crate::sca::{
    inequalities as ineq, inner_eh_constraint, inner_power_constraints, majorant_f2, minorant_f1,
    rotate_phases, see_majorant_psi, see_minorant_phi, Iterate, TRUST_MARGIN,
};

pub const TANGENCY_TOL: f64 = 1e-9;
pub const DOMINATION_TOL: f64 = 1e-12;
/// Relative slack allowed when an original constraint is re-checked.
pub const SOUNDNESS_TOL: f64 = 1e-12;
pub const SELF_FEASIBILITY_TOL: f64 = 1e-9;
/// Perturbation scale of sampled beamformers, in units of `√Pk_max`.
pub const PERTURBATION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub samples: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleReport {
    pub fn new(name: impl Into<String>, samples: usize, max_violation: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            samples,
            max_violation,
            tolerance,
            pass: max_violation <= tolerance,
        }
    }

    /// Combines two reports of the same check: samples are the smaller
    /// count, violations the larger.
    fn merge(&mut self, other: &OracleReport) {
        self.samples = self.samples.min(other.samples);
        self.max_violation = worst(self.max_violation, other.max_violation);
        self.pass = self.max_violation <= self.tolerance;
    }
}

/// `max` that lets NaN win, so a NaN violation always fails.
fn worst(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / a.abs().max(b.abs())
    }
}

/// All reports from one verification pass.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    /// Random expansion points the per-point suites ran on.
    pub expansions: usize,
    pub reports: Vec<OracleReport>,
}

impl ValidationSummary {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn get(&self, name: &str) -> Option<&OracleReport> {
        self.reports.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Adds reports, merging those with a name already present.
    pub fn absorb(&mut self, reports: Vec<OracleReport>) {
        for r in reports {
            match self.reports.iter_mut().find(|q| q.name == r.name) {
                Some(q) => q.merge(&r),
                None => self.reports.push(r),
            }
        }
    }
}

/// A random expansion point on a normalised scenario with every auxiliary
/// at its tight value. Points whose bounds are undefined are redrawn.
pub fn random_expansion(base: &NetworkConfig, rng: &mut ChaCha8Rng) -> Result<(NetworkConfig, ChannelSet, Iterate), ValidationError> {
    for _ in 0..1000 {
        let cfg = NetworkConfig {
            seed: rng.gen(),
            ..base.clone()
        };
        let (s, _) = Scenario::generate(&cfg)?.normalized();
        let scale = rng.gen_range(0.05..0.3);
        let x = rotate_phases(&BeamformerSet::random(&s.channels, scale, rng), &s.channels);
        let mu = rng.gen_range(1.05..3.0);
        let exp = Iterate::at_point(&s.channels, &s.cfg, x, mu, true, true);
        let ok = minorant_f1(&exp, &s.channels, &s.cfg).is_ok()
            && majorant_f2(&exp, &s.channels, &s.cfg).is_ok()
            && exp.t.iter().all(|t| *t > 0.0);
        if ok {
            return Ok((s.cfg, s.channels, exp));
        }
    }
    Err(ValidationError::NoExpansion)
}

fn perturb(x: &BeamformerSet, sd: f64, rng: &mut ChaCha8Rng) -> BeamformerSet {
    let mut out = x.clone();
    let s = sd * std::f64::consts::FRAC_1_SQRT_2;
    for v in out.xe.iter_mut().chain(out.xi.iter_mut()) {
        for z in v.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z += C64::new(re, im) * s;
        }
    }
    out
}

fn trust_mu(exp: &Iterate, rng: &mut ChaCha8Rng) -> f64 {
    let hi = 2.0 * exp.mu - 1.0 - TRUST_MARGIN;
    loop {
        let mu = rng.gen_range(1.0..hi);
        if mu > 1.0 {
            return mu;
        }
    }
}

/// Every bound at its own expansion point equals its target.
pub fn tangency_suite(exp: &Iterate, cs: &ChannelSet, cfg: &NetworkConfig) -> Result<Vec<OracleReport>, ValidationError> {
    let (x, mu) = (&exp.x, exp.mu);
    let mut out = Vec::new();
    let mut push = |name: &str, n: usize, v: f64| out.push(OracleReport::new(name, n, v, TANGENCY_TOL));

    let f1 = minorant_f1(exp, cs, cfg)?;
    let v = f1.iter().map(|b| {
        b.value_at(cs, cfg, x, mu)
            .map_or(f64::NAN, |val| rel(val, b.target(cs, cfg, x, mu)))
    });
    push("tangency/rate_minorant", f1.len(), v.fold(0.0, worst));

    let f2 = majorant_f2(exp, cs, cfg)?;
    let mut v = 0.0;
    let mut vd = 0.0;
    for b in &f2 {
        let beta = exp.beta[b.k * cs.users + b.n];
        let s = metrics::ev_signal(cs, x, b.k, b.n);
        let target = b.target(cs, cfg, x, mu).unwrap_or(f64::NAN);
        v = worst(v, rel(b.value(s, beta), target));
        vd = worst(vd, rel(b.q_lin.value(cs, x, mu) * (mu - 1.0), q_bar(cs, x, cfg, mu, b.k, b.n)));
        vd = worst(vd, rel(b.denominator_lhs(beta, mu), b.q_lin.value(cs, x, mu)));
    }
    push("tangency/eavesdropper_majorant", f2.len(), v);
    push("tangency/eavesdropper_denominator", f2.len(), vd);

    let phis = see_minorant_phi(exp, cs, cfg)?;
    let v = phis.iter().map(|p| {
        let t = exp.t[p.rate.k];
        p.value_at(cs, cfg, x, mu, t)
            .map_or(f64::NAN, |val| rel(val, p.target(cs, cfg, x, mu, t)))
    });
    push("tangency/efficiency_rate_minorant", phis.len(), v.fold(0.0, worst));

    let psis = see_majorant_psi(exp, cs, cfg)?;
    let v = psis.iter().map(|p| {
        let t = exp.t[p.ev.k];
        let beta = exp.beta[p.ev.k * cs.users + p.ev.n];
        let s = metrics::ev_signal(cs, x, p.ev.k, p.ev.n);
        rel(p.value(s, beta, t), p.target(cs, cfg, x, mu, t).unwrap_or(f64::NAN))
    });
    push("tangency/efficiency_leak_majorant", psis.len(), v.fold(0.0, worst));

    let pw = inner_power_constraints(exp, cfg);
    let v = (0..cs.cells).map(|k| rel(pw.cell_lhs(x, mu, k), metrics::cell_power_bar(x, mu, k)));
    push("tangency/power_inner", cs.cells, v.fold(0.0, worst));

    let eh = inner_eh_constraint(exp, cs, cfg);
    let v = eh.iter().map(|e| rel(e.lhs(cs, x), eh_signal(cs, x, e.k, e.n1)));
    push("tangency/harvest_inner", eh.len(), v.fold(0.0, worst));
    Ok(out)
}

/// Per-bound valid-sample counter and worst violation of one family.
struct Tally {
    counts: Vec<usize>,
    worst: f64,
}

impl Tally {
    fn new(n: usize) -> Self {
        Self {
            counts: vec![0; n],
            worst: 0.0,
        }
    }

    fn record(&mut self, i: usize, violation: f64) {
        self.counts[i] += 1;
        self.worst = worst(self.worst, violation);
    }

    fn min_count(&self) -> usize {
        self.counts.iter().copied().min().unwrap_or(0)
    }

    fn report(&self, name: &str, tol: f64) -> OracleReport {
        let mut r = OracleReport::new(name, self.min_count(), self.worst, tol);
        // Too few valid samples means the check did not happen.
        r.pass &= self.min_count() > 0;
        r
    }
}

/// Minorants stay below and majorants above their targets at sampled
/// points of their validity regions. Each bound receives at least
/// `n_samples` valid samples unless the region is too thin, in which case
/// the reported count is smaller.
pub fn domination_suite(
    exp: &Iterate,
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    n_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<OracleReport>, ValidationError> {
    let f1 = minorant_f1(exp, cs, cfg)?;
    let f2 = majorant_f2(exp, cs, cfg)?;
    let phis = see_minorant_phi(exp, cs, cfg)?;
    let psis = see_majorant_psi(exp, cs, cfg)?;
    let pw = inner_power_constraints(exp, cfg);
    let eh = inner_eh_constraint(exp, cs, cfg);
    let ues = cs.cells * cs.users;
    let mut t_f1 = Tally::new(ues);
    let mut t_f2 = Tally::new(ues);
    let mut t_phi = Tally::new(ues);
    let mut t_psi = Tally::new(ues);
    let mut t_den = Tally::new(ues);
    let mut t_pw = Tally::new(cs.cells);
    let mut t_eh = Tally::new(eh.len());
    let sd = PERTURBATION * cfg.pk_max.sqrt();
    let max_draws = 50 * n_samples;
    let mut draws = 0;
    let done = |ts: &[&Tally]| ts.iter().all(|t| t.min_count() >= n_samples);
    while draws < max_draws && !done(&[&t_f1, &t_f2, &t_phi, &t_psi, &t_den, &t_pw, &t_eh]) {
        draws += 1;
        let x = perturb(&exp.x, sd, rng);
        let mu = trust_mu(exp, rng);
        for (i, b) in f1.iter().enumerate() {
            if let Some(v) = b.value_at(cs, cfg, &x, mu) {
                t_f1.record(i, v - b.target(cs, cfg, &x, mu));
            }
        }
        for (i, b) in f2.iter().enumerate() {
            if let (Some(v), Some(target)) = (b.value_at(cs, &x, mu), b.target(cs, cfg, &x, mu)) {
                t_f2.record(i, target - v);
            }
            let q = q_bar(cs, &x, cfg, mu, b.k, b.n);
            t_den.record(i, b.q_lin.value(cs, &x, mu) - q / (mu - 1.0));
        }
        for (i, p) in phis.iter().enumerate() {
            let t = rng.gen_range(0.0..=3.0 * exp.t[p.rate.k]);
            if t > 0.0 {
                if let Some(v) = p.value_at(cs, cfg, &x, mu, t) {
                    t_phi.record(i, v - p.target(cs, cfg, &x, mu, t));
                }
            }
        }
        for (i, p) in psis.iter().enumerate() {
            let t = rng.gen_range(0.0..=3.0 * p.t_l);
            if let (Some(v), Some(target)) = (p.value_at(cs, &x, mu, t), p.target(cs, cfg, &x, mu, t)) {
                t_psi.record(i, target - v);
            }
        }
        for k in 0..cs.cells {
            t_pw.record(k, metrics::cell_power_bar(&x, mu, k) - pw.cell_lhs(&x, mu, k));
        }
        for (i, e) in eh.iter().enumerate() {
            t_eh.record(i, e.lhs(cs, &x) - eh_signal(cs, &x, e.k, e.n1));
        }
    }
    Ok(vec![
        t_f1.report("domination/rate_minorant", DOMINATION_TOL),
        t_f2.report("domination/eavesdropper_majorant", DOMINATION_TOL),
        t_den.report("domination/eavesdropper_denominator", DOMINATION_TOL),
        t_phi.report("domination/efficiency_rate_minorant", DOMINATION_TOL),
        t_psi.report("domination/efficiency_leak_majorant", DOMINATION_TOL),
        t_pw.report("domination/power_inner", DOMINATION_TOL),
        t_eh.report("domination/harvest_inner", DOMINATION_TOL),
    ])
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn random_cvec(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> CVec {
    (0..m)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im) * scale
        })
        .collect()
}

/// Each elementary inequality at `n_samples` random points of its domain.
/// The violation is `smaller − larger`.
pub fn inequality_suite(n_samples: usize, rng: &mut ChaCha8Rng) -> Vec<OracleReport> {
    type Draw = fn(&mut ChaCha8Rng) -> (f64, f64);
    let cases: [(&str, Draw); 10] = [
        ("log_inverse", |r| {
            let (x, xb) = (log_uniform(r, 1e-2, 1e2), log_uniform(r, 1e-2, 1e2));
            let (t, tb) = (r.gen_range(0.5..5.0), r.gen_range(0.5..5.0));
            ineq::log_inverse(x, t, xb, tb)
        }),
        ("log_sinr", |r| {
            let (s, sb) = (log_uniform(r, 1e-3, 1e3), log_uniform(r, 1e-3, 1e3));
            let (t, tb) = (r.gen_range(0.5..5.0), r.gen_range(0.5..5.0));
            ineq::log_sinr(s, t, sb, tb)
        }),
        ("log_concavity", |r| ineq::log_concavity(r.gen_range(0.0..1e2), r.gen_range(0.0..1e2))),
        ("quad_over_linear", |r| {
            let m = r.gen_range(1..6);
            let (x, xb) = (random_cvec(r, m, 1.0), random_cvec(r, m, 1.0));
            ineq::quad_over_linear(&x, log_uniform(r, 1e-2, 1e2), &xb, log_uniform(r, 1e-2, 1e2))
        }),
        ("squared_norm", |r| {
            let m = r.gen_range(1..6);
            ineq::squared_norm(&random_cvec(r, m, 1.0), &random_cvec(r, m, 1.0))
        }),
        ("projected_power", |r| {
            let m = r.gen_range(1..6);
            let h = random_cvec(r, m, 1.0);
            ineq::projected_power(&h, &random_cvec(r, m, 1.0), &random_cvec(r, m, 1.0))
        }),
        ("reciprocal", |r| ineq::reciprocal(1.0 + log_uniform(r, 1e-3, 1e1), 1.0 + log_uniform(r, 1e-3, 1e1))),
        ("sqrt_ratio", |r| {
            ineq::sqrt_ratio(
                log_uniform(r, 1e-3, 1e3),
                1.0 + log_uniform(r, 1e-2, 1e1),
                log_uniform(r, 1e-3, 1e3),
                1.0 + log_uniform(r, 1e-2, 1e1),
            )
        }),
        ("inverse_sqrt", |r| ineq::inverse_sqrt(log_uniform(r, 1e-3, 1e3), log_uniform(r, 1e-3, 1e3))),
        ("product_split", |r| {
            ineq::product_split(
                log_uniform(r, 1e-2, 1e2),
                log_uniform(r, 1e-2, 1e2),
                log_uniform(r, 1e-2, 1e2),
                log_uniform(r, 1e-2, 1e2),
            )
        }),
    ];
    cases
        .iter()
        .map(|(name, draw)| {
            let mut v: f64 = 0.0;
            for _ in 0..n_samples {
                let (larger, smaller) = draw(rng);
                v = worst(v, smaller - larger);
            }
            OracleReport::new(format!("inequality/{name}"), n_samples, v, DOMINATION_TOL)
        })
        .collect()
}

/// Points accepted by each inner approximation also satisfy the original
/// constraint, evaluated through [`crate::metrics`] only. Points are drawn
/// around `exp` and rejected until `n_samples` satisfy the approximation.
///
/// The harvesting check uses a target of half the worst harvested energy
/// at `exp`, so the accepted region is never empty.
pub fn soundness_suite(
    exp: &Iterate,
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    n_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<OracleReport>, ValidationError> {
    let sd = PERTURBATION * cfg.pk_max.sqrt();
    let max_draws = 200 * n_samples;
    let over = |v: f64, cap: f64| (v - cap) / cap.abs().max(f64::MIN_POSITIVE);

    // Power budgets.
    let pw = inner_power_constraints(exp, cfg);
    let budget = |x: &BeamformerSet, mu: f64| {
        let cells = (0..cs.cells).map(|k| pw.cell_lhs(x, mu, k));
        let ok = cells.clone().all(|g| g <= cfg.pk_max) && pw.network_lhs(x, mu) <= cfg.p_max;
        ok
    };
    let (mut n_pw, mut v_pw, mut draws) = (0, 0.0f64, 0);
    while n_pw < n_samples && draws < max_draws {
        draws += 1;
        // Shrinking toward zero keeps a share of draws inside the budgets
        // even when the expansion sits on them.
        let x = perturb(&exp.x, sd, rng).scaled(rng.gen_range(0.3..1.0));
        let mu = trust_mu(exp, rng);
        if !budget(&x, mu) {
            continue;
        }
        n_pw += 1;
        let ts = TimeSplit::from_mu(mu)?;
        let (cells, total) = powers(&x, ts);
        for g in cells {
            v_pw = worst(v_pw, over(g, cfg.pk_max));
        }
        v_pw = worst(v_pw, over(total, cfg.p_max));
    }

    // Harvesting.
    let ts_l = exp.time_split();
    let e_ref = harvested_energy(cs, &exp.x, ts_l, cfg).into_iter().fold(f64::INFINITY, f64::min);
    let mut eh_cfg = cfg.clone();
    eh_cfg.e_min = 0.5 * e_ref;
    let eh = inner_eh_constraint(exp, cs, &eh_cfg);
    let (mut n_eh, mut v_eh, mut draws) = (0, 0.0f64, 0);
    while n_eh < n_samples && draws < max_draws && eh_cfg.e_min > 0.0 {
        draws += 1;
        let x = perturb(&exp.x, sd, rng);
        let mu = trust_mu(exp, rng);
        if !eh.iter().all(|e| e.lhs(cs, &x) >= e.rhs(mu)) {
            continue;
        }
        n_eh += 1;
        let ts = TimeSplit::from_mu(mu)?;
        for e in harvested_energy(cs, &x, ts, &eh_cfg) {
            v_eh = worst(v_eh, over(eh_cfg.e_min, e));
        }
    }

    // Eavesdropper denominator with its trust region.
    let f2 = majorant_f2(exp, cs, cfg)?;
    let (mut n_den, mut v_den, mut draws) = (0, 0.0f64, 0);
    while n_den < n_samples && draws < max_draws {
        draws += 1;
        let x = perturb(&exp.x, sd, rng);
        let mu = trust_mu(exp, rng);
        let mut any = false;
        for b in &f2 {
            let beta = rng.gen_range(0.0..1.5) * b.q_l * b.q_l;
            if !(beta > 0.0 && b.denominator_lhs(beta, mu) <= b.q_lin.value(cs, &x, mu)) {
                continue;
            }
            any = true;
            let q = q_bar(cs, &x, cfg, mu, b.k, b.n);
            v_den = worst(v_den, over(beta.sqrt(), q));
        }
        n_den += usize::from(any);
    }

    let report = |name: &str, n: usize, v: f64| {
        let mut r = OracleReport::new(name, n, v, SOUNDNESS_TOL);
        r.pass &= n >= n_samples;
        r
    };
    Ok(vec![
        report("soundness/power_budgets", n_pw, v_pw),
        report("soundness/energy_harvesting", n_eh, v_eh),
        report("soundness/eavesdropper_denominator", n_den, v_den),
    ])
}

/// `cfg` with budgets, harvesting target and secrecy floor relaxed just
/// enough for `exp` to satisfy the original constraints.
pub fn relaxed_for(exp: &Iterate, cs: &ChannelSet, cfg: &NetworkConfig) -> Result<NetworkConfig, ValidationError> {
    let ts = exp.time_split();
    let x = &exp.x;
    let (cells, total) = powers(x, ts);
    let beam = x.xe.iter().chain(&x.xi).map(|v| norm_sqr(v)).fold(0.0, f64::max);
    let harvested = harvested_energy(cs, x, ts, cfg).into_iter().fold(f64::INFINITY, f64::min);
    let secrecy = min_secrecy_rate(cs, x, ts, cfg)?;
    let mut out = cfg.clone();
    out.pk_max = cells.into_iter().fold(beam, f64::max).max(cfg.pk_max);
    out.p_max = total.max(cfg.p_max);
    out.e_min = harvested.min(cfg.e_min);
    out.r_qos = secrecy.min(cfg.r_qos);
    Ok(out)
}

/// Every expansion point satisfies the programs assembled around it, once
/// the configuration admits it (see [`relaxed_for`]).
pub fn self_feasibility(exp: &Iterate, cs: &ChannelSet, cfg: &NetworkConfig) -> Result<Vec<OracleReport>, ValidationError> {
    let cfg = &relaxed_for(exp, cs, cfg)?;
    let exp = &Iterate::at_point(cs, cfg, exp.x.clone(), exp.mu, true, true);
    let mut out = Vec::new();
    let no_t = Iterate {
        t: Vec::new(),
        ..exp.clone()
    };
    for (name, sp) in [
        ("self_feasibility/secrecy", assemble_secrecy_subproblem(&no_t, cs, cfg, true)?),
        ("self_feasibility/no_eavesdropper", assemble_secrecy_subproblem(&no_t, cs, cfg, false)?),
        ("self_feasibility/efficiency", assemble_see_subproblem(exp, cs, cfg)?),
    ] {
        let x0 = sp.expansion.as_ref().ok_or(ValidationError::NoExpansion)?;
        let check = sp.program.check_point(x0);
        let mut r = OracleReport::new(name, 1, check.worst, SELF_FEASIBILITY_TOL);
        if !r.pass {
            r.name = format!("{name} ({})", check.worst_tag);
        }
        out.push(r);
    }
    Ok(out)
}

/// Sample sizes for [`run_suites`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub expansions: usize,
    pub samples_per_bound: usize,
    pub samples_per_inequality: usize,
    pub soundness_samples: usize,
    pub seed: u64,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self {
            expansions: 100,
            samples_per_bound: 1000,
            samples_per_inequality: 10_000,
            soundness_samples: 1000,
            seed: 0,
        }
    }
}

/// Runs every suite over `spec.expansions` random expansions of scenarios
/// drawn from `base`. Reports with the same name are merged across
/// expansions.
pub fn run_suites(base: &NetworkConfig, spec: &SuiteSpec) -> Result<ValidationSummary, ValidationError> {
    let mut summary = ValidationSummary::default();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    summary.absorb(inequality_suite(spec.samples_per_inequality, &mut rng));
    for e in 0..spec.expansions {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(e as u64 + 1)));
        let (cfg, cs, exp) = random_expansion(base, &mut rng)?;
        summary.expansions += 1;
        summary.absorb(tangency_suite(&exp, &cs, &cfg)?);
        summary.absorb(domination_suite(&exp, &cs, &cfg, spec.samples_per_bound, &mut rng)?);
        if e < spec.expansions.min(10) {
            summary.absorb(soundness_suite(&exp, &cs, &cfg, spec.soundness_samples, &mut rng)?);
            summary.absorb(self_feasibility(&exp, &cs, &cfg)?);
        }
    }
    Ok(summary)
}

/// Grid searched by [`grid_oracle`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Per-beam powers as fractions of `Pk_max`.
    pub power_levels: Vec<f64>,
    /// Number of time splits, `η = i/(points + 1)` for `i = 1..=points`.
    pub split_points: usize,
    /// Largest number of grid points accepted.
    pub max_points: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            power_levels: (0..=8).map(|i| i as f64 / 8.0).collect(),
            split_points: 50,
            max_points: 5_000_000,
        }
    }
}

/// Best feasible grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub value: f64,
    pub beams: BeamformerSet,
    pub time_split: TimeSplit,
    pub evaluated: u64,
    pub feasible: u64,
}

fn matched(h: &[C64], power: f64) -> CVec {
    let n = norm_sqr(h).sqrt();
    h.iter().map(|z| z * (power.sqrt() / n)).collect()
}

/// Exhaustive search over matched-filter beams (`xI ∝ h_{k,k,n}`,
/// `xE ∝ h_{k,k,n1}`) with every combination of per-beam power levels and
/// every grid time split. Returns the point with the largest minimum
/// secrecy rate among those passing the feasibility audit, or `None` when
/// no grid point is feasible.
pub fn grid_oracle(cs: &ChannelSet, cfg: &NetworkConfig, spec: &GridSpec) -> Result<Option<GridResult>, ValidationError> {
    let beams = cs.cells * (cs.zone1 + cs.users);
    let levels = spec.power_levels.len() as u64;
    let points = (levels as u128).pow(beams as u32) * spec.split_points as u128;
    if points > spec.max_points as u128 || levels == 0 || spec.split_points == 0 {
        return Err(ValidationError::GridTooLarge {
            points,
            limit: spec.max_points,
        });
    }
    let mut best: Option<GridResult> = None;
    let (mut evaluated, mut feasible) = (0u64, 0u64);
    let mut idx = vec![0usize; beams];
    loop {
        let mut x = BeamformerSet::zeros_like(cs);
        let mut b = 0;
        for k in 0..cs.cells {
            for j in 0..cs.zone1 {
                *x.xe_mut(k, j) = matched(cs.h(k, k, j), spec.power_levels[idx[b]] * cfg.pk_max);
                b += 1;
            }
            for n in 0..cs.users {
                *x.xi_mut(k, n) = matched(cs.h(k, k, n), spec.power_levels[idx[b]] * cfg.pk_max);
                b += 1;
            }
        }
        for i in 1..=spec.split_points {
            let ts = TimeSplit::from_eta(i as f64 / (spec.split_points + 1) as f64)?;
            evaluated += 1;
            if !feasibility_audit(cs, &x, ts, cfg, 0.0).all_pass() {
                continue;
            }
            let Ok(v) = min_secrecy_rate(cs, &x, ts, cfg) else {
                continue;
            };
            feasible += 1;
            if best.as_ref().map_or(true, |g| v > g.value) {
                best = Some(GridResult {
                    value: v,
                    beams: x.clone(),
                    time_split: ts,
                    evaluated: 0,
                    feasible: 0,
                });
            }
        }
        // Odometer step over power-level indices.
        let mut pos = 0;
        loop {
            if pos == beams {
                return Ok(best.map(|g| GridResult {
                    evaluated,
                    feasible,
                    ..g
                }));
            }
            idx[pos] += 1;
            if idx[pos] < levels as usize {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// The tiny instance used with [`grid_oracle`]: one cell, two UEs (one in
/// zone 1), two antennas, one single-antenna eavesdropper.
pub fn tiny_config(seed: u64) -> NetworkConfig {
    NetworkConfig {
        cells: 1,
        users: 2,
        zone1: 1,
        antennas: 2,
        ev_antennas: 1,
        seed,
        ..NetworkConfig::reference()
    }
}

/// Outcome of path-following started at the grid optimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDominance {
    pub oracle: f64,
    pub final_value: f64,
    pub iterations: usize,
    pub audit_pass: bool,
    pub report: OracleReport,
}

/// Runs [`grid_oracle`] on [`tiny_config`]`(seed)` and path-following from
/// its best point. The report's violation is `oracle − final` (tolerance
/// `1e-6`); an infeasible grid or a failed run is reported as a NaN
/// violation.
pub fn grid_dominance(seed: u64, spec: &GridSpec, opts: &RunOptions) -> Result<GridDominance, ValidationError> {
    let cfg = tiny_config(seed);
    let cs = generate_channels(&cfg)?;
    let name = "grid_oracle/dominance";
    let Some(g) = grid_oracle(&cs, &cfg, spec)? else {
        return Ok(GridDominance {
            oracle: f64::NAN,
            final_value: f64::NAN,
            iterations: 0,
            audit_pass: false,
            report: OracleReport::new(name, 0, f64::NAN, 1e-6),
        });
    };
    let (final_value, iterations, audit_pass) = match run_secrecy_from(&cs, &cfg, &g.beams, g.time_split, opts) {
        Ok(t) => (t.final_objective(), t.iterations(), t.audit.all_pass()),
        Err(_) => (f64::NAN, 0, false),
    };
    let violation = if audit_pass { g.value - final_value } else { f64::NAN };
    Ok(GridDominance {
        oracle: g.value,
        final_value,
        iterations,
        audit_pass,
        report: OracleReport::new(name, g.feasible as usize, worst(violation, 0.0), 1e-6),
    })
}
