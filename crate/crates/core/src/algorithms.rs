//! Path-following loops for the max-min secrecy rate and the max-min
//! secrecy energy efficiency, with their initialisation.
//!
//! Every public entry point takes a scenario in physical units, works on a
//! normalised copy internally, and reports points and objectives in
//! physical units again.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::conic::assemble::{
    assemble_init_program, assemble_secrecy_subproblem, assemble_see_subproblem,
    secrecy_dimensions, Dimensions, Subproblem,
};
use crate::conic::solver::{certify, solve, Residuals, SolveOptions, SolveStatus};
use crate::error::AlgorithmError;
use crate::metrics::{
    self, feasibility_audit, q_bar, BeamformerSet, FeasibilityReport, MetricReport, TimeSplit,
};
use crate::model::{ChannelSet, NetworkConfig, Scenario, Units};
use crate::sca::{rotate_phases, Iterate};

/// First tried time split first, then fallbacks.
pub const MU0_SCHEDULE: [f64; 5] = [1.11, 1.25, 1.5, 2.0, 4.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
    pub solver: SolveOptions,
    pub mu0_schedule: Vec<f64>,
    /// Per-UE rate floor (nats/s/Hz) imposed while initialising.
    pub r_min: f64,
    /// Rounds of the linearised harvesting program per time split.
    pub init_rounds: usize,
    /// Tolerance of the feasibility audit on returned points.
    pub audit_tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-4,
            max_iter: 100,
            solver: SolveOptions::default(),
            mu0_schedule: MU0_SCHEDULE.to_vec(),
            r_min: 0.1,
            init_rounds: 10,
            audit_tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    SecrecyRate,
    UserRate,
    EnergyEfficiency,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// The subproblem returned a point that does not improve the true
    /// objective; the incumbent is kept.
    NoAscent,
    SolverFailure(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Objective recomputed from the metrics at the accepted point.
    pub true_objective: f64,
    /// Optimal value of the subproblem (physical units; absent at
    /// iteration 0).
    pub subproblem_objective: Option<f64>,
    pub residuals: Residuals,
    pub mu: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub objective: Objective,
    /// Entry 0 is the starting point.
    pub records: Vec<IterationRecord>,
    pub beams: BeamformerSet,
    pub time_split: TimeSplit,
    pub termination: Termination,
    pub report: MetricReport,
    pub audit: FeasibilityReport,
}

impl RunTrace {
    /// Number of subproblems whose solution was accepted.
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.true_objective)
    }

    pub fn initial_objective(&self) -> f64 {
        self.records[0].true_objective
    }

    /// Smallest step of the true objective (negative means descent).
    pub fn worst_step(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[1].true_objective - w[0].true_objective)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// One row per iteration. Rate objectives are additionally given in
    /// bits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "iter,true_obj_nats,true_obj_bits,subproblem_obj,primal_res,dual_res,gap,mu,seconds\n",
        );
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{:e},{:e},{:e},{},{}",
                r.iter,
                r.true_objective,
                r.true_objective / std::f64::consts::LN_2,
                r.subproblem_objective.map_or(String::new(), |v| v.to_string()),
                r.residuals.primal,
                r.residuals.dual,
                r.residuals.gap,
                r.mu,
                r.seconds
            );
        }
        s
    }
}

/// Sizes of the secrecy subproblem of `cfg`.
pub fn problem_dimensions(cfg: &NetworkConfig) -> Dimensions {
    secrecy_dimensions(cfg.cells, cfg.users, cfg.zone1, cfg.antennas)
}

struct Normalised {
    cs: ChannelSet,
    cfg: NetworkConfig,
    units: Units,
}

fn normalise(cs: &ChannelSet, cfg: &NetworkConfig) -> Normalised {
    let (s, units) = Scenario {
        cfg: cfg.clone(),
        channels: cs.clone(),
    }
    .normalized();
    Normalised {
        cs: s.channels,
        cfg: s.cfg,
        units,
    }
}

fn true_objective(
    kind: Objective,
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    x: &BeamformerSet,
    mu: f64,
) -> Result<f64, AlgorithmError> {
    let ts = TimeSplit::from_mu(mu)?;
    Ok(match kind {
        Objective::SecrecyRate => metrics::min_secrecy_rate(cs, x, ts, cfg)?,
        Objective::UserRate => metrics::min_ue_rate(cs, x, ts, cfg),
        Objective::EnergyEfficiency => metrics::see_values(cs, x, ts, cfg)?
            .into_iter()
            .fold(f64::INFINITY, f64::min),
    })
}

/// Whether `(x, mu)` can seed the bounds: original constraints hold, every
/// serving link has positive worst-case SINR and every eavesdropper
/// denominator is positive.
fn usable_start(
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    x: &BeamformerSet,
    mu: f64,
    tol: f64,
) -> Result<f64, f64> {
    let Ok(ts) = TimeSplit::from_mu(mu) else {
        return Err(f64::INFINITY);
    };
    let audit = feasibility_audit(cs, x, ts, cfg, tol);
    let worst = audit
        .families
        .iter()
        .map(|f| f.worst_violation)
        .fold(0.0, f64::max);
    if !audit.all_pass() {
        return Err(worst);
    }
    for k in 0..cs.cells {
        for n in 0..cs.users {
            if !(metrics::rate_numerator(cs, x, k, n) > 0.0) || !(q_bar(cs, x, cfg, mu, k, n) > 0.0)
            {
                return Err(f64::INFINITY);
            }
        }
    }
    Ok(worst)
}

fn solve_checked(sp: &Subproblem, opts: &RunOptions) -> Result<(Vec<f64>, f64, Residuals), String> {
    let res = solve(&sp.program, opts.solver).map_err(|e| e.to_string())?;
    if res.status != SolveStatus::Optimal {
        return Err(format!(
            "{:?} ({}) {:?}",
            res.status, res.backend_status, res.residuals
        ));
    }
    let cert = certify(&sp.program, &res, 10.0 * opts.solver.tol);
    if !cert.pass {
        return Err(format!("certification failed: {:?}", cert.residuals));
    }
    Ok((res.x, res.objective, res.residuals))
}

/// Fixed-split initialisation on a normalised scenario. Returns beams and
/// the time split.
fn init_normalised(
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    opts: &RunOptions,
) -> Result<(BeamformerSet, f64), AlgorithmError> {
    let mut best = f64::INFINITY;
    for r_min in [opts.r_min, opts.r_min / 10.0] {
        for &mu0 in &opts.mu0_schedule {
            let sp = assemble_init_program(cs, cfg, mu0, r_min, None);
            let Ok((x, _, _)) = solve_checked(&sp, opts) else {
                continue;
            };
            let (mut beams, _) = sp.extract(&x);
            for _ in 0..=opts.init_rounds {
                match usable_start(cs, cfg, &beams, mu0, 1e-8) {
                    Ok(_) => return Ok((rotate_phases(&beams, cs), mu0)),
                    Err(v) => best = best.min(v),
                }
                let sp = assemble_init_program(cs, cfg, mu0, r_min, Some(&beams));
                let Ok((x, _, _)) = solve_checked(&sp, opts) else {
                    break;
                };
                beams = sp.extract(&x).0;
            }
        }
    }
    Err(AlgorithmError::Initialization { shortfall: best })
}

fn to_physical(x: &BeamformerSet, units: &Units) -> BeamformerSet {
    x.scaled(units.beam_scale())
}

fn from_physical(x: &BeamformerSet, units: &Units) -> BeamformerSet {
    x.scaled(1.0 / units.beam_scale())
}

/// Feasible starting point for the secrecy loop, in physical units.
pub fn initialize_secrecy(
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    opts: &RunOptions,
) -> Result<(BeamformerSet, TimeSplit), AlgorithmError> {
    let nz = normalise(cs, cfg);
    let (x, mu) = init_normalised(&nz.cs, &nz.cfg, opts)?;
    Ok((to_physical(&x, &nz.units), TimeSplit::from_mu(mu)?))
}

struct LoopOutcome {
    records: Vec<IterationRecord>,
    x: BeamformerSet,
    mu: f64,
    termination: Termination,
}

/// The path-following loop on a normalised scenario. `scale` converts the
/// normalised objective to physical units.
fn path_follow(
    nz: &Normalised,
    kind: Objective,
    x0: BeamformerSet,
    mu0: f64,
    opts: &RunOptions,
) -> Result<LoopOutcome, AlgorithmError> {
    let (cs, cfg) = (&nz.cs, &nz.cfg);
    let scale = match kind {
        Objective::EnergyEfficiency => 1.0 / nz.units.power,
        _ => 1.0,
    };
    let eve = kind != Objective::UserRate;
    let see = kind == Objective::EnergyEfficiency;
    let start = Instant::now();
    let mut x = rotate_phases(&x0, cs);
    let mut mu = mu0;
    let mut obj = true_objective(kind, cs, cfg, &x, mu)?;
    let mut records = vec![IterationRecord {
        iter: 0,
        true_objective: obj * scale,
        subproblem_objective: None,
        residuals: Residuals::default(),
        mu,
        seconds: 0.0,
    }];
    let mut small_steps = 0;
    let mut termination = Termination::MaxIterations;
    for it in 1..=opts.max_iter {
        let exp = Iterate::at_point(cs, cfg, x.clone(), mu, eve, see);
        let sp = match kind {
            Objective::EnergyEfficiency => assemble_see_subproblem(&exp, cs, cfg)?,
            _ => assemble_secrecy_subproblem(&exp, cs, cfg, eve)?,
        };
        let (sol, sub_obj, residuals) = match solve_checked(&sp, opts) {
            Ok(v) => v,
            Err(msg) => {
                termination = Termination::SolverFailure(msg);
                break;
            }
        };
        let (next, next_mu) = sp.extract(&sol);
        let next_mu = next_mu.expect("iterative layouts carry the time split");
        let next = rotate_phases(&next, cs);
        let cand = match true_objective(kind, cs, cfg, &next, next_mu) {
            Ok(v) => v,
            Err(_) => {
                termination = Termination::NoAscent;
                break;
            }
        };
        let feasible = usable_start(cs, cfg, &next, next_mu, opts.audit_tol).is_ok();
        if !feasible || cand < obj {
            termination = Termination::NoAscent;
            break;
        }
        let change = (cand - obj).abs() / obj.abs().max(1e-12);
        x = next;
        mu = next_mu;
        obj = cand;
        records.push(IterationRecord {
            iter: it,
            true_objective: obj * scale,
            subproblem_objective: Some(sub_obj * scale),
            residuals,
            mu,
            seconds: start.elapsed().as_secs_f64(),
        });
        small_steps = if change <= opts.rel_tol {
            small_steps + 1
        } else {
            0
        };
        if small_steps >= 2 {
            termination = Termination::Converged;
            break;
        }
    }
    Ok(LoopOutcome {
        records,
        x,
        mu,
        termination,
    })
}

fn finish(
    nz: &Normalised,
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    kind: Objective,
    out: LoopOutcome,
    opts: &RunOptions,
) -> Result<RunTrace, AlgorithmError> {
    let beams = to_physical(&out.x, &nz.units);
    let ts = TimeSplit::from_mu(out.mu)?;
    Ok(RunTrace {
        objective: kind,
        records: out.records,
        report: MetricReport::evaluate(cs, &beams, ts, cfg)?,
        audit: feasibility_audit(cs, &beams, ts, cfg, opts.audit_tol),
        beams,
        time_split: ts,
        termination: out.termination,
    })
}

fn run_from(
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    kind: Objective,
    start: Option<(&BeamformerSet, TimeSplit)>,
    opts: &RunOptions,
) -> Result<RunTrace, AlgorithmError> {
    let nz = normalise(cs, cfg);
    let (x0, mu0) = match start {
        Some((x, ts)) => (from_physical(x, &nz.units), ts.mu),
        None => init_normalised(&nz.cs, &nz.cfg, opts)?,
    };
    let out = path_follow(&nz, kind, x0, mu0, opts)?;
    finish(&nz, cs, cfg, kind, out, opts)
}

/// Maximises the smallest worst-case secrecy rate.
pub fn run_secrecy(
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    opts: &RunOptions,
) -> Result<RunTrace, AlgorithmError> {
    run_from(cs, cfg, Objective::SecrecyRate, None, opts)
}

/// As [`run_secrecy`] from a given feasible starting point.
pub fn run_secrecy_from(
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    x0: &BeamformerSet,
    ts0: TimeSplit,
    opts: &RunOptions,
) -> Result<RunTrace, AlgorithmError> {
    run_from(cs, cfg, Objective::SecrecyRate, Some((x0, ts0)), opts)
}

/// Maximises the smallest worst-case user rate, ignoring eavesdroppers.
pub fn run_secrecy_noeve(
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    opts: &RunOptions,
) -> Result<RunTrace, AlgorithmError> {
    run_from(cs, cfg, Objective::UserRate, None, opts)
}

/// Secrecy initialisation followed by secrecy-rate steps until every UE
/// meets the floor `cfg.r_qos`. Physical units.
pub fn initialize_see(
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    opts: &RunOptions,
) -> Result<(BeamformerSet, TimeSplit), AlgorithmError> {
    let nz = normalise(cs, cfg);
    let (x, mu) = see_start(&nz, opts)?;
    Ok((to_physical(&x, &nz.units), TimeSplit::from_mu(mu)?))
}

fn see_start(nz: &Normalised, opts: &RunOptions) -> Result<(BeamformerSet, f64), AlgorithmError> {
    let (x, mu) = init_normalised(&nz.cs, &nz.cfg, opts)?;
    let target = nz.cfg.r_qos;
    let meets = |x: &BeamformerSet, mu: f64| -> Result<f64, AlgorithmError> {
        true_objective(Objective::SecrecyRate, &nz.cs, &nz.cfg, x, mu)
    };
    let mut achieved = meets(&x, mu)?;
    if achieved >= target {
        return Ok((x, mu));
    }
    // Climb the secrecy objective one accepted step at a time and stop as
    // soon as the floor is met.
    let mut cur = (x, mu);
    for _ in 0..opts.max_iter {
        let step = RunOptions {
            max_iter: 1,
            ..opts.clone()
        };
        let out = path_follow(nz, Objective::SecrecyRate, cur.0.clone(), cur.1, &step)?;
        if out.records.len() < 2 {
            break;
        }
        cur = (out.x, out.mu);
        achieved = meets(&cur.0, cur.1)?;
        if achieved >= target {
            return Ok(cur);
        }
    }
    Err(AlgorithmError::SecrecyFloor { target, achieved })
}

/// Maximises the smallest per-cell secrecy energy efficiency subject to
/// the per-UE secrecy floor `cfg.r_qos`.
pub fn run_see(
    cs: &ChannelSet,
    cfg: &NetworkConfig,
    opts: &RunOptions,
) -> Result<RunTrace, AlgorithmError> {
    let nz = normalise(cs, cfg);
    let (x0, mu0) = see_start(&nz, opts)?;
    let out = path_follow(&nz, Objective::EnergyEfficiency, x0, mu0, opts)?;
    finish(&nz, cs, cfg, Objective::EnergyEfficiency, out, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_channels;

    fn small(seed: u64) -> (NetworkConfig, ChannelSet) {
        let cfg = NetworkConfig {
            cells: 2,
            users: 2,
            zone1: 1,
            antennas: 3,
            seed,
            ..NetworkConfig::reference()
        };
        let cs = generate_channels(&cfg).unwrap();
        (cfg, cs)
    }

    #[test]
    fn dimensions_examples() {
        let cfg = NetworkConfig {
            antennas: 4,
            ..NetworkConfig::reference()
        };
        let d = problem_dimensions(&cfg);
        assert_eq!(
            (
                d.scalar_variables,
                d.linear_constraints,
                d.quadratic_constraints
            ),
            (73, 46, 61)
        );
        let one = NetworkConfig {
            cells: 1,
            users: 1,
            zone1: 1,
            antennas: 1,
            ..NetworkConfig::reference()
        };
        assert_eq!(problem_dimensions(&one).scalar_variables, 3);
        let two = NetworkConfig {
            cells: 6,
            ..cfg.clone()
        };
        let d2 = problem_dimensions(&two);
        assert_eq!(d2.scalar_variables - 1, 2 * (d.scalar_variables - 1));
    }

    #[test]
    fn initialisation_is_feasible() {
        let (cfg, cs) = small(1);
        let (x, ts) = initialize_secrecy(&cs, &cfg, &RunOptions::default()).unwrap();
        assert!(feasibility_audit(&cs, &x, ts, &cfg, 1e-6).all_pass());
        assert_eq!(ts.mu, 1.11);
    }

    #[test]
    fn secrecy_run_is_monotone_and_feasible() {
        let (cfg, cs) = small(2);
        let t = run_secrecy(&cs, &cfg, &RunOptions::default()).unwrap();
        assert!(t.worst_step() >= -1e-8, "{:?}", t.records);
        assert!(t.audit.all_pass());
        assert!(t.final_objective() >= t.initial_objective());
        assert!((t.report.min_secrecy_rate - t.final_objective()).abs() < 1e-9);
    }
}
