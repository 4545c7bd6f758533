//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N ... PASS|FAIL` line (visible with `--nocapture`) and fails
//! when its criterion does.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use secbeam::algorithms::{
    problem_dimensions, run_secrecy, run_secrecy_noeve, run_see, RunOptions, RunTrace, Termination,
};
use secbeam::conic::analytic::run_cases;
use secbeam::conic::assemble::{assemble_secrecy_subproblem, assemble_see_subproblem};
use secbeam::conic::solver::DEFAULT_TOL;
use secbeam::conic::{certify, solve, SolveOptions, SolveStatus};
use secbeam::metrics::{see_values, TimeSplit};
use secbeam::model::{dbm_to_watts, generate_channels, NetworkConfig};
use secbeam::sca::Iterate;
use secbeam::validation::{
    grid_dominance, random_expansion, relaxed_for, run_suites, GridSpec, SuiteSpec, ValidationSummary,
};

const TRIALS: u64 = 20;

fn report(n: usize, name: &str, pass: bool, detail: String) {
    println!("criterion {n:>2} {name:<32} {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Secrecy,
    NoEve,
    See,
}

struct Batch {
    runs: Vec<Result<RunTrace, String>>,
    elapsed: Duration,
}

fn run_batch(kind: Kind, cfg: &NetworkConfig) -> Batch {
    let t0 = Instant::now();
    let opts = RunOptions::default();
    let runs = (0..TRIALS)
        .into_par_iter()
        .map(|seed| {
            let cfg = NetworkConfig { seed, ..cfg.clone() };
            let cs = generate_channels(&cfg).map_err(|e| e.to_string())?;
            let r = match kind {
                Kind::Secrecy => run_secrecy(&cs, &cfg, &opts),
                Kind::NoEve => run_secrecy_noeve(&cs, &cfg, &opts),
                Kind::See => run_see(&cs, &cfg, &opts),
            };
            r.map_err(|e| e.to_string())
        })
        .collect();
    Batch {
        runs,
        elapsed: t0.elapsed(),
    }
}

fn secrecy() -> &'static Batch {
    static B: OnceLock<Batch> = OnceLock::new();
    B.get_or_init(|| run_batch(Kind::Secrecy, &NetworkConfig::reference()))
}

fn noeve() -> &'static Batch {
    static B: OnceLock<Batch> = OnceLock::new();
    B.get_or_init(|| run_batch(Kind::NoEve, &NetworkConfig::reference()))
}

fn see() -> &'static Batch {
    static B: OnceLock<Batch> = OnceLock::new();
    B.get_or_init(|| run_batch(Kind::See, &NetworkConfig::reference()))
}

fn suites() -> &'static ValidationSummary {
    static S: OnceLock<ValidationSummary> = OnceLock::new();
    S.get_or_init(|| run_suites(&NetworkConfig::reference(), &SuiteSpec::default()).expect("validation suites"))
}

fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Trials that stopped on their own (converged or no further ascent)
/// within `limit` iterations.
fn terminated_within(b: &Batch, limit: usize) -> usize {
    b.runs
        .iter()
        .filter(|r| {
            r.as_ref().is_ok_and(|t| {
                matches!(t.termination, Termination::Converged | Termination::NoAscent) && t.iterations() <= limit
            })
        })
        .count()
}

fn iterations(b: &Batch) -> Vec<usize> {
    b.runs.iter().filter_map(|r| r.as_ref().ok()).map(RunTrace::iterations).collect()
}

#[test]
fn criterion_01_dimensions() {
    let t0 = Instant::now();
    let cfg = NetworkConfig {
        antennas: 4,
        ..NetworkConfig::reference()
    };
    let d = problem_dimensions(&cfg);
    let got = (d.scalar_variables, d.linear_constraints, d.quadratic_constraints);
    let dt = t0.elapsed();
    report(1, "dimensions", got == (73, 46, 61) && dt < Duration::from_secs(1), format!("{got:?} in {dt:?}"));
}

#[test]
fn criterion_02_convergence_envelope() {
    let b = secrecy();
    let within = terminated_within(b, 40);
    let med = median(iterations(b));
    let pass = within * 10 >= 9 * TRIALS as usize && med <= 30.0 && b.elapsed < Duration::from_secs(300);
    report(
        2,
        "convergence envelope",
        pass,
        format!("{within}/{TRIALS} within 40, median {med}, {:.1?}", b.elapsed),
    );
}

#[test]
fn criterion_03_no_eavesdropper_speedup() {
    let (s, n) = (secrecy(), noeve());
    let med = median(iterations(n));
    let mut dominated = 0;
    for (a, b) in s.runs.iter().zip(&n.runs) {
        if let (Ok(a), Ok(b)) = (a, b) {
            if b.final_objective() >= a.final_objective() {
                dominated += 1;
            }
        }
    }
    let pass = med <= 10.0 && dominated == TRIALS as usize;
    report(
        3,
        "no-eavesdropper speedup",
        pass,
        format!("median {med}, min-rate >= secrecy on {dominated}/{TRIALS} seeds"),
    );
}

#[test]
fn criterion_04_monotone_ascent() {
    let mut total = 0;
    let mut ok = 0;
    let mut worst = f64::INFINITY;
    for b in [secrecy(), noeve(), see()] {
        for r in &b.runs {
            total += 1;
            if let Ok(t) = r {
                let w = t.worst_step();
                worst = worst.min(w);
                ok += usize::from(w >= -1e-8);
            }
        }
    }
    report(4, "monotone ascent", ok == total, format!("{ok}/{total} trials, worst step {worst:.2e}"));
}

#[test]
fn criterion_05_feasibility_audit() {
    let mut total = 0;
    let mut ok = 0;
    let mut worst = 0.0f64;
    for b in [secrecy(), noeve(), see()] {
        for r in &b.runs {
            total += 1;
            if let Ok(t) = r {
                assert_eq!(t.audit.tol, 1e-6);
                worst = t.audit.families.iter().map(|f| f.worst_violation).fold(worst, f64::max);
                ok += usize::from(t.audit.all_pass());
            }
        }
    }
    report(5, "feasibility audit", ok == total, format!("{ok}/{total} trials, worst relative violation {worst:.2e}"));
}

/// Mean and standard error of the final minimum secrecy rate over the
/// common seeds; failed trials count as zero.
fn point_stats(cfg: &NetworkConfig) -> (f64, f64) {
    static CACHE: std::sync::Mutex<Vec<(NetworkConfig, (f64, f64))>> = std::sync::Mutex::new(Vec::new());
    if let Some((_, v)) = CACHE.lock().unwrap().iter().find(|(c, _)| c == cfg) {
        return *v;
    }
    let fresh;
    let b = if *cfg == NetworkConfig::reference() {
        secrecy()
    } else {
        fresh = run_batch(Kind::Secrecy, cfg);
        &fresh
    };
    let v: Vec<f64> = b.runs.iter().map(|r| r.as_ref().map_or(0.0, |t| t.final_objective())).collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let out = (mean, (var / n).sqrt());
    CACHE.lock().unwrap().push((cfg.clone(), out));
    out
}

#[test]
fn criterion_06_trends() {
    let base = NetworkConfig::reference();
    let perfect = |c: NetworkConfig| NetworkConfig { eps0: 0.0, eps1: 0.0, ..c };
    let mut lines = Vec::new();
    let mut pass = true;
    // Ordering within one standard error of either point.
    let mut check = |what: String, lower: (f64, f64), upper: (f64, f64)| {
        let ok = upper.0 >= lower.0 - lower.1.max(upper.1);
        pass &= ok;
        if !ok {
            lines.push(format!("{what}: {:.4}±{:.4} vs {:.4}±{:.4}", upper.0, upper.1, lower.0, lower.1));
        }
    };

    let e_grid = [-25.0, -20.0, -15.0, -10.0, -5.0, 0.0];
    let mut prev: Option<((f64, f64), (f64, f64))> = None;
    let mut e_means = Vec::new();
    for e in e_grid {
        let cfg = NetworkConfig {
            e_min: dbm_to_watts(e),
            ..base.clone()
        };
        let unc = point_stats(&cfg);
        let per = point_stats(&perfect(cfg));
        check(format!("perfect >= uncertain at e_min {e} dBm"), unc, per);
        if let Some((pu, pp)) = prev {
            check(format!("uncertain nonincreasing at e_min {e} dBm"), unc, pu);
            check(format!("perfect nonincreasing at e_min {e} dBm"), per, pp);
        }
        e_means.push(unc.0);
        prev = Some((unc, per));
    }

    let mut prev: Option<((f64, f64), (f64, f64))> = None;
    let mut m_means = Vec::new();
    for m in [4, 5, 6] {
        let cfg = NetworkConfig {
            antennas: m,
            ..base.clone()
        };
        let unc = point_stats(&cfg);
        let per = point_stats(&perfect(cfg));
        check(format!("perfect >= uncertain at M {m}"), unc, per);
        if let Some((pu, pp)) = prev {
            check(format!("uncertain nondecreasing at M {m}"), pu, unc);
            check(format!("perfect nondecreasing at M {m}"), pp, per);
        }
        m_means.push(unc.0);
        prev = Some((unc, per));
    }
    let detail = if lines.is_empty() {
        format!("e_min means {e_means:.3?}, M means {m_means:.3?}")
    } else {
        lines.join("; ")
    };
    report(6, "trend reproduction", pass, detail);
}

#[test]
fn criterion_07_bound_certification() {
    let s = suites();
    let families = ["tangency/", "domination/", "inequality/"];
    let mut pass = s.expansions == 100;
    let mut detail = vec![format!("{} expansions", s.expansions)];
    for r in s.reports.iter().filter(|r| families.iter().any(|f| r.name.starts_with(f))) {
        let min = if r.name.starts_with("domination/") {
            1000
        } else if r.name.starts_with("inequality/") {
            10_000
        } else {
            1
        };
        if !(r.pass && r.samples >= min) {
            pass = false;
            detail.push(format!("{} samples {} violation {:.2e}", r.name, r.samples, r.max_violation));
        }
    }
    let count = s.reports.iter().filter(|r| families.iter().any(|f| r.name.starts_with(f))).count();
    detail.push(format!("{count} checks"));
    report(7, "bound certification", pass && count >= 24, detail.join(", "));
}

#[test]
fn criterion_08_inner_approximation_soundness() {
    let s = suites();
    let sound: Vec<_> = s.reports.iter().filter(|r| r.name.starts_with("soundness/")).collect();
    let pass = sound.len() == 3 && sound.iter().all(|r| r.pass && r.samples >= 1000 && r.max_violation <= 0.0);
    let detail = sound
        .iter()
        .map(|r| format!("{} {}/{:.1e}", r.name.trim_start_matches("soundness/"), r.samples, r.max_violation))
        .collect::<Vec<_>>()
        .join(", ");
    report(8, "inner-approximation soundness", pass, detail);
}

#[test]
fn criterion_09_solver_certification() {
    let analytic = run_cases();
    let analytic_ok = analytic
        .iter()
        .all(|o| o.status == SolveStatus::Optimal && o.error <= 1e-8 && o.certified);
    let worst_analytic = analytic.iter().map(|o| o.error).fold(0.0, f64::max);

    let mut optimal = 0;
    let mut certified = 0;
    let mut worst = 0.0f64;
    let base = NetworkConfig::reference();
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let (cfg, cs, exp) = random_expansion(&base, &mut rng).expect("expansion");
        let cfg = relaxed_for(&exp, &cs, &cfg).expect("relaxation");
        let exp = Iterate::at_point(&cs, &cfg, exp.x, exp.mu, true, true);
        let no_t = Iterate {
            t: Vec::new(),
            ..exp.clone()
        };
        let programs = [
            assemble_secrecy_subproblem(&no_t, &cs, &cfg, true).expect("secrecy program"),
            assemble_secrecy_subproblem(&no_t, &cs, &cfg, false).expect("rate program"),
            assemble_see_subproblem(&exp, &cs, &cfg).expect("efficiency program"),
        ];
        for sp in programs {
            let r = solve(&sp.program, SolveOptions::default()).expect("solver setup");
            if r.status == SolveStatus::Optimal {
                optimal += 1;
                let c = certify(&sp.program, &r, 10.0 * DEFAULT_TOL);
                worst = worst.max(c.residuals.max());
                certified += usize::from(c.pass);
            }
        }
    }
    let pass = analytic_ok && optimal > 0 && certified == optimal;
    report(
        9,
        "solver certification",
        pass,
        format!(
            "{} analytic cases, worst error {worst_analytic:.1e}; {certified}/{optimal} optimal subproblems certified, worst residual {worst:.1e}",
            analytic.len()
        ),
    );
}

#[test]
fn criterion_10_grid_oracle_dominance() {
    let t0 = Instant::now();
    let d = grid_dominance(0, &GridSpec::default(), &RunOptions::default()).expect("grid oracle");
    let dt = t0.elapsed();
    let pass = d.report.pass && d.final_value >= d.oracle - 1e-6 && d.audit_pass && dt < Duration::from_secs(30);
    report(
        10,
        "grid-oracle dominance",
        pass,
        format!("oracle {:.6}, final {:.6}, {} iterations, {dt:.1?}", d.oracle, d.final_value, d.iterations),
    );
}

#[test]
fn criterion_11_see_pipeline() {
    let b = see();
    let within = terminated_within(b, 40);
    let mut monotone = 0;
    let mut audited = 0;
    let mut qos = 0;
    let mut recomputed = 0;
    let mut decomposed = 0;
    let mut worst_rel = 0.0f64;
    let base = NetworkConfig::reference();
    for (seed, r) in b.runs.iter().enumerate() {
        let Ok(t) = r else { continue };
        monotone += usize::from(t.worst_step() >= -1e-8);
        audited += usize::from(t.audit.all_pass());
        let cfg = NetworkConfig {
            seed: seed as u64,
            ..base.clone()
        };
        let floor = t.report.secrecy_rate.iter().map(|s| (cfg.r_qos - s) / cfg.r_qos).fold(0.0, f64::max);
        qos += usize::from(floor <= 1e-6);
        let cs = generate_channels(&cfg).unwrap();
        let ts = TimeSplit::from_mu(t.time_split.mu).unwrap();
        let see_min = see_values(&cs, &t.beams, ts, &cfg).unwrap().into_iter().fold(f64::INFINITY, f64::min);
        let rel = (see_min - t.final_objective()).abs() / see_min.abs();
        worst_rel = worst_rel.max(rel);
        recomputed += usize::from(rel <= 1e-6);
        let rep = &t.report;
        let consistent = rep
            .see
            .iter()
            .zip(rep.cell_sum_rate.iter().zip(&rep.cell_consumed))
            .all(|(s, (n, d))| ((n / d) - s).abs() <= 1e-9 * s.abs());
        decomposed += usize::from(consistent);
    }
    let n = TRIALS as usize;
    let pass = within * 10 >= 9 * n && [monotone, audited, qos, recomputed, decomposed].iter().all(|&c| c == n);
    report(
        11,
        "secrecy energy efficiency",
        pass,
        format!(
            "{within}/{n} within 40, monotone {monotone}, audit {audited}, QoS {qos}, recomputed {recomputed} (worst {worst_rel:.1e}), decomposition {decomposed}, {:.1?}",
            b.elapsed
        ),
    );
}
