use std::f64::consts::LN_2;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::CliError;
use crate::experiment::{mean_stderr, read_trace, write, Manifest, TrialRecord};
use crate::spec::Mode;

pub const CONVERGENCE: &str = "plots/convergence.csv";
pub const DECOMPOSITION: &str = "plots/see_decomposition.csv";

/// Figure CSV of the sweep, e.g. `plots/rate_vs_M.csv`.
pub fn sweep_file(manifest: &Manifest) -> Option<String> {
    let axis = manifest.spec.sweep.axis?;
    Some(format!(
        "plots/{}_vs_{}.csv",
        manifest.spec.mode.figure_prefix(),
        axis.figure_name()
    ))
}

/// Writes the figure CSVs derived from the artifact directory `dir` and
/// registers them in its manifest. Returns the written paths.
pub fn emit_plot_data(dir: &Path) -> Result<Vec<String>, CliError> {
    let mut manifest = Manifest::load(dir)?;
    let mut written = Vec::new();

    let first = manifest
        .trials
        .iter()
        .find(|r| r.point == 0 && r.trial == 0)
        .and_then(|r| r.trace.clone())
        .ok_or_else(|| CliError::MissingArtifact("trace of point 0, trial 0".into()))?;
    let trace = read_trace(dir, &first)?;
    let mut s = String::from("iter,objective_bits,mu\n");
    for r in &trace.records {
        let _ = writeln!(s, "{},{},{}", r.iter, r.true_objective / LN_2, r.mu);
    }
    write(&dir.join(CONVERGENCE), &s)?;
    written.push(CONVERGENCE.to_string());

    if let Some(rel) = sweep_file(&manifest) {
        write(&dir.join(&rel), &sweep_csv(&manifest.trials))?;
        written.push(rel);
    }

    if manifest.spec.mode == Mode::See {
        let mut s = String::from("axis_value,trial,seed,cell,numerator_bits_per_hz,denominator_watts,see_bits_per_joule_per_hz\n");
        for rec in &manifest.trials {
            let Some(rel) = &rec.trace else { continue };
            let trace = read_trace(dir, rel)?;
            let rep = &trace.report;
            for (k, (num, den)) in rep.cell_sum_rate.iter().zip(&rep.cell_consumed).enumerate() {
                let num_bits = num / LN_2;
                let _ = writeln!(
                    s,
                    "{},{},{},{k},{num_bits},{den},{}",
                    rec.axis_value,
                    rec.trial,
                    rec.seed,
                    num_bits / den
                );
            }
        }
        write(&dir.join(DECOMPOSITION), &s)?;
        written.push(DECOMPOSITION.to_string());
    }

    for rel in &written {
        manifest.register(dir, rel)?;
    }
    manifest.save(dir)?;
    Ok(written)
}

/// One row per sweep point, in order of first appearance.
fn sweep_csv(trials: &[TrialRecord]) -> String {
    let mut s = String::from("value,mean_bits,stderr_bits,mean_iterations,trials,failed\n");
    let mut point = 0;
    loop {
        let here: Vec<&TrialRecord> = trials.iter().filter(|r| r.point == point).collect();
        if here.is_empty() {
            return s;
        }
        let v: Vec<f64> = here.iter().map(|r| r.objective_bits.unwrap_or(0.0)).collect();
        let it: Vec<f64> = here.iter().filter_map(|r| r.iterations).map(|i| i as f64).collect();
        let (mean, se) = mean_stderr(&v);
        let (mean_it, _) = mean_stderr(&it);
        let failed = here.iter().filter(|r| r.error.is_some()).count();
        let _ = writeln!(s, "{},{mean},{se},{mean_it},{},{failed}", here[0].axis_value, here.len());
        point += 1;
    }
}
