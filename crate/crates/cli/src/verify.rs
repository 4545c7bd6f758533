use std::path::Path;

use secbeam::algorithms::RunOptions;
use secbeam::validation::{grid_dominance, run_suites, GridDominance, GridSpec, SuiteSpec, ValidationSummary};
use secbeam::NetworkConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::experiment::write;

/// Everything `verify` checks, as written to its JSON output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub suites: SuiteSpec,
    pub summary: ValidationSummary,
    pub grid: Option<GridDominance>,
}

impl VerifyOutcome {
    pub fn all_pass(&self) -> bool {
        self.summary.all_pass()
    }
}

/// Runs the oracle suites on scenarios drawn from `base` and, when
/// `grid_seed` is given, the grid-oracle dominance check (its report is
/// merged into the summary).
pub fn verify(base: &NetworkConfig, suites: SuiteSpec, grid_seed: Option<u64>) -> Result<VerifyOutcome, CliError> {
    let mut summary = run_suites(base, &suites)?;
    let grid = match grid_seed {
        Some(seed) => {
            let g = grid_dominance(seed, &GridSpec::default(), &RunOptions::default())?;
            summary.absorb(vec![g.report.clone()]);
            Some(g)
        }
        None => None,
    };
    Ok(VerifyOutcome { suites, summary, grid })
}

pub fn save(outcome: &VerifyOutcome, path: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(outcome).map_err(|e| CliError::json(path, e))?;
    write(path, &text)
}

/// Reads a summary written by [`save`] (or a bare [`ValidationSummary`]).
pub fn load_summary(path: &Path) -> Result<ValidationSummary, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    match serde_json::from_str::<VerifyOutcome>(&text) {
        Ok(o) => Ok(o.summary),
        Err(_) => serde_json::from_str(&text).map_err(|e| CliError::json(path, e)),
    }
}

pub fn render(summary: &ValidationSummary) -> String {
    let mut s = format!("expansions: {}\n", summary.expansions);
    for r in &summary.reports {
        s += &format!(
            "{} {:<45} samples={:<7} max_violation={:.3e} tolerance={:.0e}\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.samples,
            r.max_violation,
            r.tolerance
        );
    }
    s
}
