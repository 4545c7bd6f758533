use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use secbeam::algorithms::{run_secrecy, run_secrecy_noeve, run_see, RunOptions, RunTrace};
use secbeam::model::generate_channels;
use secbeam::NetworkConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::spec::{ExperimentSpec, Mode};

pub const MANIFEST: &str = "manifest.json";
pub const AGGREGATE: &str = "aggregate.csv";
pub const CONVERGENCE: &str = "convergence.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub point: usize,
    pub axis_value: String,
    pub trial: usize,
    pub seed: u64,
    /// Final objective in bits (per s/Hz, or per J/Hz for efficiency).
    pub objective_bits: Option<f64>,
    pub iterations: Option<usize>,
    pub termination: Option<String>,
    pub audit_pass: Option<bool>,
    pub trace: Option<String>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub solver: String,
    pub spec: ExperimentSpec,
    pub config: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub trials: Vec<TrialRecord>,
    pub failures: Vec<TrialRecord>,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|_| CliError::MissingArtifact(path.display().to_string()))?;
        serde_json::from_str(&text).map_err(|e| CliError::json(&path, e))
    }

    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::json(&path, e))?;
        write(&path, &text)
    }

    /// Adds or refreshes the entry of `rel` (relative to `dir`).
    pub fn register(&mut self, dir: &Path, rel: &str) -> Result<(), CliError> {
        let bytes = fs::read(dir.join(rel)).map_err(|e| CliError::io(dir.join(rel), e))?;
        let entry = FileEntry {
            path: rel.to_string(),
            sha256: sha256_hex(&bytes),
        };
        match self.files.iter_mut().find(|f| f.path == rel) {
            Some(f) => *f = entry,
            None => self.files.push(entry),
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Solver-facing options of a run.
pub fn run_options(spec: &ExperimentSpec) -> RunOptions {
    RunOptions {
        max_iter: spec.max_iter,
        ..RunOptions::default()
    }
}

pub fn run_trial(mode: Mode, cfg: &NetworkConfig, opts: &RunOptions) -> Result<RunTrace, String> {
    let cs = generate_channels(cfg).map_err(|e| e.to_string())?;
    let r = match mode {
        Mode::Secrecy => run_secrecy(&cs, cfg, opts),
        Mode::SecrecyNoeve => run_secrecy_noeve(&cs, cfg, opts),
        Mode::See => run_see(&cs, cfg, opts),
    };
    r.map_err(|e| e.to_string())
}

pub fn trace_path(point: usize, trial: usize) -> String {
    format!("traces/point{point:02}_trial{trial:03}.json")
}

/// Worker count from `SECBEAM_WORKERS`, or `None` for the pool default.
pub fn workers_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("SECBEAM_WORKERS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("SECBEAM_WORKERS=`{v}` is not a positive integer"))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs every trial of every sweep point and writes traces, the aggregate
/// and convergence CSVs and the manifest into `spec.output`.
///
/// Trial `t` uses seed `seed_base + t` at every sweep point. Failed trials
/// count as zero in the aggregate mean and are listed in the manifest.
pub fn run_experiment(spec: &ExperimentSpec, workers: Option<usize>) -> Result<Manifest, CliError> {
    spec.validate()?;
    let base = spec.base_config()?;
    let points = spec.sweep.points(&base)?;
    let opts = run_options(spec);
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Pool(e.to_string()))?;
    let results: Vec<Result<RunTrace, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, t)| {
                let cfg = NetworkConfig {
                    seed: spec.seed_base + t as u64,
                    ..points[p].1.clone()
                };
                run_trial(spec.mode, &cfg, &opts)
            })
            .collect()
    });

    let dir = &spec.output;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let config_text = base.to_text();
    let mut manifest = Manifest {
        tool: "secbeam".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        solver: "clarabel 0.11".into(),
        spec: spec.clone(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        config: config_text,
        seeds: (0..spec.trials as u64).map(|t| spec.seed_base + t).collect(),
        trials: Vec::new(),
        failures: Vec::new(),
        files: Vec::new(),
    };
    for (&(p, t), res) in jobs.iter().zip(&results) {
        let mut rec = TrialRecord {
            point: p,
            axis_value: points[p].0.clone(),
            trial: t,
            seed: spec.seed_base + t as u64,
            objective_bits: None,
            iterations: None,
            termination: None,
            audit_pass: None,
            trace: None,
            error: None,
        };
        match res {
            Ok(trace) => {
                let rel = trace_path(p, t);
                let json = trace.to_json().map_err(|e| CliError::json(dir.join(&rel), e))?;
                write(&dir.join(&rel), &json)?;
                manifest.register(dir, &rel)?;
                rec.objective_bits = Some(trace.final_objective() / std::f64::consts::LN_2);
                rec.iterations = Some(trace.iterations());
                rec.termination = Some(termination_label(trace));
                rec.audit_pass = Some(trace.audit.all_pass());
                rec.trace = Some(rel);
                if p == 0 && t == 0 {
                    write(&dir.join(CONVERGENCE), &trace.to_csv())?;
                    manifest.register(dir, CONVERGENCE)?;
                }
            }
            Err(e) => {
                rec.error = Some(e.clone());
                manifest.failures.push(rec.clone());
            }
        }
        manifest.trials.push(rec);
    }
    write(&dir.join(AGGREGATE), &aggregate_csv(spec, &points, &manifest.trials))?;
    manifest.register(dir, AGGREGATE)?;
    manifest.save(dir)?;
    if manifest.failures.len() == manifest.trials.len() {
        return Err(CliError::AllTrialsFailed(manifest.trials.len()));
    }
    Ok(manifest)
}

fn termination_label(trace: &RunTrace) -> String {
    serde_json::to_value(&trace.termination)
        .ok()
        .and_then(|v| match v {
            serde_json::Value::String(s) => Some(s),
            serde_json::Value::Object(m) => m.keys().next().cloned(),
            _ => None,
        })
        .unwrap_or_default()
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One row per sweep point.
pub fn aggregate_csv(spec: &ExperimentSpec, points: &[(String, NetworkConfig)], trials: &[TrialRecord]) -> String {
    let axis = spec.sweep.axis.map_or("none", |a| a.key());
    let mut s = String::from("axis,value,unit,mean,stderr,mean_iterations,trials,failed\n");
    for (p, (label, _)) in points.iter().enumerate() {
        let here: Vec<&TrialRecord> = trials.iter().filter(|r| r.point == p).collect();
        let values: Vec<f64> = here.iter().map(|r| r.objective_bits.unwrap_or(0.0)).collect();
        let iters: Vec<f64> = here.iter().filter_map(|r| r.iterations).map(|i| i as f64).collect();
        let (mean, stderr) = mean_stderr(&values);
        let (mean_it, _) = mean_stderr(&iters);
        let failed = here.iter().filter(|r| r.error.is_some()).count();
        let _ = writeln!(
            s,
            "{axis},{label},{},{mean},{stderr},{mean_it},{},{failed}",
            spec.mode.unit(),
            here.len()
        );
    }
    s
}

pub fn read_trace(dir: &Path, rel: &str) -> Result<RunTrace, CliError> {
    let path: PathBuf = dir.join(rel);
    let text = fs::read_to_string(&path).map_err(|_| CliError::MissingArtifact(path.display().to_string()))?;
    serde_json::from_str(&text).map_err(|e| CliError::json(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stderr_of_known_sample() {
        let (m, se) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[7.0]), (7.0, 0.0));
        assert!(mean_stderr(&[]).0.is_nan());
    }

    #[test]
    fn sha256_matches_reference() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn trace_paths_are_stable() {
        assert_eq!(trace_path(1, 7), "traces/point01_trial007.json");
    }
}
