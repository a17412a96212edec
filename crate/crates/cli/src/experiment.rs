//! Batch runs over damage sizes and repeats, with resumable output.
//!
//! Output directory layout:
//! - `runs.csv`: one row per (N_D, repeat, algorithm), sorted by that key.
//! - `summary.csv`: mean and sample standard deviation per (N_D, algorithm).
//! - `failures.csv`: cells that returned an error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use uavnet_core::metrics::recovery_summary;
use uavnet_core::sim::SimSettings;
use uavnet_core::swarm::SwarmConfig;

use crate::export::write_csv;
use crate::files::{splitmix64, ScenarioFile};
use crate::run::{run_algo, Algo, GcOptions};
use crate::{CliError, CliResult};

/// Environment variable holding the worker count; unset or 0 uses every core.
pub const WORKERS_ENV: &str = "SWARM_WORKERS";

pub const RUNS_FILE: &str = "runs.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const FAILURES_FILE: &str = "failures.csv";

const RUNS_HEADER: [&str; 10] = [
    "n_destroyed",
    "repeat",
    "seed",
    "scenario_id",
    "algo",
    "k_or_kstar",
    "t_rc",
    "coverage_ratio",
    "final_subnets",
    "fallback_used",
];
const SUMMARY_HEADER: [&str; 8] =
    ["n_destroyed", "algo", "runs", "t_rc_mean", "t_rc_std", "coverage_mean", "coverage_std", "connected_rate"];
const FAILURES_HEADER: [&str; 4] = ["n_destroyed", "repeat", "algo", "error"];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub base_config: SwarmConfig,
    pub damage_sizes: Vec<usize>,
    pub repeats: usize,
    pub algorithms: Vec<Algo>,
    pub seed_base: u64,
    pub output_dir: PathBuf,
    pub gc: GcOptions,
}

impl ExperimentPlan {
    /// N = 60, N_D in {15, 30, 45}, 10 repeats.
    pub fn desk(seed_base: u64, output_dir: PathBuf) -> Self {
        ExperimentPlan {
            base_config: SwarmConfig::desk_scale(seed_base),
            damage_sizes: vec![15, 30, 45],
            repeats: 10,
            algorithms: vec![Algo::Apf { k: 3 }, Algo::Centering, Algo::Gc],
            seed_base,
            output_dir,
            gc: GcOptions::default(),
        }
    }

    /// N = 200, N_D from 10 to 190 in steps of 10, 50 repeats.
    pub fn full(seed_base: u64, output_dir: PathBuf) -> Self {
        ExperimentPlan {
            base_config: SwarmConfig::full_scale(seed_base),
            damage_sizes: (1..=19).map(|i| 10 * i).collect(),
            repeats: 50,
            gc: GcOptions { profile: uavnet_core::gcn::ModelProfile::Full, ..GcOptions::default() },
            ..ExperimentPlan::desk(seed_base, output_dir)
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.base_config.validate()?;
        let n = self.base_config.n_total;
        if let Some(&bad) = self.damage_sizes.iter().find(|&&nd| nd == 0 || nd >= n) {
            return Err(CliError::Validation(format!("damage size {bad} must be in 1..{n}")));
        }
        if self.repeats == 0 {
            return Err(CliError::Validation("repeats must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(CliError::Validation("no algorithms selected".into()));
        }
        Ok(())
    }

    fn algo_rank(&self, label: &str) -> usize {
        self.algorithms.iter().position(|a| a.to_string() == label).unwrap_or(usize::MAX)
    }
}

/// Seed of one (N_D, repeat) cell; does not depend on scheduling order.
pub fn run_seed(seed_base: u64, n_destroyed: usize, repeat: usize) -> u64 {
    splitmix64(seed_base ^ splitmix64(((n_destroyed as u64) << 32) | repeat as u64))
}

pub fn scenario_id(n_destroyed: usize, repeat: usize) -> String {
    format!("nd{n_destroyed}-r{repeat}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub n_destroyed: usize,
    pub repeat: usize,
    pub seed: u64,
    pub scenario_id: String,
    pub algo: String,
    pub k_or_kstar: Option<usize>,
    pub t_rc: f64,
    pub coverage_ratio: f64,
    pub final_subnets: usize,
    pub fallback_used: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub n_destroyed: usize,
    pub algo: String,
    pub runs: usize,
    pub t_rc_mean: f64,
    pub t_rc_std: f64,
    pub coverage_mean: f64,
    pub coverage_std: f64,
    pub connected_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailedCell {
    pub n_destroyed: usize,
    pub repeat: usize,
    pub algo: String,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentReport {
    pub computed: usize,
    pub skipped: usize,
    pub failures: Vec<FailedCell>,
}

fn read_runs(path: &Path) -> CliResult<Vec<RunRow>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::read(path, e))?;
    reader.deserialize().map(|r| r.map_err(|e| CliError::read(path, e))).collect()
}

type RowKey = (usize, usize, String);

struct Store {
    rows: BTreeMap<RowKey, RunRow>,
    path: PathBuf,
}

impl Store {
    fn flush(&self, plan: &ExperimentPlan) -> CliResult<()> {
        let mut rows: Vec<&RunRow> = self.rows.values().collect();
        rows.sort_by_key(|r| (r.n_destroyed, r.repeat, plan.algo_rank(&r.algo), r.algo.clone()));
        write_csv(&self.path, &RUNS_HEADER, &rows)
    }
}

fn run_cell(plan: &ExperimentPlan, nd: usize, repeat: usize, algos: &[Algo]) -> Vec<Result<RunRow, FailedCell>> {
    let seed = run_seed(plan.seed_base, nd, repeat);
    let fail = |algo: &Algo, err: CliError| FailedCell {
        n_destroyed: nd,
        repeat,
        algo: algo.to_string(),
        error: err.to_string(),
    };
    let config = SwarmConfig { rng_seed: seed, ..plan.base_config.clone() };
    let realized = ScenarioFile::generate(&config, nd).and_then(|f| f.realize());
    let (usnet, scenario) = match realized {
        Ok(pair) => pair,
        Err(err) => return algos.iter().map(|a| Err(fail(a, CliError::Runtime(err.to_string())))).collect(),
    };
    let settings = SimSettings::new(config.dt, config.v_max);
    algos
        .iter()
        .map(|&algo| {
            let out = run_algo(algo, &usnet, &scenario, &settings, &plan.gc, seed, config.area_width)
                .map_err(|e| fail(&algo, e))?;
            let report = recovery_summary(&out.result, &usnet, &scenario);
            Ok(RunRow {
                n_destroyed: nd,
                repeat,
                seed,
                scenario_id: scenario_id(nd, repeat),
                algo: algo.to_string(),
                k_or_kstar: out.k_or_kstar(),
                t_rc: report.recovery_time,
                coverage_ratio: report.coverage_ratio,
                final_subnets: report.final_subnets,
                fallback_used: out.fallback_used,
            })
        })
        .collect()
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per (N_D, algorithm) aggregates over whatever rows exist.
pub fn summarize(plan: &ExperimentPlan, rows: &[RunRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, usize, String), Vec<&RunRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.n_destroyed, plan.algo_rank(&r.algo), r.algo.clone())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((nd, _, algo), group)| {
            let t: Vec<f64> = group.iter().map(|r| r.t_rc).collect();
            let c: Vec<f64> = group.iter().map(|r| r.coverage_ratio).collect();
            let (t_rc_mean, t_rc_std) = mean_std(&t);
            let (coverage_mean, coverage_std) = mean_std(&c);
            let connected = group.iter().filter(|r| r.final_subnets == 1).count();
            SummaryRow {
                n_destroyed: nd,
                algo,
                runs: group.len(),
                t_rc_mean,
                t_rc_std,
                coverage_mean,
                coverage_std,
                connected_rate: connected as f64 / group.len() as f64,
            }
        })
        .collect()
}

fn worker_pool() -> CliResult<rayon::ThreadPool> {
    let workers = match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Validation(format!("{WORKERS_ENV} must be a non-negative integer, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start workers: {e}")))
}

/// Runs every missing cell of the plan. Rows already in `runs.csv` are kept
/// and not recomputed; the runs file is rewritten after each finished cell.
pub fn run_experiment(plan: &ExperimentPlan) -> CliResult<ExperimentReport> {
    plan.validate()?;
    std::fs::create_dir_all(&plan.output_dir).map_err(|e| CliError::write(&plan.output_dir, e))?;
    let runs_path = plan.output_dir.join(RUNS_FILE);
    let existing = read_runs(&runs_path)?;
    let rows: BTreeMap<RowKey, RunRow> =
        existing.into_iter().map(|r| ((r.n_destroyed, r.repeat, r.algo.clone()), r)).collect();

    let mut pending = Vec::new();
    let mut skipped = 0;
    for &nd in &plan.damage_sizes {
        for repeat in 0..plan.repeats {
            let missing: Vec<Algo> =
                plan.algorithms.iter().copied().filter(|a| !rows.contains_key(&(nd, repeat, a.to_string()))).collect();
            skipped += plan.algorithms.len() - missing.len();
            if !missing.is_empty() {
                pending.push((nd, repeat, missing));
            }
        }
    }

    let store = Mutex::new(Store { rows, path: runs_path });
    let failures = Mutex::new(Vec::new());
    let computed = Mutex::new(0usize);
    let pool = worker_pool()?;
    pool.install(|| {
        pending.par_iter().try_for_each(|(nd, repeat, algos)| -> CliResult<()> {
            let outcomes = run_cell(plan, *nd, *repeat, algos);
            let mut store = store.lock().expect("store lock");
            for outcome in outcomes {
                match outcome {
                    Ok(row) => {
                        *computed.lock().expect("counter lock") += 1;
                        store.rows.insert((row.n_destroyed, row.repeat, row.algo.clone()), row);
                    }
                    Err(cell) => failures.lock().expect("failure lock").push(cell),
                }
            }
            store.flush(plan)
        })
    })?;

    let store = store.into_inner().expect("store lock");
    store.flush(plan)?;
    let all: Vec<RunRow> = store.rows.into_values().collect();
    write_csv(&plan.output_dir.join(SUMMARY_FILE), &SUMMARY_HEADER, &summarize(plan, &all))?;

    let mut failures = failures.into_inner().expect("failure lock");
    failures.sort_by(|a, b| (a.n_destroyed, a.repeat, &a.algo).cmp(&(b.n_destroyed, b.repeat, &b.algo)));
    write_csv(&plan.output_dir.join(FAILURES_FILE), &FAILURES_HEADER, &failures)?;
    Ok(ExperimentReport { computed: computed.into_inner().expect("counter lock"), skipped, failures })
}
