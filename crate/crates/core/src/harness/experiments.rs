//! Monte-Carlo drivers. Seed `s` draws its channels and initial precoders
//! from `derive_seed(master_seed, purpose, s)`, and every algorithm starts
//! from that same draw. Seeds run in parallel; results are gathered in seed
//! order, so output does not depend on the worker count.

use std::path::PathBuf;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, RateMode};
use super::output::{
    header_line, write_csv, AngleRow, ConvergenceMeanRow, ConvergenceRow, DofRow, RateRow,
};
use super::HarnessError;
use crate::alignment::PrecoderSet;
use crate::manifolds::ManifoldKind;
use crate::metrics::{dof_slope, max_interference_angle, sum_rate, DEGENERATE_START_TOL};
use crate::network::{
    derive_seed, sample_channels, sample_initial_precoders, ChannelSet, NetworkConfig, SeedPurpose,
};
use crate::optimizer::{Optimizer, StopReason};

/// Channel and initial-precoder draw shared by every algorithm.
#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: usize,
    pub channels: ChannelSet,
    pub init: PrecoderSet,
}

pub fn instance(cfg: &ExperimentConfig, net: &NetworkConfig, seed: usize) -> Instance {
    let index = seed as u64;
    Instance {
        seed,
        channels: sample_channels(net, derive_seed(cfg.master_seed, SeedPurpose::Channels, index)),
        init: sample_initial_precoders(
            net,
            derive_seed(cfg.master_seed, SeedPurpose::InitialPrecoders, index),
        ),
    }
}

fn optimizer(cfg: &ExperimentConfig, kind: ManifoldKind) -> Optimizer {
    Optimizer::new(kind, cfg.stop).with_step_policy(cfg.step_policy())
}

fn with_pool<T: Send>(
    cfg: &ExperimentConfig,
    job: impl FnOnce() -> T + Send,
) -> Result<T, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
    Ok(pool.install(job))
}

/// One optimizer run. `costs` holds every sweep completed before the run
/// ended, even when it ended in an error.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub algorithm: ManifoldKind,
    pub seed: usize,
    pub costs: Vec<f64>,
    pub outcome: Result<StopReason, String>,
    pub precoders: Option<PrecoderSet>,
}

impl RunRecord {
    pub fn status(&self) -> String {
        match &self.outcome {
            Ok(reason) if self.is_degenerate() => format!("{}:degenerate_start", reason.name()),
            Ok(reason) => reason.name().to_string(),
            Err(message) => format!("error: {message}"),
        }
    }

    fn is_degenerate(&self) -> bool {
        self.costs.first().is_some_and(|&c| !(c > DEGENERATE_START_TOL))
    }

    /// `cost / cost[0]`, or `None` when the run never had a usable start.
    pub fn normalized(&self) -> Option<Vec<f64>> {
        let &first = self.costs.first()?;
        (!self.is_degenerate()).then(|| self.costs.iter().map(|c| c / first).collect())
    }

    pub fn final_normalized(&self) -> Option<f64> {
        self.normalized().and_then(|n| n.last().copied())
    }
}

fn run_one(cfg: &ExperimentConfig, net: &NetworkConfig, kind: ManifoldKind, inst: &Instance) -> RunRecord {
    let mut costs = Vec::new();
    let result = optimizer(cfg, kind).optimize_with(&inst.channels, net, inst.init.clone(), |state, _| {
        costs.push(state.cost)
    });
    let (outcome, precoders) = match result {
        Ok(run) => (Ok(run.stop_reason), Some(run.state.precoders)),
        Err(e) => (Err(e.to_string()), None),
    };
    RunRecord {
        algorithm: kind,
        seed: inst.seed,
        costs,
        outcome,
        precoders,
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub network: NetworkConfig,
    pub instances: Vec<Instance>,
    /// Ordered by algorithm (config order), then seed.
    pub runs: Vec<RunRecord>,
    pub mean: Vec<ConvergenceMeanRow>,
    pub files: Vec<PathBuf>,
}

impl ConvergenceReport {
    pub fn runs_for(&self, kind: ManifoldKind) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(move |r| r.algorithm == kind)
    }

    /// Mean normalized leakage after `iteration` sweeps.
    pub fn mean_at(&self, kind: ManifoldKind, iteration: usize) -> Option<f64> {
        self.mean
            .iter()
            .filter(|row| row.algorithm == kind.name())
            .take_while(|row| row.iteration <= iteration)
            .last()
            .map(|row| row.mean_normalized_cost)
    }
}

/// Per-iteration mean of normalized leakage. A run that stopped early
/// contributes its final value to later iterations.
pub fn mean_curve(kind: ManifoldKind, runs: &[&RunRecord]) -> Vec<ConvergenceMeanRow> {
    let curves: Vec<Vec<f64>> = runs.iter().filter_map(|r| r.normalized()).collect();
    let horizon = curves.iter().map(Vec::len).max().unwrap_or(0);
    (0..horizon)
        .map(|t| ConvergenceMeanRow {
            algorithm: kind.name(),
            iteration: t,
            mean_normalized_cost: curves.iter().map(|c| c[t.min(c.len() - 1)]).sum::<f64>()
                / curves.len() as f64,
            n_seeds: curves.len(),
        })
        .collect()
}

/// Runs every (algorithm, seed) pair at the reference SNR without writing
/// anything.
pub fn convergence_runs(cfg: &ExperimentConfig) -> Result<ConvergenceReport, HarnessError> {
    cfg.validate()?;
    let net = cfg.network()?;
    let per_seed: Vec<(Instance, Vec<RunRecord>)> = with_pool(cfg, || {
        (0..cfg.seeds)
            .into_par_iter()
            .map(|s| {
                let inst = instance(cfg, &net, s);
                let runs = cfg.algorithms.iter().map(|&k| run_one(cfg, &net, k, &inst)).collect();
                (inst, runs)
            })
            .collect()
    })?;
    let mut runs = Vec::with_capacity(cfg.seeds * cfg.algorithms.len());
    for (a, _) in cfg.algorithms.iter().enumerate() {
        runs.extend(per_seed.iter().map(|(_, r)| r[a].clone()));
    }
    let mean = cfg
        .algorithms
        .iter()
        .flat_map(|&kind| {
            let selected: Vec<&RunRecord> = runs.iter().filter(|r| r.algorithm == kind).collect();
            mean_curve(kind, &selected)
        })
        .collect();
    Ok(ConvergenceReport {
        network: net,
        instances: per_seed.into_iter().map(|(inst, _)| inst).collect(),
        runs,
        mean,
        files: Vec::new(),
    })
}

fn convergence_rows(runs: &[RunRecord]) -> Vec<ConvergenceRow> {
    let mut rows = Vec::new();
    for run in runs {
        let status = run.status();
        if run.costs.is_empty() {
            rows.push(ConvergenceRow {
                algorithm: run.algorithm.name(),
                seed: run.seed,
                iteration: 0,
                cost: f64::NAN,
                normalized_cost: f64::NAN,
                status,
            });
            continue;
        }
        let normalized = run.normalized();
        for (t, &cost) in run.costs.iter().enumerate() {
            rows.push(ConvergenceRow {
                algorithm: run.algorithm.name(),
                seed: run.seed,
                iteration: t,
                cost,
                normalized_cost: normalized.as_ref().map_or(f64::NAN, |n| n[t]),
                status: status.clone(),
            });
        }
    }
    rows
}

/// Convergence study: writes `convergence.csv` (every sweep of every run)
/// and `convergence_mean.csv` (per-algorithm mean curve).
pub fn run_convergence_experiment(cfg: &ExperimentConfig) -> Result<ConvergenceReport, HarnessError> {
    let mut report = convergence_runs(cfg)?;
    let header = header_line(cfg, ExperimentKind::Convergence.name());
    report.files.push(write_csv(
        &cfg.output_dir,
        "convergence.csv",
        &header,
        &convergence_rows(&report.runs),
    )?);
    report.files.push(write_csv(
        &cfg.output_dir,
        "convergence_mean.csv",
        &header,
        &report.mean,
    )?);
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub dof: Vec<DofRow>,
    /// `(algorithm, seed, snr_db, message)` for every failed evaluation.
    pub failures: Vec<(ManifoldKind, usize, f64, String)>,
    pub files: Vec<PathBuf>,
}

impl RateReport {
    pub fn dof_for(&self, kind: ManifoldKind) -> Option<f64> {
        self.dof
            .iter()
            .find(|row| row.algorithm == kind.name())
            .and_then(|row| row.dof_slope)
    }

    pub fn mean_rates(&self, kind: ManifoldKind) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|row| row.algorithm == kind.name())
            .map(|row| (row.snr_db, row.mean_rate))
            .collect()
    }
}

type RateCell = Result<f64, String>;

/// Sum rates for one seed, indexed `[algorithm][snr]`.
fn seed_rates(cfg: &ExperimentConfig, net: &NetworkConfig, inst: &Instance) -> Vec<Vec<RateCell>> {
    let rate = |pre: &PrecoderSet, snr: f64| {
        sum_rate(&inst.channels, pre, net, snr).map_err(|e| e.to_string())
    };
    cfg.algorithms
        .iter()
        .map(|&kind| match cfg.rate_mode {
            RateMode::Fixed => {
                match optimizer(cfg, kind).optimize(&inst.channels, net, inst.init.clone()) {
                    Ok(run) => cfg
                        .snr_db_list
                        .iter()
                        .map(|&snr| rate(&run.state.precoders, snr))
                        .collect(),
                    Err(e) => vec![Err(e.to_string()); cfg.snr_db_list.len()],
                }
            }
            RateMode::Reoptimize => cfg
                .snr_db_list
                .iter()
                .map(|&snr| {
                    let at = net.with_snr_db(snr).map_err(|e| e.to_string())?;
                    let run = optimizer(cfg, kind)
                        .optimize(&inst.channels, &at, inst.init.clone())
                        .map_err(|e| e.to_string())?;
                    rate(&run.state.precoders, snr)
                })
                .collect(),
        })
        .collect()
}

fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Sum-rate sweep without writing anything.
pub fn rate_sweep(cfg: &ExperimentConfig) -> Result<RateReport, HarnessError> {
    cfg.validate()?;
    let net = cfg.network()?;
    let per_seed: Vec<Vec<Vec<RateCell>>> = with_pool(cfg, || {
        (0..cfg.seeds)
            .into_par_iter()
            .map(|s| seed_rates(cfg, &net, &instance(cfg, &net, s)))
            .collect()
    })?;
    let mut rows = Vec::new();
    let mut dof = Vec::new();
    let mut failures = Vec::new();
    for (a, &kind) in cfg.algorithms.iter().enumerate() {
        let mut means = Vec::new();
        for (p, &snr) in cfg.snr_db_list.iter().enumerate() {
            let mut ok = Vec::new();
            for (seed, cells) in per_seed.iter().enumerate() {
                match &cells[a][p] {
                    Ok(r) => ok.push(*r),
                    Err(e) => failures.push((kind, seed, snr, e.clone())),
                }
            }
            let (mean_rate, std_rate) = if ok.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                mean_and_sample_std(&ok)
            };
            means.push((snr, mean_rate));
            rows.push(RateRow {
                algorithm: kind.name(),
                snr_db: snr,
                mean_rate,
                std_rate,
                n_seeds: ok.len(),
            });
        }
        let (dof_slope, status) = if means.len() < 2 {
            (None, "undefined".to_string())
        } else if means.iter().any(|(_, r)| !r.is_finite()) {
            (None, "incomplete".to_string())
        } else {
            match dof_slope(&means) {
                Ok(slope) => (Some(slope), "ok".to_string()),
                Err(e) => (None, e.to_string()),
            }
        };
        dof.push(DofRow {
            algorithm: kind.name(),
            dof_slope,
            status,
        });
    }
    Ok(RateReport {
        rows,
        dof,
        failures,
        files: Vec::new(),
    })
}

/// Sum-rate study: writes `rate.csv` (mean and sample standard deviation
/// per algorithm and SNR) and `rate_dof.csv` (slope per algorithm).
pub fn run_rate_experiment(cfg: &ExperimentConfig) -> Result<RateReport, HarnessError> {
    let mut report = rate_sweep(cfg)?;
    let header = header_line(cfg, ExperimentKind::Rate.name());
    report
        .files
        .push(write_csv(&cfg.output_dir, "rate.csv", &header, &report.rows)?);
    report
        .files
        .push(write_csv(&cfg.output_dir, "rate_dof.csv", &header, &report.dof)?);
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct AngleRun {
    pub algorithm: ManifoldKind,
    pub rows: Vec<AngleRow>,
    pub costs: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct AngleReport {
    pub runs: Vec<AngleRun>,
    pub files: Vec<PathBuf>,
}

fn angle_run(cfg: &ExperimentConfig, net: &NetworkConfig, kind: ManifoldKind, inst: &Instance) -> AngleRun {
    let mut rows = Vec::new();
    let mut costs = Vec::new();
    let mut error = None;
    let result = optimizer(cfg, kind).optimize_with(&inst.channels, net, inst.init.clone(), |state, _| {
        costs.push(state.cost);
        if error.is_some() {
            return;
        }
        for k in 0..net.users() {
            match max_interference_angle(&inst.channels, &state.precoders, net, k) {
                Ok(Some(angle)) => rows.push(AngleRow {
                    algorithm: kind.name(),
                    seed: inst.seed,
                    iteration: state.iteration,
                    receiver: k,
                    max_angle_rad: angle,
                }),
                Ok(None) => {}
                Err(e) => {
                    error = Some(e.to_string());
                    return;
                }
            }
        }
    });
    if let Err(e) = result {
        error.get_or_insert(e.to_string());
    }
    AngleRun {
        algorithm: kind,
        rows,
        costs,
        error,
    }
}

/// Per-sweep maximum interference angle at every receiver for the seed
/// `angle_seed`, without writing anything.
pub fn angle_runs(cfg: &ExperimentConfig) -> Result<AngleReport, HarnessError> {
    cfg.validate()?;
    if cfg.users < 3 {
        return Err(HarnessError::Unsupported(format!(
            "angle experiment needs at least 3 users, got {}",
            cfg.users
        )));
    }
    let net = cfg.network()?;
    let inst = instance(cfg, &net, cfg.angle_seed);
    let runs = with_pool(cfg, || {
        cfg.algorithms
            .par_iter()
            .map(|&kind| angle_run(cfg, &net, kind, &inst))
            .collect()
    })?;
    Ok(AngleReport {
        runs,
        files: Vec::new(),
    })
}

/// Angle study: writes `angles.csv`.
pub fn run_angle_experiment(cfg: &ExperimentConfig) -> Result<AngleReport, HarnessError> {
    let mut report = angle_runs(cfg)?;
    let rows: Vec<AngleRow> = report.runs.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    let header = header_line(cfg, ExperimentKind::Angle.name());
    report
        .files
        .push(write_csv(&cfg.output_dir, "angles.csv", &header, &rows)?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &std::path::Path) -> ExperimentConfig {
        ExperimentConfig {
            seeds: 3,
            snr_db_list: vec![10.0, 30.0],
            stop: crate::optimizer::StopRule {
                max_iterations: 40,
                cost_tolerance: 0.0,
                relative_tolerance: 1e-10,
            },
            output_dir: dir.to_path_buf(),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn zero_iterations_give_one_row_per_algorithm() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        cfg.seeds = 1;
        cfg.stop.max_iterations = 0;
        let report = run_convergence_experiment(&cfg).unwrap();
        let text = std::fs::read_to_string(&report.files[0]).unwrap();
        let data: Vec<&str> = text.lines().skip(2).collect();
        assert_eq!(data.len(), 3);
        for (line, kind) in data.iter().zip(ManifoldKind::ALL) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[0], kind.name());
            assert_eq!(fields[2], "0");
            assert_eq!(fields[4], "1.0");
            assert_eq!(fields[5], "max_iterations");
        }
    }

    #[test]
    fn algorithms_share_instances() {
        let dir = tempfile::tempdir().unwrap();
        let report = convergence_runs(&small(dir.path())).unwrap();
        for seed in 0..3 {
            let starts: Vec<f64> = report.runs.iter().filter(|r| r.seed == seed).map(|r| r.costs[0]).collect();
            assert_eq!(starts.len(), 3);
            assert!(starts.iter().all(|&c| c == starts[0]));
        }
    }

    #[test]
    fn mean_curve_carries_final_values_forward() {
        let run = |costs: Vec<f64>| RunRecord {
            algorithm: ManifoldKind::Stiefel,
            seed: 0,
            costs,
            outcome: Ok(StopReason::RelativeTolerance),
            precoders: None,
        };
        let a = run(vec![2.0, 1.0]);
        let b = run(vec![4.0, 2.0, 1.0, 0.0]);
        let rows = mean_curve(ManifoldKind::Stiefel, &[&a, &b]);
        let means: Vec<f64> = rows.iter().map(|r| r.mean_normalized_cost).collect();
        assert_eq!(means, vec![1.0, 0.5, 0.375, 0.25]);
        assert!(rows.iter().all(|r| r.n_seeds == 2));
        let degenerate = run(vec![0.0, 0.0]);
        assert_eq!(degenerate.status(), "relative_tolerance:degenerate_start");
        assert_eq!(mean_curve(ManifoldKind::Stiefel, &[&degenerate]).len(), 0);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        cfg.workers = 1;
        let one = run_convergence_experiment(&cfg).unwrap();
        let first = std::fs::read(&one.files[0]).unwrap();
        cfg.workers = 4;
        let four = run_convergence_experiment(&cfg).unwrap();
        assert_eq!(first, std::fs::read(&four.files[0]).unwrap());
    }

    #[test]
    fn single_snr_point_leaves_slope_undefined() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        cfg.snr_db_list = vec![20.0];
        cfg.rate_mode = RateMode::Fixed;
        let report = run_rate_experiment(&cfg).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert!(report.dof.iter().all(|d| d.dof_slope.is_none() && d.status == "undefined"));
        assert!(report.rows.iter().all(|r| r.n_seeds == 3 && r.mean_rate > 0.0));
    }

    #[test]
    fn sample_std_matches_hand_computation() {
        let (m, s) = mean_and_sample_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_sample_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn angle_rows_start_at_iteration_zero() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_angle_experiment(&small(dir.path())).unwrap();
        for run in &report.runs {
            assert!(run.error.is_none());
            let first: Vec<&AngleRow> = run.rows.iter().filter(|r| r.iteration == 0).collect();
            assert_eq!(first.len(), 3);
            assert!(first
                .iter()
                .all(|r| r.max_angle_rad > 0.0 && r.max_angle_rad <= std::f64::consts::FRAC_PI_2));
        }
    }

    #[test]
    fn angle_experiment_needs_three_users() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        cfg.users = 2;
        assert!(matches!(angle_runs(&cfg), Err(HarnessError::Unsupported(_))));
    }
}
