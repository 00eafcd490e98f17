//! Experiment harness: declarative configuration, the
//! (dataset × agent × seed) matrix runner, and per-run artifacts.
//!
//! Every run gets its own directory under the output root containing
//! `metrics.csv` (per-episode training metrics), `trades.csv` (the
//! time-market profile of the evaluation pass), `checkpoint.json` (the
//! trained network) and `manifest.json` (the fully resolved
//! configuration, data ranges and results — the reproducibility audit
//! trail). A failed run is recorded with its error and never aborts the
//! rest of the matrix.

mod report;

pub use report::{emit_summary_table, emit_trade_profile, write_metrics_csv};

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{evaluate, train, AgentError, AgentKind, Hyperparams};
use crate::market_data::{load_csv, split_series, DataError, SplitSpec};
use crate::neural::{checkpoint, NeuralError};

pub const METRICS_FILE: &str = "metrics.csv";
pub const TRADES_FILE: &str = "trades.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_CSV_FILE: &str = "summary.csv";
pub const SUMMARY_TEXT_FILE: &str = "summary.txt";
pub const MANIFEST_VERSION: u32 = 1;

/// Fixed by construction; recorded in every manifest.
pub const OPTIMIZER_NAME: &str = "adam";
pub const LOSS_NAME: &str = "mse";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

/// CSV column names and the date pattern used to parse them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnSpec {
    pub date: String,
    pub close: String,
    pub date_format: String,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        Self {
            date: crate::market_data::DEFAULT_DATE_COLUMN.to_string(),
            close: crate::market_data::DEFAULT_CLOSE_COLUMN.to_string(),
            date_format: crate::market_data::DEFAULT_DATE_FORMAT.to_string(),
        }
    }
}

/// One input dataset. The symbol defaults to the file stem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub symbol: Option<String>,
}

impl DatasetSpec {
    pub fn from_path(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            symbol: None,
        }
    }

    pub fn resolved_symbol(&self) -> String {
        self.symbol.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "series".to_string())
        })
    }
}

/// The whole experiment matrix. An empty `[hyperparams]` section leaves
/// every training default in place, so a minimal config reproduces the
/// reference protocol exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub workers: usize,
    pub train_fraction: f64,
    pub agents: Vec<AgentKind>,
    pub seeds: Vec<u64>,
    pub datasets: Vec<DatasetSpec>,
    pub columns: ColumnSpec,
    pub hyperparams: Hyperparams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("runs"),
            workers: 1,
            train_fraction: 0.5,
            agents: Vec::new(),
            seeds: vec![0],
            datasets: Vec::new(),
            columns: ColumnSpec::default(),
            hyperparams: Hyperparams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let raw = fs::read_to_string(path)?;
        let config: ExperimentConfig = toml::from_str(&raw)?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.datasets.is_empty() {
            return Err(HarnessError::ConfigInvalid("no datasets".into()));
        }
        if self.agents.is_empty() {
            return Err(HarnessError::ConfigInvalid("no agents".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::ConfigInvalid("no seeds".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(HarnessError::ConfigInvalid(format!(
                "train_fraction {} must lie in (0, 1)",
                self.train_fraction
            )));
        }
        if self.workers == 0 {
            return Err(HarnessError::ConfigInvalid("workers must be positive".into()));
        }
        self.hyperparams
            .validate()
            .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        Ok(())
    }
}

/// Headline numbers of one successful run. Training rewards/profit are
/// reported under both conventions: the final episode's values and the
/// sum over all episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub train_rewards_last: f64,
    pub train_profit_last: f64,
    pub train_rewards_cumulative: f64,
    pub train_profit_cumulative: f64,
    pub test_rewards: f64,
    pub test_profit: f64,
}

/// Date ranges and row counts actually used, recorded for the audit
/// trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSection {
    pub rows_loaded: usize,
    pub rows_skipped: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub test_start: NaiveDate,
    pub test_end: NaiveDate,
}

/// `manifest.json`: everything needed to audit or reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub symbol: String,
    pub agent: AgentKind,
    pub seed: u64,
    pub dataset_path: PathBuf,
    pub train_fraction: f64,
    pub hyperparams: Hyperparams,
    pub optimizer: String,
    pub loss: String,
    pub data: Option<DataSection>,
    pub metrics: Option<RunMetrics>,
    pub error: Option<String>,
}

/// One row of the experiment matrix, successful or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub symbol: String,
    pub agent: AgentKind,
    pub seed: u64,
    pub run_dir: PathBuf,
    pub metrics: Option<RunMetrics>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn succeeded(&self) -> bool {
        self.error.is_none() && self.metrics.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub runs: Vec<RunRecord>,
}

impl RunReport {
    pub fn all_succeeded(&self) -> bool {
        !self.runs.is_empty() && self.runs.iter().all(RunRecord::succeeded)
    }
}

/// Runs the full (dataset × agent × seed) matrix and writes every
/// artifact plus the two summary files under `config.output_dir`.
///
/// Runs are independent; up to `config.workers` execute concurrently.
/// Failures are embedded in the report instead of aborting the matrix.
pub fn run_experiments(config: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir)?;

    let jobs: Vec<(&DatasetSpec, AgentKind, u64)> = config
        .datasets
        .iter()
        .flat_map(|d| {
            config
                .agents
                .iter()
                .flat_map(move |&a| config.seeds.iter().map(move |&s| (d, a, s)))
        })
        .collect();

    let runs = run_parallel(config, &jobs);
    let report = RunReport { runs };

    let (text, csv) = emit_summary_table(&report);
    fs::write(config.output_dir.join(SUMMARY_CSV_FILE), csv)?;
    fs::write(config.output_dir.join(SUMMARY_TEXT_FILE), text)?;
    Ok(report)
}

fn run_parallel(
    config: &ExperimentConfig,
    jobs: &[(&DatasetSpec, AgentKind, u64)],
) -> Vec<RunRecord> {
    let n = jobs.len();
    let workers = config.workers.min(n.max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<RunRecord>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let (dataset, agent, seed) = jobs[i];
                let record = execute_run(config, dataset, agent, seed);
                results.lock().unwrap()[i] = Some(record);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("worker filled every slot"))
        .collect()
}

fn execute_run(
    config: &ExperimentConfig,
    dataset: &DatasetSpec,
    agent: AgentKind,
    seed: u64,
) -> RunRecord {
    let symbol = dataset.resolved_symbol();
    let run_dir = config
        .output_dir
        .join(format!("{symbol}_{agent}_s{seed}"));
    let outcome = run_one(config, dataset, agent, seed, &run_dir);

    let (data, metrics, error) = match outcome {
        Ok((data, metrics)) => (Some(data), Some(metrics), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    let manifest = RunManifest {
        format_version: MANIFEST_VERSION,
        symbol: symbol.clone(),
        agent,
        seed,
        dataset_path: dataset.path.clone(),
        train_fraction: config.train_fraction,
        hyperparams: config.hyperparams.clone(),
        optimizer: OPTIMIZER_NAME.to_string(),
        loss: LOSS_NAME.to_string(),
        data,
        metrics,
        error: error.clone(),
    };
    // Best effort: a failed run may not even have a directory.
    if fs::create_dir_all(&run_dir).is_ok() {
        if let Ok(json) = serde_json::to_string_pretty(&manifest) {
            let _ = fs::write(run_dir.join(MANIFEST_FILE), json);
        }
    }
    RunRecord {
        symbol,
        agent,
        seed,
        run_dir,
        metrics,
        error,
    }
}

fn run_one(
    config: &ExperimentConfig,
    dataset: &DatasetSpec,
    agent: AgentKind,
    seed: u64,
    run_dir: &Path,
) -> Result<(DataSection, RunMetrics), HarnessError> {
    fs::create_dir_all(run_dir)?;
    let loaded = load_csv(
        &dataset.path,
        &config.columns.close,
        &config.columns.date,
        &config.columns.date_format,
    )?;
    let split = SplitSpec::new(config.train_fraction)?;
    let (train_series, test_series) = split_series(
        &loaded.series,
        &split,
        config.hyperparams.window_size,
    )?;

    let trained = train(&train_series, agent, &config.hyperparams, seed)?;
    let eval = evaluate(&test_series, &trained.params)?;

    fs::write(
        run_dir.join(METRICS_FILE),
        write_metrics_csv(&trained.episodes),
    )?;
    fs::write(
        run_dir.join(TRADES_FILE),
        emit_trade_profile(&eval.events, &test_series),
    )?;
    checkpoint::save(run_dir.join(CHECKPOINT_FILE), &trained.params)?;

    let last = trained.last_episode();
    let metrics = RunMetrics {
        train_rewards_last: last.map_or(0.0, |e| e.total_reward),
        train_profit_last: last.map_or(0.0, |e| e.total_profit),
        train_rewards_cumulative: trained.cumulative_reward(),
        train_profit_cumulative: trained.cumulative_profit(),
        test_rewards: eval.total_reward,
        test_profit: eval.total_profit,
    };
    let data = DataSection {
        rows_loaded: loaded.series.len(),
        rows_skipped: loaded.skipped_rows,
        train_rows: train_series.len(),
        test_rows: test_series.len(),
        train_start: train_series.date(0),
        train_end: train_series.date(train_series.len() - 1),
        test_start: test_series.date(0),
        test_end: test_series.date(test_series.len() - 1),
    };
    Ok((data, metrics))
}

/// Rebuilds a report from the manifests stored under `output_dir`,
/// sorted by (symbol, agent, seed) for a stable table order.
pub fn load_report(output_dir: impl AsRef<Path>) -> Result<RunReport, HarnessError> {
    let mut runs = Vec::new();
    for entry in fs::read_dir(output_dir.as_ref())? {
        let entry = entry?;
        let manifest_path = entry.path().join(MANIFEST_FILE);
        if !manifest_path.is_file() {
            continue;
        }
        let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
        runs.push(RunRecord {
            symbol: manifest.symbol,
            agent: manifest.agent,
            seed: manifest.seed,
            run_dir: entry.path(),
            metrics: manifest.metrics,
            error: manifest.error,
        });
    }
    runs.sort_by(|a, b| {
        (&a.symbol, a.agent.to_string(), a.seed).cmp(&(&b.symbol, b.agent.to_string(), b.seed))
    });
    Ok(RunReport { runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::PriceSeries;

    fn synthetic_csv(dir: &Path, name: &str, len: usize) -> PathBuf {
        let path = dir.join(format!("{name}.csv"));
        let series = PriceSeries::sawtooth(name, len, 12, 8.0, 100.0).unwrap();
        series.write_csv(&path).unwrap();
        path
    }

    fn small_config(dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            output_dir: dir.join("runs"),
            workers: 2,
            agents: vec![AgentKind::Dqn, AgentKind::DoubleDqn, AgentKind::DuelingDdqn],
            seeds: vec![1],
            datasets: vec![DatasetSpec::from_path(synthetic_csv(dir, "SYNTH", 90))],
            hyperparams: Hyperparams {
                window_size: 6,
                batch_size: 8,
                episodes: 2,
                replay_capacity: 256,
                target_sync_interval: 20,
                ..Hyperparams::default()
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn matrix_produces_one_row_and_file_set_per_run() {
        let dir = tempfile::tempdir().unwrap();
        let config = small_config(dir.path());
        let report = run_experiments(&config).unwrap();
        assert_eq!(report.runs.len(), 3);
        assert!(report.all_succeeded());
        for run in &report.runs {
            for file in [METRICS_FILE, TRADES_FILE, CHECKPOINT_FILE, MANIFEST_FILE] {
                assert!(run.run_dir.join(file).is_file(), "{file} missing");
            }
        }
        assert!(config.output_dir.join(SUMMARY_CSV_FILE).is_file());
        assert!(config.output_dir.join(SUMMARY_TEXT_FILE).is_file());
    }

    #[test]
    fn empty_agent_list_is_config_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_config(dir.path());
        config.agents.clear();
        assert!(matches!(
            run_experiments(&config),
            Err(HarnessError::ConfigInvalid(_))
        ));
    }

    #[test]
    fn rerunning_the_same_config_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_config(dir.path());
        config.agents = vec![AgentKind::Dqn];
        let first = run_experiments(&config).unwrap();
        let read = |report: &RunReport| {
            let dir = &report.runs[0].run_dir;
            (
                fs::read(dir.join(METRICS_FILE)).unwrap(),
                fs::read(dir.join(TRADES_FILE)).unwrap(),
            )
        };
        let (metrics_a, trades_a) = read(&first);
        config.output_dir = dir.path().join("runs2");
        let second = run_experiments(&config).unwrap();
        let (metrics_b, trades_b) = read(&second);
        assert_eq!(metrics_a, metrics_b);
        assert_eq!(trades_a, trades_b);
    }

    #[test]
    fn failed_dataset_is_recorded_without_aborting() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_config(dir.path());
        config
            .datasets
            .push(DatasetSpec::from_path(dir.path().join("missing.csv")));
        let report = run_experiments(&config).unwrap();
        assert_eq!(report.runs.len(), 6);
        assert!(!report.all_succeeded());
        let failed: Vec<_> = report.runs.iter().filter(|r| !r.succeeded()).collect();
        assert_eq!(failed.len(), 3);
        assert!(failed.iter().all(|r| r.error.is_some()));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_config(dir.path());
        config.datasets[0].symbol = Some("SYNTH".to_string());
        let text = config.to_toml_string();
        let reloaded: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(reloaded, config);
    }

    #[test]
    fn empty_hyperparams_section_resolves_to_defaults() {
        let parsed: ExperimentConfig = toml::from_str(
            "agents = [\"dqn\"]\n\n[[datasets]]\npath = \"x.csv\"\n\n[hyperparams]\n",
        )
        .unwrap();
        assert_eq!(parsed.hyperparams, Hyperparams::default());
        assert_eq!(parsed.train_fraction, 0.5);
        assert_eq!(parsed.agents, vec![AgentKind::Dqn]);
    }

    #[test]
    fn stored_runs_reload_into_the_same_report() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_config(dir.path());
        config.agents = vec![AgentKind::Dqn, AgentKind::DuelingDdqn];
        let report = run_experiments(&config).unwrap();
        let reloaded = load_report(&config.output_dir).unwrap();
        let key = |r: &RunRecord| (r.symbol.clone(), r.agent.to_string(), r.seed);
        let mut expected: Vec<_> = report.runs.iter().map(key).collect();
        expected.sort();
        let got: Vec<_> = reloaded.runs.iter().map(key).collect();
        assert_eq!(got, expected);
        assert!(reloaded.all_succeeded());
        for reloaded_run in &reloaded.runs {
            let original = report
                .runs
                .iter()
                .find(|r| key(r) == key(reloaded_run))
                .unwrap();
            assert_eq!(reloaded_run.metrics, original.metrics);
        }
    }
}
