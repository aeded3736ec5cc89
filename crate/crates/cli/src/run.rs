//! Sweep execution, the run manifest and the results table.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sense_core::model::derive_seed;

use crate::config::{GridPoint, LoadedConfig, SPEC_VERSION};
use crate::experiments::{Cell, Plan};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Pending,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: usize,
    pub point: usize,
    pub realization: usize,
    pub seed: u64,
    pub status: TaskStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Complete,
    Partial,
}

/// `<name>.manifest.json`, rewritten atomically after every task.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub spec_version: u32,
    pub experiment: String,
    pub config: PathBuf,
    pub config_sha256: String,
    pub seed: u64,
    pub jobs: usize,
    pub results: PathBuf,
    pub started_unix: f64,
    pub finished_unix: Option<f64>,
    pub elapsed_seconds: Option<f64>,
    pub status: RunStatus,
    pub failed: Vec<usize>,
    pub tasks: Vec<TaskRecord>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// IDs of tasks known to have finished successfully.
    pub fn completed(&self) -> Vec<usize> {
        self.tasks
            .iter()
            .filter(|t| t.status == TaskStatus::Done)
            .map(|t| t.id)
            .collect()
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_vec_pretty(self)?;
        json.push(b'\n');
        write_atomic(path, &json)
    }
}

/// Writes via a temporary file in the same directory and a rename, so
/// readers never see a torn file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub results: PathBuf,
    pub manifest: PathBuf,
    pub tasks: usize,
    pub rows: usize,
    pub failed: Vec<usize>,
}

/// A checked config: every grid point resolved to typed parameters.
pub struct Prepared {
    pub loaded: LoadedConfig,
    pub grid: Vec<GridPoint>,
    pub plans: Vec<Plan>,
}

impl Prepared {
    pub fn tasks(&self) -> usize {
        self.grid.len() * self.loaded.config.realizations
    }
}

/// Loads `path` and resolves all grid points, failing on the first schema
/// or parameter error.
pub fn prepare(path: &Path) -> Result<Prepared> {
    let loaded = LoadedConfig::load(path)?;
    let grid = loaded.config.grid()?;
    let plans = grid
        .iter()
        .map(|p| {
            Plan::new(loaded.config.kind, loaded.config.params_at(p)).with_context(|| {
                let at: Vec<String> = p.values.iter().map(|(k, v)| format!("{k}={v}")).collect();
                format!("grid point {} ({})", p.index, at.join(", "))
            })
        })
        .collect::<Result<Vec<_>>>()
        .with_context(|| format!("invalid config {}", path.display()))?;
    Ok(Prepared { loaded, grid, plans })
}

fn header_block(prepared: &Prepared, seed: u64, columns: &[(String, String)]) -> String {
    let c = &prepared.loaded.config;
    let mut h = String::new();
    h.push_str(&format!("# sense {VERSION}\n"));
    h.push_str(&format!("# experiment: {}\n", c.kind.as_str()));
    h.push_str(&format!("# config_sha256: {}\n", prepared.loaded.hash));
    h.push_str(&format!("# seed: {seed}\n"));
    h.push_str(&format!("# realizations: {}\n", c.realizations));
    let params: Vec<String> = c.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    h.push_str(&format!("# params: {}\n", params.join(" ")));
    for axis in &c.sweep {
        let grid: Vec<String> = axis.grid().unwrap_or_default().iter().map(|x| x.to_string()).collect();
        h.push_str(&format!("# sweep {}: {}\n", axis.param, grid.join(" ")));
    }
    let units: Vec<String> = columns.iter().map(|(n, u)| format!("{n}[{u}]")).collect();
    h.push_str(&format!("# units: {}\n", units.join(" ")));
    h
}

/// Executes every grid point × realization and writes the results table
/// and manifest into the output directory.
pub fn run(path: &Path, opts: &RunOptions) -> Result<RunSummary> {
    let prepared = prepare(path)?;
    let config = &prepared.loaded.config;
    let seed = opts.seed.unwrap_or(config.seed);
    let out_dir = opts
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    std::fs::create_dir_all(&out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let results_path = out_dir.join(format!("{}.csv", prepared.loaded.name));
    let manifest_path = out_dir.join(format!("{}.manifest.json", prepared.loaded.name));

    let jobs = opts
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let realizations = config.realizations;
    let tasks: Vec<TaskRecord> = (0..prepared.tasks())
        .map(|id| TaskRecord {
            id,
            point: id / realizations,
            realization: id % realizations,
            seed: derive_seed(seed, id as u64),
            status: TaskStatus::Pending,
            error: None,
        })
        .collect();

    let manifest = RunManifest {
        tool: "sense".into(),
        version: VERSION.into(),
        spec_version: SPEC_VERSION,
        experiment: config.kind.as_str().into(),
        config: path.to_owned(),
        config_sha256: prepared.loaded.hash.clone(),
        seed,
        jobs,
        results: results_path.clone(),
        started_unix: unix_now(),
        finished_unix: None,
        elapsed_seconds: None,
        status: RunStatus::Running,
        failed: Vec::new(),
        tasks: tasks.clone(),
    };
    manifest.write(&manifest_path)?;
    log::info!(
        "{}: {} tasks on {jobs} threads -> {}",
        prepared.loaded.name,
        tasks.len(),
        results_path.display()
    );

    let started = Instant::now();
    let sink = Mutex::new(manifest);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let outcomes: Vec<Result<Vec<Vec<Cell>>, String>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let outcome = prepared.plans[t.point].run(t.seed).map_err(|e| format!("{e:#}"));
                let mut m = sink.lock().unwrap_or_else(|e| e.into_inner());
                let rec = &mut m.tasks[t.id];
                match &outcome {
                    Ok(_) => rec.status = TaskStatus::Done,
                    Err(e) => {
                        log::error!("task {} failed: {e}", t.id);
                        rec.status = TaskStatus::Failed;
                        rec.error = Some(e.clone());
                    }
                }
                if let Err(e) = m.write(&manifest_path) {
                    log::warn!("manifest update failed: {e:#}");
                }
                outcome
            })
            .collect()
    });

    let mut columns: Vec<(String, String)> = ["task", "point", "realization", "seed"]
        .iter()
        .map(|c| (c.to_string(), "-".to_string()))
        .collect();
    columns.extend(config.sweep.iter().map(|a| (a.param.clone(), "param".to_string())));
    columns.extend(
        Plan::columns(config.kind)
            .iter()
            .map(|(n, u)| (n.to_string(), u.to_string())),
    );

    let mut body = csv::Writer::from_writer(Vec::new());
    body.write_record(columns.iter().map(|(n, _)| n.as_str()))?;
    let mut rows = 0;
    let mut failed = Vec::new();
    // `outcomes` is in task order whatever the completion order was.
    for (t, outcome) in tasks.iter().zip(&outcomes) {
        match outcome {
            Ok(task_rows) => {
                for row in task_rows {
                    let mut record = vec![
                        t.id.to_string(),
                        t.point.to_string(),
                        t.realization.to_string(),
                        t.seed.to_string(),
                    ];
                    record.extend(prepared.grid[t.point].values.iter().map(|(_, v)| v.to_string()));
                    record.extend(row.iter().map(|c| c.to_string()));
                    body.write_record(&record)?;
                    rows += 1;
                }
            }
            Err(_) => failed.push(t.id),
        }
    }
    let mut table = header_block(&prepared, seed, &columns).into_bytes();
    table.extend(body.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?);
    write_atomic(&results_path, &table)?;

    let mut m = sink.into_inner().unwrap_or_else(|e| e.into_inner());
    m.finished_unix = Some(unix_now());
    m.elapsed_seconds = Some(started.elapsed().as_secs_f64());
    m.status = if failed.is_empty() {
        RunStatus::Complete
    } else {
        RunStatus::Partial
    };
    m.failed = failed.clone();
    m.write(&manifest_path)?;

    Ok(RunSummary {
        results: results_path,
        manifest: manifest_path,
        tasks: tasks.len(),
        rows,
        failed,
    })
}
