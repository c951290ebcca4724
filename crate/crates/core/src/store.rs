//! File-backed persistence of scenarios and evaluation runs.
//!
//! Layout under one root directory:
//!
//! ```text
//! <root>/runs/<uuid>.json        one document per saved run, never rewritten
//! <root>/runs/index.json         run summaries, rebuilt from the documents on demand
//! <root>/scenarios/<uuid>.json   scenarios created through the API
//! ```
//!
//! Every write goes to a temporary file in the target directory and is renamed into
//! place, so readers never see a partial document. Writers are serialized per store
//! value; running several writer processes on one root is not supported.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use uuid::Uuid;

use crate::domain::{FarmScenario, InputUnit, Region};
use crate::evaluate::EvaluationResult;

const INDEX_FILE: &str = "index.json";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("run `{0}` not found")]
    RunNotFound(String),
    #[error("scenario `{0}` not found")]
    ScenarioNotFound(String),
    #[error("storage I/O error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("unreadable document {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().expect("store paths have a parent");
    let tmp = dir.join(format!(".tmp-{}", Uuid::new_v4()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_error(path))
}

fn to_document<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("store documents serialize");
    bytes.push(b'\n');
    bytes
}

fn read_document<T: DeserializeOwned>(path: &Path) -> Result<Option<T>, StoreError> {
    let bytes = match fs::read(path) {
        Ok(bytes) => bytes,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_error(path)(e)),
    };
    serde_json::from_slice(&bytes)
        .map(Some)
        .map_err(|e| StoreError::Corrupt {
            path: path.to_owned(),
            message: e.to_string(),
        })
}

/// Identifiers are UUIDs; anything else cannot name a stored document.
fn parse_id(id: &str) -> Option<Uuid> {
    Uuid::parse_str(id).ok()
}

fn create_dir(path: &Path) -> Result<(), StoreError> {
    fs::create_dir_all(path).map_err(io_error(path))
}

/// A persisted evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SavedRun {
    pub run_id: String,
    pub created_at: DateTime<Utc>,
    pub scenario: FarmScenario,
    pub catalog_version: String,
    pub result: EvaluationResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunSummary {
    pub run_id: String,
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub region: Region,
    pub crops: Vec<String>,
    pub options: usize,
    pub catalog_version: String,
    pub npv: f64,
}

impl RunSummary {
    fn of(run: &SavedRun) -> Self {
        RunSummary {
            run_id: run.run_id.clone(),
            created_at: run.created_at,
            name: run.scenario.name.clone(),
            region: run.scenario.region,
            crops: run.scenario.crops.iter().map(|c| c.crop.clone()).collect(),
            options: run.result.options.len(),
            catalog_version: run.catalog_version.clone(),
            npv: run.result.portfolio.npv,
        }
    }
}

/// Portfolio metrics of one run in a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonRow {
    pub run_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub catalog_version: String,
    pub discount_rate: f64,
    pub npv: f64,
    pub irr: Option<f64>,
    pub bcr: Option<f64>,
    pub total_investment: f64,
    /// kg/yr over every kilogram-denominated input.
    pub input_saved_kg: f64,
    /// l/yr over every litre-denominated input.
    pub input_saved_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Set when the runs were evaluated against different catalog versions.
    pub catalog_version_mismatch: bool,
    pub warnings: Vec<String>,
}

/// Builds a comparison of runs, keeping the given order.
pub fn compare(runs: &[SavedRun]) -> Comparison {
    let rows: Vec<ComparisonRow> = runs
        .iter()
        .map(|run| {
            let p = &run.result.portfolio;
            let total = |unit| {
                p.input_saved
                    .iter()
                    .filter(|s| s.unit == unit)
                    .map(|s| s.quantity)
                    .sum()
            };
            ComparisonRow {
                run_id: run.run_id.clone(),
                name: run.scenario.name.clone(),
                catalog_version: run.catalog_version.clone(),
                discount_rate: run.result.scenario.discount_rate,
                npv: p.npv,
                irr: p.irr,
                bcr: p.bcr,
                total_investment: p.scaled_investment,
                input_saved_kg: total(InputUnit::Kilogram),
                input_saved_l: total(InputUnit::Litre),
            }
        })
        .collect();
    let mut versions: Vec<&str> = rows.iter().map(|r| r.catalog_version.as_str()).collect();
    versions.sort();
    versions.dedup();
    let mismatch = versions.len() > 1;
    let warnings = if mismatch {
        vec![format!(
            "runs were evaluated against different catalog versions: {}",
            versions.join(", ")
        )]
    } else {
        Vec::new()
    };
    Comparison {
        rows,
        catalog_version_mismatch: mismatch,
        warnings,
    }
}

/// Append-only store of evaluation runs.
#[derive(Debug)]
pub struct RunStore {
    dir: PathBuf,
    writer: Mutex<()>,
}

impl RunStore {
    /// Opens (creating if needed) the run store below `root`.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = root.as_ref().join("runs");
        create_dir(&dir)?;
        Ok(RunStore {
            dir,
            writer: Mutex::new(()),
        })
    }

    fn run_path(&self, id: &Uuid) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    fn index_path(&self) -> PathBuf {
        self.dir.join(INDEX_FILE)
    }

    pub fn save_run(
        &self,
        scenario: &FarmScenario,
        result: &EvaluationResult,
    ) -> Result<String, StoreError> {
        self.save_run_at(scenario, result, Utc::now())
    }

    /// Saves a run with an explicit creation time.
    pub fn save_run_at(
        &self,
        scenario: &FarmScenario,
        result: &EvaluationResult,
        created_at: DateTime<Utc>,
    ) -> Result<String, StoreError> {
        let id = Uuid::new_v4();
        let run = SavedRun {
            run_id: id.to_string(),
            created_at,
            scenario: scenario.clone(),
            catalog_version: result.catalog_version.clone(),
            result: result.clone(),
        };
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        write_atomic(&self.run_path(&id), &to_document(&run))?;
        let mut index = self.read_index_or_rebuild()?;
        if !index.iter().any(|s| s.run_id == run.run_id) {
            index.push(RunSummary::of(&run));
        }
        write_atomic(&self.index_path(), &to_document(&index))?;
        Ok(run.run_id)
    }

    pub fn load_run(&self, run_id: &str) -> Result<SavedRun, StoreError> {
        let id = parse_id(run_id).ok_or_else(|| StoreError::RunNotFound(run_id.to_owned()))?;
        read_document(&self.run_path(&id))?
            .ok_or_else(|| StoreError::RunNotFound(run_id.to_owned()))
    }

    /// Summaries of every run, oldest first.
    pub fn list_runs(&self) -> Result<Vec<RunSummary>, StoreError> {
        self.read_index_or_rebuild()
    }

    fn read_index_or_rebuild(&self) -> Result<Vec<RunSummary>, StoreError> {
        match read_document::<Vec<RunSummary>>(&self.index_path()) {
            Ok(Some(index)) => Ok(index),
            Ok(None) | Err(StoreError::Corrupt { .. }) => self.scan(),
            Err(e) => Err(e),
        }
    }

    fn scan(&self) -> Result<Vec<RunSummary>, StoreError> {
        let mut summaries = Vec::new();
        for entry in fs::read_dir(&self.dir).map_err(io_error(&self.dir))? {
            let path = entry.map_err(io_error(&self.dir))?.path();
            let is_run = path
                .file_stem()
                .and_then(|s| s.to_str())
                .is_some_and(|s| parse_id(s).is_some())
                && path.extension().is_some_and(|e| e == "json");
            if is_run {
                if let Some(run) = read_document::<SavedRun>(&path)? {
                    summaries.push(RunSummary::of(&run));
                }
            }
        }
        summaries.sort_by(|a, b| (a.created_at, &a.run_id).cmp(&(b.created_at, &b.run_id)));
        Ok(summaries)
    }

    /// Rewrites the index from the run documents.
    pub fn rebuild_index(&self) -> Result<Vec<RunSummary>, StoreError> {
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let index = self.scan()?;
        write_atomic(&self.index_path(), &to_document(&index))?;
        Ok(index)
    }

    pub fn delete_run(&self, run_id: &str) -> Result<(), StoreError> {
        let id = parse_id(run_id).ok_or_else(|| StoreError::RunNotFound(run_id.to_owned()))?;
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let path = self.run_path(&id);
        match fs::remove_file(&path) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::RunNotFound(run_id.to_owned()))
            }
            Err(e) => return Err(io_error(&path)(e)),
        }
        let mut index = self.read_index_or_rebuild()?;
        index.retain(|s| s.run_id != run_id);
        write_atomic(&self.index_path(), &to_document(&index))
    }

    /// Compares saved runs in the requested order.
    pub fn compare_runs(&self, run_ids: &[String]) -> Result<Comparison, StoreError> {
        let runs = run_ids
            .iter()
            .map(|id| self.load_run(id))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(compare(&runs))
    }
}

/// Scenario documents created through the API.
#[derive(Debug)]
pub struct ScenarioStore {
    dir: PathBuf,
    writer: Mutex<()>,
}

impl ScenarioStore {
    pub fn open(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = root.as_ref().join("scenarios");
        create_dir(&dir)?;
        Ok(ScenarioStore {
            dir,
            writer: Mutex::new(()),
        })
    }

    fn path(&self, id: &Uuid) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    /// Stores a new scenario and returns its id. Any id in `scenario` is replaced.
    pub fn create(&self, scenario: &FarmScenario) -> Result<FarmScenario, StoreError> {
        let id = Uuid::new_v4();
        let mut stored = scenario.clone();
        stored.id = Some(id.to_string());
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        write_atomic(&self.path(&id), &to_document(&stored))?;
        Ok(stored)
    }

    pub fn get(&self, id: &str) -> Result<FarmScenario, StoreError> {
        let uuid = parse_id(id).ok_or_else(|| StoreError::ScenarioNotFound(id.to_owned()))?;
        read_document(&self.path(&uuid))?.ok_or_else(|| StoreError::ScenarioNotFound(id.to_owned()))
    }

    /// Replaces an existing scenario.
    pub fn replace(&self, id: &str, scenario: &FarmScenario) -> Result<FarmScenario, StoreError> {
        let uuid = parse_id(id).ok_or_else(|| StoreError::ScenarioNotFound(id.to_owned()))?;
        let path = self.path(&uuid);
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        if !path.exists() {
            return Err(StoreError::ScenarioNotFound(id.to_owned()));
        }
        let mut stored = scenario.clone();
        stored.id = Some(uuid.to_string());
        write_atomic(&path, &to_document(&stored))?;
        Ok(stored)
    }

    pub fn delete(&self, id: &str) -> Result<(), StoreError> {
        let uuid = parse_id(id).ok_or_else(|| StoreError::ScenarioNotFound(id.to_owned()))?;
        let path = self.path(&uuid);
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        fs::remove_file(&path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => StoreError::ScenarioNotFound(id.to_owned()),
            _ => io_error(&path)(e),
        })
    }
}
