//! Versioned CSV tables and the JSON run manifest.
//!
//! Every CSV starts with a comment line `# schema: <name>` followed by a
//! header row. The manifest lists every file written under the output
//! directory together with its schema and row count.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{
    DistanceRow, DriftRow, LifespanRow, MorawetzRow, RowStatus, ScalingFit, SolitonRow, WindowRow,
};
use crate::norms::{AuditRow, InterpolationEntry};

pub const MANIFEST_SCHEMA: &str = "cubiclab.manifest.v1";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const DRIFT_SCHEMA: &str = "cubiclab.drift.v1";
pub const FITS_SCHEMA: &str = "cubiclab.fits.v1";
pub const LIFESPAN_SCHEMA: &str = "cubiclab.lifespan.v1";
pub const SOLITON_SCHEMA: &str = "cubiclab.soliton.v1";
pub const WINDOWS_SCHEMA: &str = "cubiclab.windows.v1";
pub const DISTANCE_SCHEMA: &str = "cubiclab.distance.v1";
pub const MORAWETZ_SCHEMA: &str = "cubiclab.morawetz.v1";
pub const SERIES_SCHEMA: &str = "cubiclab.series.v1";
pub const BOOTSTRAP_SCHEMA: &str = "cubiclab.bootstrap.v1";
pub const INTERPOLATION_SCHEMA: &str = "cubiclab.interpolation.v1";
pub const SELFTEST_SCHEMA: &str = "cubiclab.selftest.v1";
pub const SYMBOL_SCHEMA: &str = "cubiclab.symbol.v1";

/// Every schema string this version writes.
pub const KNOWN_SCHEMAS: &[&str] = &[
    MANIFEST_SCHEMA,
    DRIFT_SCHEMA,
    FITS_SCHEMA,
    LIFESPAN_SCHEMA,
    SOLITON_SCHEMA,
    WINDOWS_SCHEMA,
    DISTANCE_SCHEMA,
    MORAWETZ_SCHEMA,
    SERIES_SCHEMA,
    BOOTSTRAP_SCHEMA,
    INTERPOLATION_SCHEMA,
    SELFTEST_SCHEMA,
    SYMBOL_SCHEMA,
];

const SCHEMA_PREFIX: &str = "# schema: ";

/// Serialize `rows` to `path` behind the schema comment line.
pub fn write_csv<T: Serialize>(path: &Path, schema: &str, rows: &[T]) -> Result<()> {
    let mut file = fs::File::create(path)?;
    writeln!(file, "{SCHEMA_PREFIX}{schema}")?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Schema string from the first line of a CSV written by [`write_csv`].
pub fn read_schema(path: &Path) -> Result<String> {
    let mut line = String::new();
    BufReader::new(fs::File::open(path)?).read_line(&mut line)?;
    line.trim_end()
        .strip_prefix(SCHEMA_PREFIX)
        .map(str::to_string)
        .ok_or_else(|| Error::InvalidConfig(format!("{} has no schema line", path.display())))
}

/// Rows of a CSV written by [`write_csv`] (schema line skipped).
pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = BufReader::new(fs::File::open(path)?);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Flat form of [`RowStatus`] for tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusColumns {
    pub status: String,
    pub exit_reason: Option<String>,
    pub exit_time: Option<f64>,
    pub note: Option<String>,
}

impl From<&RowStatus> for StatusColumns {
    fn from(s: &RowStatus) -> Self {
        let (exit_reason, exit_time, note) = match s {
            RowStatus::Exited { reason, time } => (
                Some(serde_json::to_value(reason).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()),
                Some(*time),
                None,
            ),
            RowStatus::Censored { cap } => (None, None, Some(format!("cap {cap}"))),
            RowStatus::Invalidated { reason } => (None, None, Some(reason.clone())),
            RowStatus::Complete => (None, None, None),
        };
        Self {
            status: s.label().to_string(),
            exit_reason,
            exit_time,
            note,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRecord {
    pub eps: f64,
    pub mass0: f64,
    pub raw_rate: f64,
    pub corrected_rate: f64,
    pub correction_gap: f64,
    pub status: String,
    pub exit_reason: Option<String>,
    pub exit_time: Option<f64>,
}

impl From<&DriftRow> for DriftRecord {
    fn from(r: &DriftRow) -> Self {
        let s = StatusColumns::from(&r.status);
        Self {
            eps: r.eps,
            mass0: r.mass0,
            raw_rate: r.raw_rate,
            corrected_rate: r.corrected_rate,
            correction_gap: r.correction_gap,
            status: s.status,
            exit_reason: s.exit_reason,
            exit_time: s.exit_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub experiment: String,
    pub quantity: String,
    pub points: usize,
    pub slope: f64,
    pub half_width: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    /// Reference exponent the slope is compared against, if any.
    pub reference: Option<f64>,
}

impl FitRecord {
    pub fn new(experiment: &str, quantity: &str, fit: &ScalingFit, reference: Option<f64>) -> Self {
        Self {
            experiment: experiment.to_string(),
            quantity: quantity.to_string(),
            points: fit.x.len(),
            slope: fit.slope,
            half_width: fit.half_width,
            prefactor: fit.prefactor,
            r_squared: fit.r_squared,
            reference,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanRecord {
    pub eps: f64,
    pub status: String,
    pub exit_reason: Option<String>,
    pub exit_time: Option<f64>,
    pub note: Option<String>,
    pub edge_fraction: f64,
    pub ref_eps8: f64,
    pub ref_eps6: f64,
}

impl From<&LifespanRow> for LifespanRecord {
    fn from(r: &LifespanRow) -> Self {
        let s = StatusColumns::from(&r.status);
        Self {
            eps: r.eps,
            status: s.status,
            exit_reason: s.exit_reason,
            exit_time: s.exit_time,
            note: s.note,
            edge_fraction: r.edge_fraction,
            ref_eps8: r.ref_eps8,
            ref_eps6: r.ref_eps6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub datum: String,
    pub norm0: f64,
    pub n_points: usize,
    pub t0: f64,
    pub t1: f64,
    pub ratio_l2: f64,
    pub ratio_strichartz: f64,
    pub ratio_bilinear: f64,
    pub c_sq: Option<f64>,
}

impl WindowRecord {
    pub fn new(datum: &str, norm0: f64, n_points: usize, w: &WindowRow) -> Self {
        Self {
            datum: datum.to_string(),
            norm0,
            n_points,
            t0: w.t0,
            t1: w.t1,
            ratio_l2: w.ratio_l2,
            ratio_strichartz: w.ratio_strichartz,
            ratio_bilinear: w.ratio_bilinear,
            c_sq: w.c_sq,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorawetzRecord {
    pub eps: f64,
    pub remainder_sup: f64,
    pub remainder_l1: f64,
    pub j4_sup: f64,
    pub cadence_defect: f64,
    pub status: String,
    pub exit_reason: Option<String>,
    pub exit_time: Option<f64>,
}

impl From<&MorawetzRow> for MorawetzRecord {
    fn from(r: &MorawetzRow) -> Self {
        let s = StatusColumns::from(&r.status);
        Self {
            eps: r.eps,
            remainder_sup: r.remainder_sup,
            remainder_l1: r.remainder_l1,
            j4_sup: r.j4_sup,
            cadence_defect: r.cadence_defect,
            status: s.status,
            exit_reason: s.exit_reason,
            exit_time: s.exit_time,
        }
    }
}

/// One sample of the functional series of a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub time: f64,
    pub mass: f64,
    pub corrected_mass: f64,
    pub interaction: f64,
    pub j4: f64,
    /// Centred `dI/dt - J4`; empty at the end points.
    pub remainder: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRecord {
    pub bound: String,
    pub k1: i64,
    pub k2: i64,
    pub measured: f64,
    pub claimed: f64,
    pub ratio: f64,
}

impl From<&AuditRow> for BootstrapRecord {
    fn from(r: &AuditRow) -> Self {
        Self {
            bound: r.bound.label().to_string(),
            k1: r.k1,
            k2: r.k2,
            measured: r.measured,
            claimed: r.claimed,
            ratio: r.ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationRecord {
    pub datum: String,
    pub n_points: usize,
    pub band: i64,
    pub constant: Option<f64>,
}

impl InterpolationRecord {
    pub fn new(datum: &str, n_points: usize, e: &InterpolationEntry) -> Self {
        Self {
            datum: datum.to_string(),
            n_points,
            band: e.band,
            constant: e.constant,
        }
    }
}

/// Rows that are already flat are written as they are.
pub type SolitonRecord = SolitonRow;
pub type DistanceRecord = DistanceRow;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub schema: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub version: String,
    pub command: String,
    /// Effective configuration after overrides.
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub outputs: Vec<OutputEntry>,
    /// Measured errors of the oracle checks run alongside the experiment.
    pub oracle_errors: BTreeMap<String, f64>,
    /// Free-form numeric facts (strategy rank, correction size, ...).
    pub notes: BTreeMap<String, serde_json::Value>,
    pub status: RunStatus,
    pub error: Option<String>,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value, seeds: Vec<u64>) -> Self {
        Self {
            schema: MANIFEST_SCHEMA.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            seeds,
            outputs: Vec::new(),
            oracle_errors: BTreeMap::new(),
            notes: BTreeMap::new(),
            status: RunStatus::Running,
            error: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: Manifest = serde_json::from_reader(BufReader::new(fs::File::open(path)?))?;
        if m.schema != MANIFEST_SCHEMA {
            return Err(Error::InvalidConfig(format!("unknown manifest schema `{}`", m.schema)));
        }
        Ok(m)
    }
}

/// Output directory that records every file it writes in the manifest.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    pub manifest: Manifest,
}

impl OutputDir {
    pub fn create(root: &Path, manifest: Manifest) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            manifest,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, schema: &str, rows: &[T]) -> Result<PathBuf> {
        let path = self.root.join(name);
        write_csv(&path, schema, rows)?;
        self.register(name, schema, rows.len());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, schema: &str, value: &T) -> Result<PathBuf> {
        let path = self.root.join(name);
        let mut file = fs::File::create(&path)?;
        serde_json::to_writer_pretty(&mut file, value)?;
        writeln!(file)?;
        self.register(name, schema, 1);
        Ok(path)
    }

    fn register(&mut self, name: &str, schema: &str, rows: usize) {
        self.manifest.outputs.retain(|e| e.path != name);
        self.manifest.outputs.push(OutputEntry {
            path: name.to_string(),
            schema: schema.to_string(),
            rows,
        });
    }

    /// Write the manifest with the final status.
    pub fn finish(&mut self, outcome: std::result::Result<(), String>) -> Result<PathBuf> {
        match outcome {
            Ok(()) => self.manifest.status = RunStatus::Ok,
            Err(e) => {
                self.manifest.status = RunStatus::Failed;
                self.manifest.error = Some(e);
            }
        }
        let path = self.root.join(MANIFEST_FILE);
        let mut file = fs::File::create(&path)?;
        serde_json::to_writer_pretty(&mut file, &self.manifest)?;
        writeln!(file)?;
        Ok(path)
    }
}
