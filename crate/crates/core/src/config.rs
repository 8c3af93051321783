//! Run configuration: one TOML file plus dotted `key=value` overrides.
//!
//! Every physical default lives in `configs/default.toml` at the
//! repository root, which mirrors [`Config::default`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{EvolveConfig, HealthThresholds, Scheme};
use crate::experiments::{
    DataFamily, DistanceSetup, DriftSetup, LifespanSetup, ModelAuditSetup, MorawetzSetup,
    SolitonSuiteSetup, Stencil,
};
use crate::functionals::InteractionSpec;
use crate::nonlinear::{NonlinearityPlan, StrategyKind};
use crate::spectral::{Band, Grid};
use crate::symbols::TrilinearSymbol;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n_points: usize,
    pub length: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n_points: 128,
            length: std::f64::consts::TAU,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymbolSection {
    pub spec: String,
    /// Force an evaluation strategy; automatic when absent.
    pub strategy: Option<StrategyKind>,
}

impl Default for SymbolSection {
    fn default() -> Self {
        Self {
            spec: "separable:-1|1|1|1;0.5|sech(x/3)|sech(x/3)|sech(x/3)".into(),
            strategy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub cadence: usize,
    pub health: HealthThresholds,
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self {
            dt: 0.005,
            t_end: 1.0,
            scheme: Scheme::IntegratingFactorRk4,
            cadence: 20,
            health: HealthThresholds::default(),
        }
    }
}

/// Single run (`run` verb).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub eps: f64,
    /// Band of the monitored mass and its quartic correction.
    pub band: Band,
    pub correction_kmax: i64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            eps: 0.5,
            band: Band::Global,
            correction_kmax: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftSection {
    pub eps: Vec<f64>,
    pub horizon: f64,
    pub samples: usize,
    pub band: Band,
    pub correction_kmax: i64,
}

impl Default for DriftSection {
    fn default() -> Self {
        Self {
            eps: vec![0.2, 0.3, 0.45, 0.65, 0.8],
            horizon: 1.0,
            samples: 5,
            band: Band::Global,
            correction_kmax: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LifespanSection {
    pub eps: Vec<f64>,
    pub cap: f64,
    pub edge_width: f64,
    /// Largest edge mass fraction before a run counts as wrapped; absent
    /// for periodic data.
    pub edge_tolerance: Option<f64>,
}

impl Default for LifespanSection {
    fn default() -> Self {
        Self {
            eps: vec![0.8, 0.65, 0.5, 0.4],
            cap: 200.0,
            edge_width: 0.1,
            edge_tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MorawetzSection {
    pub eps: Vec<f64>,
    pub band_a: Band,
    pub band_b: Band,
    pub xi0: f64,
    pub x0: f64,
    pub stencil: Stencil,
    /// Steps between functional samples (the stencil spacing).
    pub cadence: usize,
}

impl Default for MorawetzSection {
    fn default() -> Self {
        Self {
            eps: vec![0.2, 0.3, 0.45, 0.65, 0.8],
            band_a: Band::Global,
            band_b: Band::Global,
            xi0: 0.0,
            x0: 0.0,
            stencil: Stencil::Centered2,
            cadence: 2,
        }
    }
}

/// The whole configuration. Sections not used by a verb are ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub grid: GridSection,
    pub symbol: SymbolSection,
    pub evolve: EvolveSection,
    pub data: DataFamily,
    pub run: RunSection,
    pub drift: DriftSection,
    pub lifespan: LifespanSection,
    pub morawetz: MorawetzSection,
    pub soliton: SolitonSuiteSetup,
    pub audit: ModelAuditSetup,
    pub distance: DistanceSetup,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            grid: GridSection::default(),
            symbol: SymbolSection::default(),
            evolve: EvolveSection::default(),
            data: DataFamily::RandomModes {
                kmax: 5,
                seed: 1,
                decay: 0.0,
            },
            run: RunSection::default(),
            drift: DriftSection::default(),
            lifespan: LifespanSection::default(),
            morawetz: MorawetzSection::default(),
            soliton: SolitonSuiteSetup::default(),
            audit: ModelAuditSetup::default(),
            distance: DistanceSetup::default(),
        }
    }
}

fn config_error(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Parse an override value as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    #[derive(Deserialize)]
    struct Probe {
        v: toml::Value,
    }
    toml::from_str::<Probe>(&format!("v = {raw}"))
        .map(|p| p.v)
        .unwrap_or_else(|_| toml::Value::String(raw.to_string()))
}

/// Set `key` (dot separated) in `table`, creating intermediate tables.
fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_error(key, "malformed key"));
    }
    let (last, parents) = parts.split_last().expect("split yields one part");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(config_error(key, format!("`{p}` is not a table"))),
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Best-effort dotted path for a deserialization error: the first
/// backticked name in the message that occurs as a key in `table`.
fn locate_key(table: &toml::Table, message: &str) -> String {
    fn find(table: &toml::Table, name: &str, prefix: &str) -> Option<String> {
        for (k, v) in table {
            let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            if k == name {
                return Some(path);
            }
            if let toml::Value::Table(t) = v {
                if let Some(p) = find(t, name, &path) {
                    return Some(p);
                }
            }
        }
        None
    }
    message
        .split('`')
        .skip(1)
        .step_by(2)
        .find_map(|name| find(table, name, ""))
        .unwrap_or_else(|| "<config>".to_string())
}

impl Config {
    /// Parse TOML text, apply `overrides` (`key=value`, last wins) and
    /// validate.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| config_error("<config>", e.message().to_string()))?;
        for ov in overrides {
            let (key, raw) = ov
                .split_once('=')
                .ok_or_else(|| config_error(ov, "override must look like key=value"))?;
            set_path(&mut table, key.trim(), parse_value(raw.trim()))?;
        }
        let cfg: Config = toml::Value::Table(table.clone()).try_into().map_err(|e: toml::de::Error| {
            let msg = e.message().to_string();
            config_error(&locate_key(&table, &msg), msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config is plain data")
    }

    /// Physics checks that do not need any compute.
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.n_points < 2 || g.n_points % 2 != 0 {
            return Err(config_error("grid.n_points", format!("must be even and >= 2, got {}", g.n_points)));
        }
        positive("grid.length", g.length)?;
        TrilinearSymbol::parse(&self.symbol.spec).map_err(|e| config_error("symbol.spec", e.to_string()))?;
        positive("evolve.dt", self.evolve.dt)?;
        if !(self.evolve.t_end.is_finite() && self.evolve.t_end >= 0.0) {
            return Err(config_error("evolve.t_end", "must be >= 0"));
        }
        if self.evolve.cadence == 0 {
            return Err(config_error("evolve.cadence", "must be >= 1"));
        }
        positive("run.eps", self.run.eps)?;
        all_positive("drift.eps", &self.drift.eps)?;
        positive("drift.horizon", self.drift.horizon)?;
        if self.drift.samples < 2 {
            return Err(config_error("drift.samples", "need at least 2"));
        }
        all_positive("lifespan.eps", &self.lifespan.eps)?;
        if !(self.lifespan.edge_width > 0.0 && self.lifespan.edge_width < 0.5) {
            return Err(config_error("lifespan.edge_width", "must lie in (0, 1/2)"));
        }
        all_positive("morawetz.eps", &self.morawetz.eps)?;
        if self.morawetz.cadence == 0 {
            return Err(config_error("morawetz.cadence", "must be >= 1"));
        }
        all_positive("soliton.lambdas", &self.soliton.lambdas)?;
        positive("soliton.t_end", self.soliton.t_end)?;
        even("soliton.n_points", self.soliton.n_points)?;
        all_positive("audit.norms", &self.audit.norms)?;
        all_positive("audit.multipliers", &self.audit.multipliers)?;
        even("audit.n_points", self.audit.n_points)?;
        positive("audit.dt", self.audit.dt)?;
        even("distance.n_points", self.distance.n_points)?;
        if let Some(d) = self.distance.distances.iter().find(|d| **d < 2 || **d % 2 != 0) {
            return Err(config_error("distance.distances", format!("must be even and >= 2, got {d}")));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.n_points, self.grid.length).map_err(|e| config_error("grid", e.to_string()))
    }

    pub fn symbol(&self) -> Result<TrilinearSymbol> {
        TrilinearSymbol::parse(&self.symbol.spec)
    }

    pub fn plan(&self) -> Result<NonlinearityPlan> {
        let symbol = self.symbol()?;
        let grid = self.grid()?;
        match self.symbol.strategy {
            Some(kind) => NonlinearityPlan::with_strategy(symbol, grid, kind),
            None => NonlinearityPlan::new(symbol, grid),
        }
    }

    pub fn evolve_config(&self) -> Result<EvolveConfig> {
        Ok(EvolveConfig::new(self.evolve.dt, self.evolve.t_end)?
            .with_scheme(self.evolve.scheme)
            .with_cadence(self.evolve.cadence)?
            .with_health(self.evolve.health))
    }

    /// Seeds that determine the run (for the manifest).
    pub fn seeds(&self) -> Vec<u64> {
        self.data.seed().into_iter().collect()
    }

    pub fn drift_setup(&self) -> Result<DriftSetup> {
        Ok(DriftSetup {
            grid: self.grid()?,
            data: self.data.clone(),
            eps: self.drift.eps.clone(),
            horizon: self.drift.horizon,
            samples: self.drift.samples,
            dt: self.evolve.dt,
            band: self.drift.band,
            correction_kmax: self.drift.correction_kmax,
            health: self.evolve.health,
        })
    }

    pub fn lifespan_setup(&self) -> Result<LifespanSetup> {
        Ok(LifespanSetup {
            grid: self.grid()?,
            data: self.data.clone(),
            eps: self.lifespan.eps.clone(),
            cap: self.lifespan.cap,
            dt: self.evolve.dt,
            cadence: self.evolve.cadence,
            health: self.evolve.health,
            edge_width: self.lifespan.edge_width,
            edge_tolerance: self.lifespan.edge_tolerance,
        })
    }

    pub fn morawetz_setup(&self) -> Result<MorawetzSetup> {
        let m = &self.morawetz;
        Ok(MorawetzSetup {
            grid: self.grid()?,
            data: self.data.clone(),
            eps: m.eps.clone(),
            t_end: self.evolve.t_end,
            dt: self.evolve.dt,
            cadence: m.cadence,
            spec: InteractionSpec::new(m.band_a, m.band_b, m.xi0, m.x0),
            stencil: m.stencil,
        })
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(config_error(key, format!("must be positive, got {v}")))
    }
}

fn all_positive(key: &str, vs: &[f64]) -> Result<()> {
    vs.iter().try_for_each(|&v| positive(key, v))
}

fn even(key: &str, n: usize) -> Result<()> {
    if n >= 2 && n % 2 == 0 {
        Ok(())
    } else {
        Err(config_error(key, format!("must be even and >= 2, got {n}")))
    }
}
