//! Desk-scale studies built on the solver and the functionals: drift
//! scaling, lifespan sweeps, the soliton table and the bound audits.

pub mod audit;
pub mod data;
pub mod drift;
pub mod fit;
pub mod lifespan;
pub mod soliton;

use serde::{Deserialize, Serialize};

use crate::evolve::{ExitReason, RunState};

pub use audit::{
    distance_scaling, evolve_series, free_series, model_audit, model_windows, morawetz_scaling, refinement_defect, theorem_audit,
    AuditDatum, DistanceOutcome, DistanceRow, DistanceSetup, ModelAuditRow, ModelAuditSetup, MorawetzOutcome, MorawetzRow, MorawetzSetup, Stencil, TheoremAudit,
    TheoremFlavor, WindowRow,
};
pub use data::{soliton_profile, DataFamily};
pub use drift::{drift_scaling, mass_source_check, DriftOutcome, DriftRow, DriftSetup, SourceCheck};
pub use fit::{fit_line, LineFit, ScalingFit, MIN_FIT_POINTS};
pub use lifespan::{lifespan_sweep, LifespanRow, LifespanSetup};
pub use soliton::{soliton_row, soliton_suite, SolitonRow, SolitonSpec, SolitonSuiteSetup};

/// Outcome of one sweep point. Rows never disappear from a table; runs
/// that could not be used carry their reason here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RowStatus {
    Complete,
    Exited { reason: ExitReason, time: f64 },
    Censored { cap: f64 },
    Invalidated { reason: String },
}

impl RowStatus {
    pub fn from_run(state: &RunState) -> Self {
        match state.exit {
            Some(e) => RowStatus::Exited {
                reason: e.reason,
                time: e.time,
            },
            None => RowStatus::Complete,
        }
    }

    pub fn is_complete(&self) -> bool {
        matches!(self, RowStatus::Complete)
    }

    pub fn label(&self) -> &'static str {
        match self {
            RowStatus::Complete => "complete",
            RowStatus::Exited { .. } => "exited",
            RowStatus::Censored { .. } => "censored",
            RowStatus::Invalidated { .. } => "invalidated",
        }
    }
}
