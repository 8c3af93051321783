//! Exit-time sweeps over the data size.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::DataFamily;
use super::RowStatus;
use crate::error::Result;
use crate::evolve::{run, EvolveConfig, HealthThresholds, Snapshot};
use crate::nonlinear::NonlinearityPlan;
use crate::spectral::{Field, Grid};
use crate::symbols::TrilinearSymbol;

#[derive(Debug, Clone, PartialEq)]
pub struct LifespanSetup {
    pub grid: Grid,
    pub data: DataFamily,
    pub eps: Vec<f64>,
    /// Longest horizon; runs reaching it are censored.
    pub cap: f64,
    pub dt: f64,
    /// Snapshot cadence in steps (health and wrap checks).
    pub cadence: usize,
    pub health: HealthThresholds,
    /// Outer fraction of the domain (on each side) treated as the edge.
    pub edge_width: f64,
    /// Largest tolerated mass fraction in the edge zone; `None` disables
    /// the wrap-around check (genuinely periodic data).
    pub edge_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanRow {
    pub eps: f64,
    pub status: RowStatus,
    /// Exit time, `None` unless the run exited.
    pub exit_time: Option<f64>,
    /// Largest edge-zone mass fraction seen.
    pub edge_fraction: f64,
    /// Reference curves `eps^{-8}` and `eps^{-6}` (shape only, the
    /// constant in the lifespan bound is unknown).
    pub ref_eps8: f64,
    pub ref_eps6: f64,
}

/// Mass fraction of `u` within `width * L` of either end of the window.
pub fn edge_fraction(u: &Field, width: f64) -> f64 {
    let g = u.grid();
    let cut = (0.5 - width) * g.length();
    let total = u.l2_norm_sq();
    if total == 0.0 {
        return 0.0;
    }
    let edge: f64 = g
        .positions()
        .iter()
        .zip(u.values())
        .filter(|(x, _)| x.abs() > cut)
        .map(|(_, v)| v.norm_sqr())
        .sum::<f64>()
        * g.dx();
    edge / total
}

/// Integrate each size until a health exit or `cap`. A cap of zero
/// yields an empty table.
pub fn lifespan_sweep(symbol: &TrilinearSymbol, setup: &LifespanSetup) -> Result<Vec<LifespanRow>> {
    if setup.cap <= 0.0 {
        return Ok(Vec::new());
    }
    let plan = NonlinearityPlan::new(symbol.clone(), setup.grid)?;
    let config = EvolveConfig::new(setup.dt, setup.cap)?
        .with_cadence(setup.cadence)?
        .with_health(setup.health);
    setup
        .eps
        .par_iter()
        .map(|&eps| {
            let u0 = setup.data.sample(&setup.grid, eps)?;
            let mut worst_edge: f64 = 0.0;
            let mut edge_monitor = |s: &Snapshot<'_>| {
                worst_edge = worst_edge.max(edge_fraction(s.field, setup.edge_width));
            };
            let out = run(&u0, &config, &plan, &mut [&mut edge_monitor])?;
            let wrapped = setup.edge_tolerance.is_some_and(|tol| worst_edge > tol);
            let (status, exit_time) = match out.state.exit {
                _ if wrapped => (
                    RowStatus::Invalidated {
                        reason: format!("wrap-around: edge mass fraction {worst_edge:.3e}"),
                    },
                    None,
                ),
                Some(e) => (
                    RowStatus::Exited {
                        reason: e.reason,
                        time: e.time,
                    },
                    Some(e.time),
                ),
                None => (RowStatus::Censored { cap: setup.cap }, None),
            };
            Ok(LifespanRow {
                eps,
                status,
                exit_time,
                edge_fraction: worst_edge,
                ref_eps8: eps.powi(-8),
                ref_eps6: eps.powi(-6),
            })
        })
        .collect()
}

/// Exit times are nondecreasing as `eps` decreases; censored rows count
/// as infinitely late, invalidated rows are skipped.
pub fn exit_times_monotone(rows: &[LifespanRow]) -> bool {
    let mut pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| match r.status {
            RowStatus::Exited { time, .. } => Some((r.eps, time)),
            RowStatus::Censored { .. } | RowStatus::Complete => Some((r.eps, f64::INFINITY)),
            RowStatus::Invalidated { .. } => None,
        })
        .collect();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    pts.windows(2).all(|w| w[1].1 >= w[0].1)
}
