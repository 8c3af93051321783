//! Theorem-constant audits: window ratios for the small-data and model
//! theorems, the bilinear distance law, and the Morawetz remainder scaling.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::DataFamily;
use super::fit::ScalingFit;
use super::RowStatus;
use crate::error::{Error, Result};
use crate::evolve::{run, EvolveConfig, HealthThresholds, Scheme};
use crate::functionals::{InteractionSpec, MorawetzMonitor};
use crate::nonlinear::NonlinearityPlan;
use crate::norms::{bilinear_strichartz, spacetime_l6, FieldSeries, SobolevFlavor};
use crate::spectral::{apply_multiplier, Band, Field, Grid};
use crate::symbols::TrilinearSymbol;

/// Sample the flow of `symbol` from `u0` at `samples + 1` equally spaced
/// times on `[0, t_end]`.
pub fn evolve_series(
    symbol: &TrilinearSymbol,
    u0: &Field,
    t_end: f64,
    dt: f64,
    samples: usize,
    health: HealthThresholds,
) -> Result<(FieldSeries, RowStatus)> {
    if samples < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: samples });
    }
    let plan = NonlinearityPlan::new(symbol.clone(), *u0.grid())?;
    let (per_sample, dt) = super::drift::fitted_dt(t_end / samples as f64, dt);
    let config = EvolveConfig::new(dt, t_end)?
        .with_scheme(Scheme::IntegratingFactorRk4)
        .with_cadence(per_sample)?
        .with_health(health);
    let mut series = FieldSeries::new();
    let out = run(u0, &config, &plan, &mut [&mut series])?;
    Ok((series, RowStatus::from_run(&out.state)))
}

/// Exact linear flow `e^{i t d_xx} u0` sampled like [`evolve_series`].
pub fn free_series(u0: &Field, t_end: f64, samples: usize) -> Result<FieldSeries> {
    if samples < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: samples });
    }
    let mut series = FieldSeries::new();
    for i in 0..=samples {
        let t = t_end * i as f64 / samples as f64;
        series.push(t, apply_multiplier(u0, |xi| Complex64::from_polar(1.0, -xi * xi * t)))?;
    }
    Ok(series)
}

/// Which theorem's normalization the window ratios use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TheoremFlavor {
    /// Small data of size `eps`: `L^2 / eps`, `L^6 / eps^{2/3}`, and
    /// `L^2_t H^{-1/2}` bilinear `/ eps^2`.
    SmallData { eps: f64 },
    /// Focusing cubic NLS normalized by `n = ||u0||`: `L^6 / (n (|I| n^4)^{1/6})`
    /// and the bilinear norm in `H-dot^{-1/2} + c L^2` with
    /// `c^2 = n^2 (|I| n^4)`, divided by `n^2`.
    Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub t0: f64,
    pub t1: f64,
    pub ratio_l2: f64,
    pub ratio_strichartz: f64,
    pub ratio_bilinear: f64,
    /// Sum-space constant `c^2` (model flavor only).
    pub c_sq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremAudit {
    pub flavor: TheoremFlavor,
    /// `||u0||_{L^2}`.
    pub norm0: f64,
    pub x0: f64,
    pub rows: Vec<WindowRow>,
}

/// Measured-over-claimed constants on each window. Reported, not judged.
pub fn theorem_audit(series: &FieldSeries, flavor: TheoremFlavor, windows: &[(f64, f64)], x0: f64) -> Result<TheoremAudit> {
    let norm0 = series
        .fields()
        .first()
        .ok_or(Error::TooFewSamples { needed: 3, got: 0 })?
        .l2_norm();
    let rows = windows
        .iter()
        .map(|&(t0, t1)| {
            let (idx, _) = series.window((t0, t1))?;
            let sup_l2 = idx.iter().map(|&i| series.fields()[i].l2_norm()).fold(0.0, f64::max);
            let l6 = spacetime_l6(series, (t0, t1))?;
            let length = t1 - t0;
            let bi = |flavor| bilinear_strichartz(series, &Band::Global, &Band::Global, x0, (t0, t1), -0.5, flavor);
            Ok(match flavor {
                TheoremFlavor::SmallData { eps } => WindowRow {
                    t0,
                    t1,
                    ratio_l2: sup_l2 / eps,
                    ratio_strichartz: l6 / eps.powf(2.0 / 3.0),
                    ratio_bilinear: bi(SobolevFlavor::Inhomogeneous)? / (eps * eps),
                    c_sq: None,
                },
                TheoremFlavor::Model => {
                    let n = norm0;
                    let scale = length * n.powi(4);
                    let c_sq = n * n * scale;
                    WindowRow {
                        t0,
                        t1,
                        ratio_l2: sup_l2 / n,
                        ratio_strichartz: l6 / (n * scale.powf(1.0 / 6.0)),
                        ratio_bilinear: bi(SobolevFlavor::Sum { c: c_sq.sqrt() })? / (n * n),
                        c_sq: Some(c_sq),
                    }
                }
            })
        })
        .collect::<Result<_>>()?;
    Ok(TheoremAudit {
        flavor,
        norm0,
        x0,
        rows,
    })
}

/// Windows `[0, m n^{-4}]` for each multiplier `m` (the model theorem
/// needs `|I| > n^{-4}`).
pub fn model_windows(norm0: f64, multipliers: &[f64]) -> Vec<(f64, f64)> {
    multipliers.iter().map(|m| (0.0, m * norm0.powi(-4))).collect()
}

/// Largest relative disagreement between two audits of the same windows.
pub fn refinement_defect(a: &TheoremAudit, b: &TheoremAudit) -> f64 {
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
    a.rows
        .iter()
        .zip(&b.rows)
        .map(|(p, q)| {
            rel(p.ratio_l2, q.ratio_l2)
                .max(rel(p.ratio_strichartz, q.ratio_strichartz))
                .max(rel(p.ratio_bilinear, q.ratio_bilinear))
        })
        .fold(0.0, f64::max)
}

/// Initial datum of the model-theorem audit, normalized to `||u0|| = n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AuditDatum {
    Gaussian { width: f64, length: f64 },
    /// `Q_lambda` with `2 lambda = n^2` on a domain of `length_scale / lambda`.
    Soliton { length_scale: f64 },
}

impl AuditDatum {
    pub fn name(&self) -> &'static str {
        match self {
            AuditDatum::Gaussian { .. } => "gaussian",
            AuditDatum::Soliton { .. } => "soliton",
        }
    }

    pub fn sample(&self, n_points: usize, norm: f64) -> Result<Field> {
        match *self {
            AuditDatum::Gaussian { width, length } => DataFamily::Gaussian {
                center: 0.0,
                width,
                k0: 0.0,
            }
            .sample(&Grid::new(n_points, length)?, norm),
            AuditDatum::Soliton { length_scale } => {
                let lambda = 0.5 * norm * norm;
                let grid = Grid::new(n_points, length_scale / lambda)?;
                super::soliton::SolitonSpec::new(lambda)?.profile(&grid)
            }
        }
    }
}

/// Model-theorem windows for the focusing cubic flow, each norm run at
/// `n_points` and `2 n_points` on the same domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelAuditSetup {
    pub norms: Vec<f64>,
    /// Window lengths in units of `n^{-4}`.
    pub multipliers: Vec<f64>,
    pub datum: AuditDatum,
    pub n_points: usize,
    pub dt: f64,
    pub samples: usize,
}

impl Default for ModelAuditSetup {
    fn default() -> Self {
        Self {
            norms: vec![0.5, 1.0],
            multipliers: vec![1.0, 2.0, 4.0],
            datum: AuditDatum::Gaussian { width: 1.0, length: 400.0 },
            n_points: 1024,
            dt: 0.01,
            samples: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAuditRow {
    pub norm: f64,
    pub coarse: TheoremAudit,
    pub fine: TheoremAudit,
    /// [`refinement_defect`] between the two resolutions.
    pub defect: f64,
    pub status: RowStatus,
}

pub fn model_audit(setup: &ModelAuditSetup) -> Result<Vec<ModelAuditRow>> {
    let focusing = TrilinearSymbol::real_constant(-2.0);
    let longest = setup.multipliers.iter().cloned().fold(0.0, f64::max);
    if !(longest > 0.0) {
        return Err(Error::InvalidConfig("audit needs a positive window multiplier".into()));
    }
    setup
        .norms
        .par_iter()
        .map(|&norm| {
            let windows = model_windows(norm, &setup.multipliers);
            let t_end = longest * norm.powi(-4);
            let audit_at = |n_points: usize| -> Result<(TheoremAudit, RowStatus)> {
                let u0 = setup.datum.sample(n_points, norm)?;
                let (series, status) =
                    evolve_series(&focusing, &u0, t_end, setup.dt, setup.samples, HealthThresholds::default())?;
                Ok((theorem_audit(&series, TheoremFlavor::Model, &windows, 0.0)?, status))
            };
            let (coarse, s1) = audit_at(setup.n_points)?;
            let (fine, s2) = audit_at(2 * setup.n_points)?;
            let status = if s1.is_complete() { s2 } else { s1 };
            Ok(ModelAuditRow {
                norm,
                defect: refinement_defect(&coarse, &fine),
                coarse,
                fine,
                status,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistanceSetup {
    pub n_points: usize,
    pub length: f64,
    /// Band distances `d`; packets sit at frequencies `+-d/2`.
    pub distances: Vec<i64>,
    /// Initial half-separation `s`; the packets start at `-+s`.
    pub separation: f64,
    pub width: f64,
    /// Snapshots per run.
    pub samples: usize,
}

impl Default for DistanceSetup {
    fn default() -> Self {
        Self {
            n_points: 2048,
            length: 160.0,
            distances: vec![2, 4, 8, 16, 32],
            separation: 24.0,
            width: 4.0,
            samples: 800,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub distance: i64,
    pub t_end: f64,
    /// `||d_x (u_A conj u_B)||_{L^2_{t,x}}`.
    pub bilinear: f64,
    pub mass_a: f64,
    pub mass_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceOutcome {
    pub rows: Vec<DistanceRow>,
    pub fit: ScalingFit,
}

/// Free evolution of two packets at frequencies `+-d/2` approaching from
/// `-+s`, measured until they have passed through each other (`T = 2s/d`).
pub fn distance_scaling(setup: &DistanceSetup) -> Result<DistanceOutcome> {
    let grid = Grid::new(setup.n_points, setup.length)?;
    let rows: Vec<DistanceRow> = setup
        .distances
        .par_iter()
        .map(|&d| {
            if d < 2 || d % 2 != 0 {
                return Err(Error::InvalidConfig(format!("band distance must be even and >= 2, got {d}")));
            }
            let k = d / 2;
            let (band_a, band_b) = (Band::single(k), Band::single(-k));
            band_a.check(&grid)?;
            let packet = |center: f64, freq: f64| {
                DataFamily::Gaussian {
                    center,
                    width: setup.width,
                    k0: freq,
                }
                .sample(&grid, 1.0)
            };
            let u0 = packet(-setup.separation, k as f64)?.add(&packet(setup.separation, -k as f64)?)?;
            let t_end = 2.0 * setup.separation / d as f64;
            let series = free_series(&u0, t_end, setup.samples)?;
            let bilinear =
                bilinear_strichartz(&series, &band_a, &band_b, 0.0, (0.0, t_end), 0.0, SobolevFlavor::Inhomogeneous)?;
            Ok(DistanceRow {
                distance: d,
                t_end,
                bilinear,
                mass_a: crate::functionals::band_mass(&u0, &band_a),
                mass_b: crate::functionals::band_mass(&u0, &band_b),
            })
        })
        .collect::<Result<_>>()?;
    let x: Vec<f64> = rows.iter().map(|r| r.distance as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.bilinear / (r.mass_a * r.mass_b).sqrt()).collect();
    let fit = ScalingFit::new(&x, &y)?;
    Ok(DistanceOutcome { rows, fit })
}

/// Time-derivative stencil used for `dI/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stencil {
    /// `(I[i+1] - I[i-1]) / 2h`, error `O(h^2)`.
    Centered2,
    /// Five-point centred difference, error `O(h^4)`.
    Centered4,
}

/// `dI/dt - J4` at the interior samples reachable by `stencil`, on a
/// uniform cadence `h`.
pub fn balance_remainder(interaction: &[f64], j4: &[f64], h: f64, stencil: Stencil) -> Vec<f64> {
    let n = interaction.len();
    match stencil {
        Stencil::Centered2 => (1..n.saturating_sub(1))
            .map(|i| (interaction[i + 1] - interaction[i - 1]) / (2.0 * h) - j4[i])
            .collect(),
        Stencil::Centered4 => (2..n.saturating_sub(2))
            .map(|i| {
                let d = (-interaction[i + 2] + 8.0 * interaction[i + 1] - 8.0 * interaction[i - 1] + interaction[i - 2])
                    / (12.0 * h);
                d - j4[i]
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorawetzSetup {
    pub grid: Grid,
    pub data: DataFamily,
    pub eps: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
    /// Steps between functional samples.
    pub cadence: usize,
    pub spec: InteractionSpec,
    pub stencil: Stencil,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorawetzRow {
    pub eps: f64,
    pub remainder_sup: f64,
    pub remainder_l1: f64,
    pub j4_sup: f64,
    /// Centred-difference disagreement between cadences `h` and `2h`
    /// relative to `max |dI/dt|`.
    pub cadence_defect: f64,
    pub status: RowStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorawetzOutcome {
    pub symbol: String,
    pub rows: Vec<MorawetzRow>,
    pub sup_fit: Option<ScalingFit>,
    pub l1_fit: Option<ScalingFit>,
}

/// Sweep `eps` and fit the Morawetz balance remainder against it.
pub fn morawetz_scaling(symbol: &TrilinearSymbol, setup: &MorawetzSetup) -> Result<MorawetzOutcome> {
    let plan = NonlinearityPlan::new(symbol.clone(), setup.grid)?;
    let config = EvolveConfig::new(setup.dt, setup.t_end)?.with_cadence(setup.cadence)?;
    let (n_steps, dt) = config.steps();
    if n_steps % setup.cadence != 0 {
        return Err(Error::InvalidConfig(format!(
            "cadence {} does not divide the {n_steps} steps",
            setup.cadence
        )));
    }
    let h = dt * setup.cadence as f64;
    let rows: Vec<MorawetzRow> = setup
        .eps
        .par_iter()
        .map(|&eps| {
            let u0 = setup.data.sample(&setup.grid, eps)?;
            let mut mon = MorawetzMonitor::new(setup.spec);
            let out = run(&u0, &config, &plan, &mut [&mut mon])?;
            let status = RowStatus::from_run(&out.state);
            let report = mon.report()?;
            let rem = balance_remainder(&mon.interaction, &mon.j4, h, setup.stencil);
            Ok(MorawetzRow {
                eps,
                remainder_sup: rem.iter().fold(0.0, |m: f64, r| m.max(r.abs())),
                remainder_l1: rem.iter().map(|r| r.abs()).sum::<f64>() * h,
                j4_sup: mon.j4.iter().fold(0.0, |m: f64, r| m.max(r.abs())),
                cadence_defect: report.cadence_defect,
                status,
            })
        })
        .collect::<Result<_>>()?;
    let kept: Vec<&MorawetzRow> = rows.iter().filter(|r| r.status.is_complete()).collect();
    let x: Vec<f64> = kept.iter().map(|r| r.eps).collect();
    let fit = |y: Vec<f64>| ScalingFit::new(&x, &y).ok();
    Ok(MorawetzOutcome {
        symbol: symbol.label().to_string(),
        sup_fit: fit(kept.iter().map(|r| r.remainder_sup).collect()),
        l1_fit: fit(kept.iter().map(|r| r.remainder_l1).collect()),
        rows,
    })
}
