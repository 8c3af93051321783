//! Soliton saturation table for the focusing cubic flow `c = -2`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::soliton_profile;
use crate::error::{Error, Result};
use crate::evolve::{run, EvolveConfig, HealthThresholds, Scheme};
use crate::nonlinear::NonlinearityPlan;
use crate::norms::{bilinear_strichartz, spacetime_l6, FieldSeries, SobolevFlavor};
use crate::spectral::{Band, Field, Grid};
use crate::symbols::TrilinearSymbol;

/// Largest accepted `lambda * dx`.
pub const RESOLUTION_LIMIT: f64 = 0.2;

/// `int sech^6 = int (d/dx sech^2)^2 = 16/15`.
pub const SECH6_INTEGRAL: f64 = 16.0 / 15.0;

/// `u_lambda(x, t) = e^{i lambda^2 t} lambda sech(lambda x)`, an exact
/// solution for `c = -2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonSpec {
    pub lambda: f64,
}

impl SolitonSpec {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidConfig(format!("soliton scale must be positive, got {lambda}")));
        }
        Ok(Self { lambda })
    }

    /// The size `eps = lambda^{1/2}` at which the soliton sits in the
    /// small-data theorem.
    pub fn eps(&self) -> f64 {
        self.lambda.sqrt()
    }

    pub fn mass(&self) -> f64 {
        2.0 * self.lambda
    }

    /// Phase rotation rate `lambda^2`.
    pub fn phase_velocity(&self) -> f64 {
        self.lambda * self.lambda
    }

    pub fn profile(&self, grid: &Grid) -> Result<Field> {
        self.check_resolution(grid)?;
        soliton_profile(grid, self.lambda)
    }

    pub fn exact(&self, grid: &Grid, t: f64) -> Result<Field> {
        Ok(self
            .profile(grid)?
            .scale(Complex64::from_polar(1.0, self.phase_velocity() * t)))
    }

    pub fn check_resolution(&self, grid: &Grid) -> Result<()> {
        let value = self.lambda * grid.dx();
        if value > RESOLUTION_LIMIT {
            return Err(Error::UnderResolved {
                value,
                limit: RESOLUTION_LIMIT,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolitonSuiteSetup {
    pub lambdas: Vec<f64>,
    /// Table horizon `T`.
    pub t_end: f64,
    pub n_points: usize,
    /// Domain length in units of `1 / lambda`.
    pub length_scale: f64,
    /// Step size in units of `1 / lambda^2`.
    pub dt_unit: f64,
    /// Snapshots per table horizon.
    pub samples: usize,
}

impl Default for SolitonSuiteSetup {
    fn default() -> Self {
        Self {
            lambdas: vec![0.25, 0.5, 1.0],
            t_end: 10.0,
            n_points: 1024,
            length_scale: 80.0,
            dt_unit: 2e-3,
            samples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonRow {
    pub lambda: f64,
    pub eps: f64,
    pub n_points: usize,
    pub length: f64,
    pub dt: f64,
    pub mass: f64,
    pub mass_ref: f64,
    /// `||u||^6_{L^6((0,T) x R)}`.
    pub l6_sixth: f64,
    /// `(16/15) T lambda^5`.
    pub l6_ref: f64,
    /// `||d_x |u|^2||^2_{L^2((0,T) x R)}`.
    pub bilinear_sq: f64,
    pub bilinear_ref: f64,
    /// Relative L2 distance to the exact soliton at `T`.
    pub shape_error: f64,
    /// Phase of `<u(T), Q>` minus `lambda^2 T`, wrapped to `(-pi, pi]`.
    pub phase_error: f64,
    /// Window `(0, eps^{-6})` (capped by the run) for the ratios below.
    pub window: f64,
    /// `sup_t ||u||_{L^2} / eps`.
    pub ratio_l2: f64,
    /// `||u||_{L^6} / eps^{2/3}`.
    pub ratio_strichartz: f64,
    /// `||d_x |u|^2||_{L^2 H^{-1/2}} / eps^2`.
    pub ratio_bilinear: f64,
}

fn wrap_phase(p: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = p.rem_euclid(tau);
    if r > 0.5 * tau {
        r - tau
    } else {
        r
    }
}

fn inner(a: &Field, b: &Field) -> Complex64 {
    a.values().iter().zip(b.values()).map(|(x, y)| x * y.conj()).sum::<Complex64>() * a.grid().dx()
}

/// One row of the table.
pub fn soliton_row(lambda: f64, setup: &SolitonSuiteSetup) -> Result<SolitonRow> {
    let spec = SolitonSpec::new(lambda)?;
    if !(setup.t_end > 0.0) || setup.samples < 2 {
        return Err(Error::InvalidConfig("soliton table needs T > 0 and at least two samples".into()));
    }
    let grid = Grid::new(setup.n_points, setup.length_scale / lambda)?;
    let u0 = spec.profile(&grid)?;
    let eps = spec.eps();
    let spacing = setup.t_end / setup.samples as f64;
    let long = eps.powi(-6);
    let horizon = spacing * (setup.t_end.max(long) / spacing - 1e-9).ceil();
    let window = spacing * (long.min(horizon) / spacing + 1e-9).floor().max(2.0);

    let (per_sample, dt) = super::drift::fitted_dt(spacing, setup.dt_unit / (lambda * lambda));
    let config = EvolveConfig::new(dt, horizon)?
        .with_scheme(Scheme::IntegratingFactorRk4)
        .with_cadence(per_sample)?
        .with_health(HealthThresholds::default());
    let plan = NonlinearityPlan::new(TrilinearSymbol::real_constant(-2.0), grid)?;
    let mut series = FieldSeries::new();
    let out = run(&u0, &config, &plan, &mut [&mut series])?;
    if let Some(e) = out.state.exit {
        return Err(Error::Precondition(format!(
            "soliton run at lambda = {lambda} exited early ({:?} at t = {})",
            e.reason, e.time
        )));
    }

    let table = (0.0, setup.t_end);
    let l6 = spacetime_l6(&series, table)?;
    let bi = bilinear_strichartz(&series, &Band::Global, &Band::Global, 0.0, table, 0.0, SobolevFlavor::Inhomogeneous)?;
    let at_t = series
        .times()
        .iter()
        .position(|&t| (t - setup.t_end).abs() < 1e-9 * setup.t_end.max(1.0))
        .expect("T is a sample time");
    let u_t = &series.fields()[at_t];
    let exact = spec.exact(&grid, setup.t_end)?;
    let phase = inner(u_t, &u0).arg();

    let ratio_window = (0.0, window);
    let (idx, _) = series.window(ratio_window)?;
    let sup_l2 = idx.iter().map(|&i| series.fields()[i].l2_norm()).fold(0.0, f64::max);
    let l6_w = spacetime_l6(&series, ratio_window)?;
    let bi_w = bilinear_strichartz(
        &series,
        &Band::Global,
        &Band::Global,
        0.0,
        ratio_window,
        -0.5,
        SobolevFlavor::Inhomogeneous,
    )?;

    let reference = SECH6_INTEGRAL * setup.t_end * lambda.powi(5);
    Ok(SolitonRow {
        lambda,
        eps,
        n_points: setup.n_points,
        length: grid.length(),
        dt: out.dt,
        mass: u0.l2_norm_sq(),
        mass_ref: spec.mass(),
        l6_sixth: l6.powi(6),
        l6_ref: reference,
        bilinear_sq: bi * bi,
        bilinear_ref: reference,
        shape_error: u_t.relative_l2_error(&exact),
        phase_error: wrap_phase(phase - spec.phase_velocity() * setup.t_end),
        window,
        ratio_l2: sup_l2 / eps,
        ratio_strichartz: l6_w / eps.powf(2.0 / 3.0),
        ratio_bilinear: bi_w / (eps * eps),
    })
}

/// The table for every `lambda` in the setup, computed in parallel and
/// returned in input order.
pub fn soliton_suite(setup: &SolitonSuiteSetup) -> Result<Vec<SolitonRow>> {
    setup.lambdas.par_iter().map(|&l| soliton_row(l, setup)).collect()
}
