//! Short-horizon drift of the raw and corrected band mass, and the
//! pointwise mass-source identity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::DataFamily;
use super::fit::{fit_line, ScalingFit, MIN_FIT_POINTS};
use super::RowStatus;
use crate::error::{Error, Result};
use crate::evolve::{run, EvolveConfig, HealthThresholds, Scheme, Stepper};
use crate::functionals::{band_mass, quartic_functional, MassMonitor};
use crate::nonlinear::NonlinearityPlan;
use crate::spectral::{inverse_transform, Band, Field, Grid, Spectrum};
use crate::symbols::{check_hypotheses, mass_source_symbol, QuarticCorrection, SampleSpec, TrilinearSymbol};

/// Largest tolerated `sup |Im c(xi, xi, eta)|` for the drift studies.
pub const H2_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DriftSetup {
    pub grid: Grid,
    pub data: DataFamily,
    pub eps: Vec<f64>,
    /// Short horizon `T_s`.
    pub horizon: f64,
    /// Number of equally spaced mass samples on `[0, T_s]`.
    pub samples: usize,
    pub dt: f64,
    pub band: Band,
    /// Mode cutoff of the stored correction symbol.
    pub correction_kmax: i64,
    pub health: HealthThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub eps: f64,
    pub mass0: f64,
    /// `|d/dt M_a|` from the least-squares line through the samples.
    pub raw_rate: f64,
    /// Same for `M#_a`.
    pub corrected_rate: f64,
    /// `|M# - M|` at `t = 0`.
    pub correction_gap: f64,
    pub status: RowStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftOutcome {
    pub symbol: String,
    pub rows: Vec<DriftRow>,
    pub raw: Option<ScalingFit>,
    pub corrected: Option<ScalingFit>,
    /// Sweep values excluded because the run exited early.
    pub excluded: Vec<f64>,
    pub correction_size: f64,
}

fn require_drifting(symbol: &TrilinearSymbol) -> Result<()> {
    if symbol.as_constant().is_some() {
        return Err(Error::Precondition(format!(
            "mass exactly conserved for constant symbol `{}`",
            symbol.label()
        )));
    }
    let rec = check_hypotheses(symbol, &SampleSpec::default())?;
    if rec.h2_violation > H2_TOLERANCE {
        return Err(Error::Precondition(format!(
            "symbol `{}` violates (H2) by {:.3e}",
            symbol.label(),
            rec.h2_violation
        )));
    }
    Ok(())
}

/// Step size dividing `span` into whole steps no longer than `dt`.
pub(crate) fn fitted_dt(span: f64, dt: f64) -> (usize, f64) {
    let n = (span / dt - 1e-9).ceil().max(1.0) as usize;
    (n, span / n as f64)
}

/// Sweep `eps`, measure the short-time drift rates of `M_a` and `M#_a`,
/// and fit both against `eps` in log-log coordinates.
pub fn drift_scaling(symbol: &TrilinearSymbol, setup: &DriftSetup) -> Result<DriftOutcome> {
    require_drifting(symbol)?;
    if setup.samples < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: setup.samples,
        });
    }
    if setup.eps.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewSamples {
            needed: MIN_FIT_POINTS,
            got: setup.eps.len(),
        });
    }
    let grid = setup.grid;
    let plan = NonlinearityPlan::new(symbol.clone(), grid)?;
    let correction = QuarticCorrection::for_symbol(symbol, setup.band, &grid, setup.correction_kmax)?;
    let (per_sample, dt) = fitted_dt(setup.horizon / (setup.samples - 1) as f64, setup.dt);
    let config = EvolveConfig::new(dt, setup.horizon)?
        .with_cadence(per_sample)?
        .with_health(setup.health);

    let rows: Vec<DriftRow> = setup
        .eps
        .par_iter()
        .map(|&eps| -> Result<DriftRow> {
            let u0 = setup.data.sample(&grid, eps)?;
            let mut monitor = MassMonitor::new(correction.clone());
            let out = run(&u0, &config, &plan, &mut [&mut monitor])?;
            let status = RowStatus::from_run(&out.state);
            let (raw_rate, corrected_rate) = if status.is_complete() {
                (
                    fit_line(&monitor.times, &monitor.mass)?.slope.abs(),
                    fit_line(&monitor.times, &monitor.corrected)?.slope.abs(),
                )
            } else {
                (f64::NAN, f64::NAN)
            };
            Ok(DriftRow {
                eps,
                mass0: monitor.mass[0],
                raw_rate,
                corrected_rate,
                correction_gap: (monitor.corrected[0] - monitor.mass[0]).abs(),
                status,
            })
        })
        .collect::<Result<_>>()?;

    let kept: Vec<&DriftRow> = rows.iter().filter(|r| r.status.is_complete()).collect();
    let excluded = rows.iter().filter(|r| !r.status.is_complete()).map(|r| r.eps).collect();
    let x: Vec<f64> = kept.iter().map(|r| r.eps).collect();
    let fit = |y: Vec<f64>| ScalingFit::new(&x, &y).ok();
    let raw = fit(kept.iter().map(|r| r.raw_rate).collect());
    let corrected = fit(kept.iter().map(|r| r.corrected_rate).collect());
    Ok(DriftOutcome {
        symbol: symbol.label().to_string(),
        rows,
        raw,
        corrected,
        excluded,
        correction_size: correction.size_constant,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceCheck {
    /// Quartic source functional at `u0`.
    pub predicted: f64,
    /// Richardson-extrapolated centred difference of `M_a`.
    pub measured: f64,
    /// Centred differences at `h` and `h / 2`.
    pub differences: [f64; 2],
    pub relative_error: f64,
}

fn centred_mass_derivative(plan: &NonlinearityPlan, u0: &Field, band: &Band, h: f64, substeps: usize) -> Result<f64> {
    let mass_after = |dt: f64| -> Result<f64> {
        let mut coeffs = u0.spectrum().to_vec();
        let mut stepper = Stepper::new(plan, Scheme::IntegratingFactorRk4, dt)?;
        for _ in 0..substeps {
            stepper.advance(&mut coeffs);
        }
        let u = inverse_transform(&Spectrum::new(*u0.grid(), coeffs)?)?;
        Ok(band_mass(&u, band))
    };
    let step = h / substeps as f64;
    Ok((mass_after(step)? - mass_after(-step)?) / (2.0 * h))
}

/// Compare `d/dt M_a` at `t = 0` with the quartic source functional built
/// from `c`. The derivative is a centred difference at `h` and `h / 2`,
/// combined by Richardson extrapolation.
pub fn mass_source_check(
    symbol: &TrilinearSymbol,
    u0: &Field,
    band: &Band,
    kmax: i64,
    h: f64,
) -> Result<SourceCheck> {
    let grid = *u0.grid();
    let plan = NonlinearityPlan::new(symbol.clone(), grid)?;
    let c4 = mass_source_symbol(symbol, band, &grid, kmax)?;
    let predicted = quartic_functional(u0, &c4)?;
    let coarse = centred_mass_derivative(&plan, u0, band, h, 4)?;
    let fine = centred_mass_derivative(&plan, u0, band, 0.5 * h, 4)?;
    let measured = (4.0 * fine - coarse) / 3.0;
    let scale = predicted.abs().max(f64::MIN_POSITIVE);
    Ok(SourceCheck {
        predicted,
        measured,
        differences: [coarse, fine],
        relative_error: (measured - predicted).abs() / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const SYMBOL: &str = "separable:-1|1|1|1;0.5|sech(x/3)|sech(x/3)|sech(x/3)";

    fn setup(n: usize) -> DriftSetup {
        DriftSetup {
            grid: Grid::new(n, 2.0 * PI).unwrap(),
            data: DataFamily::RandomModes { kmax: 5, seed: 1, decay: 0.0 },
            eps: vec![0.2, 0.3, 0.45, 0.65, 0.8],
            horizon: 1.0,
            samples: 5,
            dt: 0.005,
            band: Band::Global,
            correction_kmax: 16,
            health: HealthThresholds::default(),
        }
    }

    #[test]
    fn quartic_then_sextic_drift() {
        let c = TrilinearSymbol::parse(SYMBOL).unwrap();
        let out = drift_scaling(&c, &setup(128)).unwrap();
        assert!(out.excluded.is_empty());
        let raw = out.raw.unwrap();
        let cor = out.corrected.unwrap();
        assert!((raw.slope - 4.0).abs() < 0.2, "raw slope {}", raw.slope);
        assert!(cor.slope > raw.slope + 1.5, "corrected slope {}", cor.slope);
        for r in &out.rows {
            assert!((r.mass0 - r.eps * r.eps).abs() < 1e-12);
            assert!(r.corrected_rate < r.raw_rate);
        }
    }

    #[test]
    fn constant_symbol_refused() {
        let c = TrilinearSymbol::real_constant(-2.0);
        match drift_scaling(&c, &setup(64)) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("mass exactly conserved")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn h2_violation_refused() {
        let c = TrilinearSymbol::parse("expr:1;0.1*x1").unwrap();
        assert!(matches!(drift_scaling(&c, &setup(64)), Err(Error::Precondition(_))));
    }

    #[test]
    fn early_exit_excludes_point() {
        let c = TrilinearSymbol::parse(SYMBOL).unwrap();
        let mut s = setup(64);
        s.eps = vec![0.2, 0.3, 0.45, 0.65, 0.8];
        // A tail tolerance no run can meet.
        s.health.tail_fraction = Some(1e-30);
        let out = drift_scaling(&c, &s).unwrap();
        assert_eq!(out.rows.len(), 5);
        assert!(!out.excluded.is_empty());
        for r in &out.rows {
            if !r.status.is_complete() {
                assert!(r.raw_rate.is_nan());
            }
        }
    }

    #[test]
    fn source_identity_matches_difference_quotient() {
        let c = TrilinearSymbol::parse(SYMBOL).unwrap();
        let grid = Grid::new(64, 2.0 * PI).unwrap();
        for seed in 1..4 {
            let u0 = DataFamily::RandomModes { kmax: 5, seed, decay: 0.0 }.sample(&grid, 0.5).unwrap();
            for band in [Band::Global, Band::Interval { lo: -2, hi: 1 }] {
                let chk = mass_source_check(&c, &u0, &band, 8, 0.002).unwrap();
                assert!(chk.relative_error < 1e-6, "{band:?} seed {seed}: {chk:?}");
            }
        }
    }
}
