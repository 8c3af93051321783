use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Minimum number of sweep points behind any reported slope.
pub const MIN_FIT_POINTS: usize = 4;

/// Least-squares line with the 95% confidence half-width of its slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub half_width: f64,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::InvalidConfig("fit inputs differ in length".into()));
    }
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidConfig("fit needs at least two distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let half_width = if n > 2 {
        let se = (rss / (nf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 2.0)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        t * se
    } else {
        f64::INFINITY
    };
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - rss / syy };
    Ok(LineFit {
        slope,
        intercept,
        half_width,
        r_squared,
    })
}

/// Power-law fit `y ~ A x^p` in log-log coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub slope: f64,
    pub prefactor: f64,
    pub half_width: f64,
    pub r_squared: f64,
}

impl ScalingFit {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() < MIN_FIT_POINTS {
            return Err(Error::TooFewSamples {
                needed: MIN_FIT_POINTS,
                got: x.len(),
            });
        }
        if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Precondition("power-law fit needs positive finite data".into()));
        }
        let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        let line = fit_line(&lx, &ly)?;
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            slope: line.slope,
            prefactor: line.intercept.exp(),
            half_width: line.half_width,
            r_squared: line.r_squared,
        })
    }

    pub fn contains(&self, target: f64, tolerance: f64) -> bool {
        (self.slope - target).abs() <= tolerance
    }
}
