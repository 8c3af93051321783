use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::resonance::{resonance_data, FreqQuadruple};

/// Thresholds realizing the three overlapping division regions.
///
/// * `chi1` lives where `med <= omega1_med` and vanishes once
///   `med >= omega1_med + ramp_width`;
/// * `chi2` needs `med > omega2_factor * (1 + |d4|)`; its ramp is three
///   times wider because `med - 2(1 + |d4|)` moves up to three times as
///   fast as `med` under a perturbation of the quadruple;
/// * `chi3` takes the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionThresholds {
    pub omega1_med: f64,
    pub omega2_factor: f64,
    pub ramp_width: f64,
}

impl Default for RegionThresholds {
    fn default() -> Self {
        Self {
            omega1_med: 4.0,
            omega2_factor: 2.0,
            ramp_width: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionWeights {
    pub chi1: f64,
    pub chi2: f64,
    pub chi3: f64,
}

/// C^1 ramp: 0 for `t <= 0`, 1 for `t >= width`, `sin^2` in between.
fn ramp(t: f64, width: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= width {
        1.0
    } else {
        let s = (FRAC_PI_2 * t / width).sin();
        s * s
    }
}

pub fn region_weights(q: FreqQuadruple) -> RegionWeights {
    region_weights_with(q, &RegionThresholds::default())
}

pub fn region_weights_with(q: FreqQuadruple, th: &RegionThresholds) -> RegionWeights {
    let r = resonance_data(q);
    let z1 = 1.0 - ramp(r.med - th.omega1_med, th.ramp_width);
    let z2 = ramp(
        r.med - th.omega2_factor * (1.0 + r.d4.abs()),
        3.0 * th.ramp_width,
    );
    let chi1 = z1;
    let chi2 = (1.0 - z1) * z2;
    RegionWeights {
        chi1,
        chi2,
        chi3: 1.0 - chi1 - chi2,
    }
}
