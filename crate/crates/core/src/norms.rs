//! Space-time norms, Sobolev and sum-space norms, bilinear Strichartz
//! functionals, maximal frequency envelopes and the bootstrap audit.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{Diagnostic, Snapshot};
use crate::spectral::{band_project, derivative, localize, Band, Field};

/// Admissibility limit `C` in `Mc <= C c` used throughout.
pub const ENVELOPE_LIMIT: f64 = 3.0;

/// Default envelope decay exponent.
pub const ENVELOPE_DELTA: f64 = 0.75;

/// Time-ordered samples of a solution on one grid.
#[derive(Debug, Clone, Default)]
pub struct FieldSeries {
    times: Vec<f64>,
    fields: Vec<Field>,
}

impl FieldSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: f64, field: Field) -> Result<()> {
        if let Some(first) = self.fields.first() {
            if first.grid() != field.grid() {
                return Err(Error::GridMismatch {
                    expected: first.grid().n_points(),
                    got: field.grid().n_points(),
                });
            }
        }
        if self.times.last().is_some_and(|&t| time <= t) {
            return Err(Error::InvalidConfig("series times must increase".into()));
        }
        self.times.push(time);
        self.fields.push(field);
        Ok(())
    }

    /// Constant-in-time series: `field` repeated at `times`.
    pub fn frozen(field: &Field, times: &[f64]) -> Result<Self> {
        let mut s = Self::new();
        for &t in times {
            s.push(t, field.clone())?;
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    /// Indices with `t0 <= t <= t1` (up to rounding) and their trapezoidal
    /// weights; at least three samples are required.
    pub fn window(&self, interval: (f64, f64)) -> Result<(Vec<usize>, Vec<f64>)> {
        let (t0, t1) = interval;
        let slack = 1e-9 * (t1 - t0).abs().max(1.0);
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| self.times[i] >= t0 - slack && self.times[i] <= t1 + slack)
            .collect();
        if idx.len() < 3 {
            return Err(Error::TooFewSamples {
                needed: 3,
                got: idx.len(),
            });
        }
        let t: Vec<f64> = idx.iter().map(|&i| self.times[i]).collect();
        Ok((idx, trapezoid_weights(&t)))
    }

    /// The full time span.
    pub fn span(&self) -> (f64, f64) {
        (
            self.times.first().copied().unwrap_or(0.0),
            self.times.last().copied().unwrap_or(0.0),
        )
    }
}

impl Diagnostic for FieldSeries {
    fn observe(&mut self, snapshot: &Snapshot<'_>) {
        self.push(snapshot.time, snapshot.field.clone())
            .expect("snapshots arrive in time order on one grid");
    }
}

pub fn trapezoid_weights(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (t[i + 1] - t[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

fn l6_sixth(f: &Field) -> f64 {
    f.values().iter().map(|v| v.norm_sqr().powi(3)).sum::<f64>() * f.grid().dx()
}

/// `||u||_{L^6_{t,x}(interval)}` with trapezoidal time weights.
pub fn spacetime_l6(series: &FieldSeries, interval: (f64, f64)) -> Result<f64> {
    let (idx, w) = series.window(interval)?;
    let total: f64 = idx
        .par_iter()
        .zip(&w)
        .map(|(&i, &wt)| wt * l6_sixth(&series.fields[i]))
        .sum();
    Ok(total.powf(1.0 / 6.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SobolevFlavor {
    /// Weight `<xi>^s`.
    Inhomogeneous,
    /// Weight `|xi|^s`; for `s < 0` the zero mode must vanish unless it
    /// is explicitly dropped.
    Homogeneous { drop_zero_mode: bool },
    /// Sum space `H^s-dot + c L^2`, whose squared weight is the harmonic
    /// combination `(|xi|^{-2s} + c^2)^{-1}`.
    Sum { c: f64 },
}

/// Squared spectral weight of the flavor at frequency `xi`.
pub fn sobolev_weight_sq(xi: f64, s: f64, flavor: SobolevFlavor) -> f64 {
    match flavor {
        SobolevFlavor::Inhomogeneous => (1.0 + xi * xi).powf(s),
        SobolevFlavor::Homogeneous { .. } => {
            if xi == 0.0 {
                if s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                xi.abs().powf(2.0 * s)
            }
        }
        SobolevFlavor::Sum { c } => {
            let x = if xi == 0.0 {
                if s > 0.0 {
                    f64::INFINITY
                } else if s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                xi.abs().powf(-2.0 * s)
            };
            1.0 / (x + c * c)
        }
    }
}

pub fn sobolev_norm(f: &Field, s: f64, flavor: SobolevFlavor) -> Result<f64> {
    let grid = f.grid();
    let spec = f.spectrum();
    match flavor {
        SobolevFlavor::Homogeneous { drop_zero_mode: false } if s < 0.0 => {
            let zero = spec[0].norm();
            let scale = spec.iter().map(|c| c.norm()).fold(0.0, f64::max);
            if zero > 1e-13 * scale {
                return Err(Error::InvalidConfig(format!(
                    "homogeneous norm with s = {s} needs a vanishing zero mode (|u^(0)| = {zero:.3e})"
                )));
            }
        }
        SobolevFlavor::Sum { c } if !(c > 0.0 && c.is_finite()) => {
            return Err(Error::InvalidConfig(format!("sum-space constant must be positive, got {c}")));
        }
        _ => {}
    }
    let total: f64 = spec
        .iter()
        .enumerate()
        .map(|(j, c)| sobolev_weight_sq(grid.frequency(j), s, flavor) * c.norm_sqr())
        .sum();
    Ok((total * grid.dk()).sqrt())
}

/// `d/dx (u_A conj(u_B(. + x0)))` on the twice refined grid.
pub fn bilinear_profile(u: &Field, band_a: &Band, band_b: &Band, x0: f64) -> Field {
    let ua = localize(u, band_a).refined(2);
    let mut ub = localize(u, band_b);
    if x0 != 0.0 {
        ub = ub.translate(x0);
    }
    let ub = ub.refined(2);
    let prod = ua
        .values()
        .iter()
        .zip(ub.values())
        .map(|(a, b)| a * b.conj())
        .collect();
    derivative(&Field::new(*ua.grid(), prod).expect("product of finite fields"))
}

/// `|| d/dx (u_A conj(u_B(. + x0))) ||_{L^2_t(interval; X)}` with `X` the
/// Sobolev space `(s, flavor)`.
pub fn bilinear_strichartz(
    series: &FieldSeries,
    band_a: &Band,
    band_b: &Band,
    x0: f64,
    interval: (f64, f64),
    s: f64,
    flavor: SobolevFlavor,
) -> Result<f64> {
    let (idx, w) = series.window(interval)?;
    let values: Result<Vec<f64>> = idx
        .par_iter()
        .map(|&i| {
            let p = bilinear_profile(&series.fields[i], band_a, band_b, x0);
            let flavor = match flavor {
                SobolevFlavor::Homogeneous { .. } => SobolevFlavor::Homogeneous { drop_zero_mode: true },
                f => f,
            };
            sobolev_norm(&p, s, flavor)
        })
        .collect();
    Ok(values?.iter().zip(&w).map(|(v, wt)| wt * v * v).sum::<f64>().sqrt())
}

/// Maximal frequency envelope over the data bands `k_min .. k_min + len`.
///
/// The starting profile is `c0_k = max_j (d_j / eps) (1 + |k - j|)^{-delta}`.
/// Where `M c0 <= C c0` fails, `c` is the smallest fixed point of
/// `c = max(c0, M c / C)`, which dominates `c0` and satisfies the maximal
/// bound by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub k_min: i64,
    pub values: Vec<f64>,
    pub delta: f64,
    pub eps: f64,
    /// Measured `max_k (Mc)_k / c_k` over the data bands.
    pub admissibility: f64,
    /// Same ratio for the starting profile `c0`.
    pub base_admissibility: f64,
    /// Data bands where `c` was raised above `c0`.
    pub raised: usize,
    pub limit: f64,
    scaled: Vec<f64>,
    pad_lo: i64,
    padded: Vec<f64>,
}

impl Envelope {
    pub fn k_max(&self) -> i64 {
        self.k_min + self.values.len() as i64 - 1
    }

    /// `c_k` for any band; beyond the padded range the decay formula
    /// continues.
    pub fn value(&self, k: i64) -> f64 {
        match usize::try_from(k - self.pad_lo).ok().and_then(|i| self.padded.get(i)) {
            Some(&c) => c,
            None => envelope_at(&self.scaled, self.k_min, self.delta, k),
        }
    }

    /// `||c||_{l2} / ||d / eps||_{l2}` over the data bands.
    pub fn l2_ratio(&self) -> f64 {
        let num: f64 = self.values.iter().map(|c| c * c).sum();
        let den: f64 = self.scaled.iter().map(|d| d * d).sum();
        (num / den).sqrt()
    }
}

fn envelope_at(scaled: &[f64], k_min: i64, delta: f64, k: i64) -> f64 {
    scaled
        .iter()
        .enumerate()
        .map(|(i, &d)| d * (1.0 + (k - k_min - i as i64).abs() as f64).powf(-delta))
        .fold(0.0, f64::max)
}

/// Padding on each side of the data bands for maximal windows.
fn envelope_pad(width: usize) -> i64 {
    2 * width as i64 + 64
}

/// Centred maximal averages `(Mc)_i` with windows inside the array.
fn maximal_averages(c: &[f64]) -> Vec<f64> {
    let mut prefix = vec![0.0; c.len() + 1];
    for (i, v) in c.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    let n = c.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            (0..=i.min(n - 1 - i))
                .map(|r| (prefix[i + r + 1] - prefix[i - r]) / (2 * r + 1) as f64)
                .fold(0.0, f64::max)
        })
        .collect()
}

fn ratio_over(c: &[f64], range: std::ops::Range<usize>) -> f64 {
    let avg = maximal_averages(c);
    range
        .map(|i| if c[i] == 0.0 { 0.0 } else { avg[i] / c[i] })
        .fold(0.0, f64::max)
}

/// Measured `max_k (M c0)_k / c0_k` over the data bands for the decay
/// profile `c0`, with `M` the centred lattice maximal function. Windows
/// stay inside a padded range on which `c0` follows its formula.
pub fn maximal_ratio(scaled: &[f64], k_min: i64, delta: f64) -> f64 {
    let pad = envelope_pad(scaled.len());
    let c0: Vec<f64> = (k_min - pad..k_min + scaled.len() as i64 + pad)
        .into_par_iter()
        .map(|k| envelope_at(scaled, k_min, delta, k))
        .collect();
    ratio_over(&c0, pad as usize..pad as usize + scaled.len())
}

/// Fixed-point sweeps allowed when raising `c0`; each sweep contracts by
/// `1 / limit` in the sup norm.
const ENVELOPE_SWEEPS: usize = 200;

/// Build the envelope of band masses `d` (indexed from `k_min`) at size
/// `eps`; fails if the result is not admissible or does not dominate.
pub fn build_envelope(d: &[f64], k_min: i64, eps: f64, delta: f64) -> Result<Envelope> {
    if !(eps > 0.0) || d.is_empty() || d.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidConfig("envelope needs eps > 0 and finite nonnegative masses".into()));
    }
    let scaled: Vec<f64> = d.iter().map(|v| v / eps).collect();
    let pad = envelope_pad(d.len());
    let pad_lo = k_min - pad;
    let data = pad as usize..pad as usize + d.len();
    let c0: Vec<f64> = (pad_lo..k_min + d.len() as i64 + pad)
        .into_par_iter()
        .map(|k| envelope_at(&scaled, k_min, delta, k))
        .collect();
    let base_admissibility = ratio_over(&c0, data.clone());
    let mut c = c0.clone();
    for _ in 0..ENVELOPE_SWEEPS {
        let next: Vec<f64> = maximal_averages(&c)
            .iter()
            .zip(&c0)
            .map(|(m, b)| b.max(m / ENVELOPE_LIMIT))
            .collect();
        if next == c {
            break;
        }
        c = next;
    }
    let values = c[data.clone()].to_vec();
    for (i, (&dv, &ck)) in d.iter().zip(&values).enumerate() {
        if dv > eps * ck * (1.0 + 1e-12) {
            return Err(Error::EnvelopeDomination { band: k_min + i as i64 });
        }
    }
    let admissibility = ratio_over(&c, data.clone());
    if admissibility > ENVELOPE_LIMIT * (1.0 + 1e-12) {
        return Err(Error::EnvelopeNotAdmissible {
            constant: admissibility,
            limit: ENVELOPE_LIMIT,
        });
    }
    let raised = data.clone().filter(|&i| c[i] > c0[i]).count();
    Ok(Envelope {
        k_min,
        values,
        delta,
        eps,
        admissibility,
        base_admissibility,
        raised,
        limit: ENVELOPE_LIMIT,
        scaled,
        pad_lo,
        padded: c,
    })
}

/// `||P_k u||_{L^2}` for `k` in `k_min ..= k_max`.
pub fn band_masses(u: &Field, k_min: i64, k_max: i64) -> Result<Vec<f64>> {
    (k_min..=k_max).map(|k| Ok(band_project(u, k)?.l2_norm())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// `||u_k||_{L^inf L^2} <~ eps c_k`
    UkEnergy,
    /// `||u_k||_{L^6} <~ (eps c_k)^{2/3}`
    UkStrichartz,
    /// `||d_x |u_k|^2||_{L^2} <~ eps^2 c_k^2`
    UkBilinear,
    /// `||d_x (u_A conj u_B(. + x0))||_{L^2} <~ eps^2 c_A c_B <dist>^{1/2}`
    PairBilinear,
}

impl BoundKind {
    pub fn label(&self) -> &'static str {
        match self {
            BoundKind::UkEnergy => "uk-ee",
            BoundKind::UkStrichartz => "uk-se",
            BoundKind::UkBilinear => "uk-bi",
            BoundKind::PairBilinear => "uab-bi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub bound: BoundKind,
    pub k1: i64,
    pub k2: i64,
    pub measured: f64,
    pub claimed: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSpec {
    pub bands: Vec<i64>,
    pub pairs: Vec<(i64, i64)>,
    pub x0: f64,
}

/// Measured-over-claimed ratios of the bootstrap bounds over the whole
/// series. Ratios are reported, never judged.
pub fn audit_bootstrap(series: &FieldSeries, envelope: &Envelope, eps: f64, spec: &AuditSpec) -> Result<Vec<AuditRow>> {
    let interval = series.span();
    let (idx, w) = series.window(interval)?;
    let mut rows = Vec::new();
    for &k in &spec.bands {
        let band = Band::single(k);
        let ck = envelope.value(k);
        let proj: Vec<Field> = idx
            .par_iter()
            .map(|&i| band_project(&series.fields[i], k))
            .collect::<Result<_>>()?;
        let sup_l2 = proj.iter().map(|f| f.l2_norm()).fold(0.0, f64::max);
        let l6 = proj.iter().zip(&w).map(|(f, wt)| wt * l6_sixth(f)).sum::<f64>().powf(1.0 / 6.0);
        let bi = bilinear_strichartz(series, &band, &band, 0.0, interval, 0.0, SobolevFlavor::Inhomogeneous)?;
        for (bound, measured, claimed) in [
            (BoundKind::UkEnergy, sup_l2, eps * ck),
            (BoundKind::UkStrichartz, l6, (eps * ck).powf(2.0 / 3.0)),
            (BoundKind::UkBilinear, bi, (eps * ck).powi(2)),
        ] {
            rows.push(AuditRow {
                bound,
                k1: k,
                k2: k,
                measured,
                claimed,
                ratio: measured / claimed,
            });
        }
    }
    for &(k1, k2) in &spec.pairs {
        let (a, b) = (Band::single(k1), Band::single(k2));
        let measured = bilinear_strichartz(series, &a, &b, spec.x0, interval, 0.0, SobolevFlavor::Inhomogeneous)?;
        let dist = a.distance(&b);
        let claimed = eps * eps * envelope.value(k1) * envelope.value(k2) * (1.0 + dist * dist).sqrt().sqrt();
        rows.push(AuditRow {
            bound: BoundKind::PairBilinear,
            k1,
            k2,
            measured,
            claimed,
            ratio: measured / claimed,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationEntry {
    pub band: i64,
    /// `None` when a denominator factor vanishes or `|u_k|^2` is flat.
    pub constant: Option<f64>,
}

/// Relative size of `||d_x v||` below which `v` counts as flat.
const FLAT_TOLERANCE: f64 = 1e-9;

/// Composite constant of the interpolation chain for `v = |u_k|^2`:
/// `||v||_{L^3_{t,x}} / (T^{1/9} ||v||_{L^inf L^1}^{5/9} ||v||_{L^2 H^1-dot}^{4/9})`.
pub fn interpolation_constant(series: &FieldSeries, band: &Band, interval: (f64, f64)) -> Result<Option<f64>> {
    let (idx, w) = series.window(interval)?;
    let t = interval.1 - interval.0;
    let parts: Vec<[f64; 4]> = idx
        .par_iter()
        .map(|&i| {
            let f = localize(&series.fields[i], band).refined(2);
            let v: Vec<Complex64> = f.values().iter().map(|z| Complex64::new(z.norm_sqr(), 0.0)).collect();
            let dx = f.grid().dx();
            let l1 = v.iter().map(|z| z.re).sum::<f64>() * dx;
            let l3 = v.iter().map(|z| z.re.powi(3)).sum::<f64>() * dx;
            let vf = Field::new(*f.grid(), v).expect("finite");
            [l1, l3, derivative(&vf).l2_norm_sq(), vf.l2_norm_sq()]
        })
        .collect();
    let sup_l1 = parts.iter().map(|p| p[0]).fold(0.0, f64::max);
    let l3 = parts.iter().zip(&w).map(|(p, wt)| wt * p[1]).sum::<f64>().cbrt();
    let h1 = parts.iter().zip(&w).map(|(p, wt)| wt * p[2]).sum::<f64>().sqrt();
    let l2 = parts.iter().zip(&w).map(|(p, wt)| wt * p[3]).sum::<f64>().sqrt();
    // |u_k|^2 of a single Fourier mode is flat; its H^1 norm is round-off.
    let flat = h1 <= FLAT_TOLERANCE * series.fields[0].grid().dk() * l2;
    let den = t.powf(1.0 / 9.0) * sup_l1.powf(5.0 / 9.0) * h1.powf(4.0 / 9.0);
    if den <= f64::MIN_POSITIVE || sup_l1 == 0.0 || flat {
        return Ok(None);
    }
    Ok(Some(l3 / den))
}

pub fn interpolation_audit(series: &FieldSeries, bands: &[i64], interval: (f64, f64)) -> Result<Vec<InterpolationEntry>> {
    bands
        .iter()
        .map(|&k| {
            Ok(InterpolationEntry {
                band: k,
                constant: interpolation_constant(series, &Band::single(k), interval)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Grid, Spectrum};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(grid: Grid, kmax: i64, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..grid.n_points())
            .map(|j| {
                if grid.mode(j).abs() <= kmax {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        crate::spectral::inverse_transform(&Spectrum::new(grid, coeffs).unwrap()).unwrap()
    }

    fn times(n: usize, t: f64) -> Vec<f64> {
        (0..n).map(|i| t * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn l6_of_zero_and_too_few_samples() {
        let g = Grid::new(32, 10.0).unwrap();
        let s = FieldSeries::frozen(&Field::zeros(g), &times(5, 1.0)).unwrap();
        assert_eq!(spacetime_l6(&s, (0.0, 1.0)).unwrap(), 0.0);
        let s = FieldSeries::frozen(&Field::zeros(g), &times(2, 1.0)).unwrap();
        assert!(matches!(spacetime_l6(&s, (0.0, 1.0)), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn frozen_soliton_l6() {
        let lam = 0.5;
        let g = Grid::new(1024, 200.0).unwrap();
        let q = Field::from_real_fn(g, |x| lam / (lam * x).cosh()).unwrap();
        let t = 10.0;
        let s = FieldSeries::frozen(&q, &times(11, t)).unwrap();
        let v6 = spacetime_l6(&s, (0.0, t)).unwrap().powi(6);
        let expected = t * lam.powi(5) * 16.0 / 15.0;
        assert!((v6 / expected - 1.0).abs() < 1e-4);
        // separability
        let l6x = l6_sixth(&q).powf(1.0 / 6.0);
        assert!((v6.powf(1.0 / 6.0) - t.powf(1.0 / 6.0) * l6x).abs() < 1e-12);
    }

    #[test]
    fn sobolev_single_mode_weights() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let u = Field::from_fn(g, |x| Complex64::from_polar(1.0, 4.0 * x)).unwrap();
        let l2 = u.l2_norm();
        let h = sobolev_norm(&u, -0.5, SobolevFlavor::Inhomogeneous).unwrap();
        assert!((h - 17f64.powf(-0.25) * l2).abs() < 1e-12);
        let s = sobolev_norm(&u, -0.5, SobolevFlavor::Sum { c: 1.0 }).unwrap();
        assert!((s * s - 0.2 * l2 * l2).abs() < 1e-12);
        let r = random_field(g, 20, 1);
        assert!((sobolev_norm(&r, 0.0, SobolevFlavor::Inhomogeneous).unwrap() - r.l2_norm()).abs() < 1e-12 * r.l2_norm());
    }

    #[test]
    fn homogeneous_rejects_zero_mode() {
        let g = Grid::new(32, 2.0 * PI).unwrap();
        let u = random_field(g, 5, 2);
        assert!(sobolev_norm(&u, -0.5, SobolevFlavor::Homogeneous { drop_zero_mode: false }).is_err());
        assert!(sobolev_norm(&u, -0.5, SobolevFlavor::Homogeneous { drop_zero_mode: true }).is_ok());
        assert!(sobolev_norm(&u, 1.0, SobolevFlavor::Homogeneous { drop_zero_mode: false }).is_ok());
    }

    #[test]
    fn sum_norm_below_each_summand() {
        let g = Grid::new(64, 30.0).unwrap();
        let u = random_field(g, 25, 3);
        let c = 0.7;
        let zero_free = crate::spectral::apply_real_multiplier(&u, |xi| if xi == 0.0 { 0.0 } else { 1.0 });
        let sum = sobolev_norm(&zero_free, -0.5, SobolevFlavor::Sum { c }).unwrap();
        let hom = sobolev_norm(&zero_free, -0.5, SobolevFlavor::Homogeneous { drop_zero_mode: false }).unwrap();
        assert!(sum <= hom + 1e-14);
        assert!(sum <= zero_free.l2_norm() / c + 1e-14);
        for xi in [0.0, 0.1, 1.0, 7.5] {
            let w = sobolev_weight_sq(xi, -0.5, SobolevFlavor::Sum { c });
            assert!(w <= 1.0 / (c * c) + 1e-15);
            if xi > 0.0 {
                assert!(w <= 1.0 / xi + 1e-15);
            }
        }
    }

    #[test]
    fn bilinear_two_modes() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let (k1, k2) = (3.0, -2.0);
        let u = Field::from_fn(g, |x| Complex64::from_polar(1.0, k1 * x) + Complex64::from_polar(1.0, k2 * x)).unwrap();
        let (a, b) = (Band::single(3), Band::single(-2));
        let p = bilinear_profile(&u, &a, &b, 0.0);
        let d = k1 - k2;
        // |u_A conj u_B| = 1 pointwise, so its L2 mass is the torus length.
        let expected = d * (1.0 + d * d).powf(-0.25) * (2.0 * PI).sqrt();
        let got = sobolev_norm(&p, -0.5, SobolevFlavor::Inhomogeneous).unwrap();
        assert!((got - expected).abs() < 1e-10 * expected);
        let s = FieldSeries::frozen(&u, &times(5, 2.0)).unwrap();
        let empty = bilinear_strichartz(&s, &a, &Band::single(10), 0.0, (0.0, 2.0), -0.5, SobolevFlavor::Inhomogeneous).unwrap();
        assert!(empty < 1e-12);
    }

    #[test]
    fn bilinear_swap_symmetry() {
        let g = Grid::new(128, 30.0).unwrap();
        let u = random_field(g, 12, 5);
        let s = FieldSeries::frozen(&u, &times(4, 1.0)).unwrap();
        let (a, b) = (Band::Interval { lo: 0, hi: 2 }, Band::Interval { lo: -3, hi: -1 });
        let x0 = 1.7;
        let ab = bilinear_strichartz(&s, &a, &b, x0, (0.0, 1.0), -0.5, SobolevFlavor::Inhomogeneous).unwrap();
        let ba = bilinear_strichartz(&s, &b, &a, -x0, (0.0, 1.0), -0.5, SobolevFlavor::Inhomogeneous).unwrap();
        assert!((ab - ba).abs() < 1e-10 * ab);
    }

    #[test]
    fn spike_envelope() {
        let mut d = vec![0.0; 1025];
        d[512] = 1.0;
        let env = build_envelope(&d, -512, 1.0, ENVELOPE_DELTA).unwrap();
        for k in [-512, -3, 0, 7, 512] {
            let expect = (1.0 + (k as f64).abs()).powf(-0.75);
            assert!((env.value(k) - expect).abs() < 1e-15);
        }
        assert!(env.admissibility <= 3.0);
        assert!(env.l2_ratio() <= 4.0);
    }

    #[test]
    fn dipped_profile_is_raised_to_admissibility() {
        // Random band masses with scattered deep dips; the bare decay
        // profile has maximal constant about 3.16 here.
        let d = vec![
            0.9854694171951963, 0.00019322751989469205, 0.09456218536683667, 0.32176256267660963, 0.6813189429787757,
            0.2654725643371263, 0.4797818361600601, 0.000494896297564416, 0.1931619097830442, 0.006239631747375508,
            0.502887156771667, 0.2057156136459537, 0.008073640379031083, 0.1289692205217647, 0.018311249528237233,
            0.07765593222219308, 0.07979738475414437, 0.10918110061304667, 0.4221405710267959, 0.46416868528937255,
            0.09936746778726657, 0.00858618544097484, 0.5493554275814359, 0.8924724780727562, 0.46390848000977103,
            0.9341635265652993, 4.084912719518306e-6, 0.39577530224809077, 0.8828396401063359, 0.8876744034321356,
            0.9171198408714896, 0.7703700414979321, 0.9785398236694777, 0.8551559523474122, 6.059058499942618e-8,
            0.6885762646607594,
        ];
        let base = maximal_ratio(&d, 0, ENVELOPE_DELTA);
        let env = build_envelope(&d, 0, 1.0, ENVELOPE_DELTA).unwrap();
        assert!(base > ENVELOPE_LIMIT, "{base}");
        assert_eq!(env.base_admissibility, base);
        assert!(env.raised > 0);
        assert!(env.admissibility <= ENVELOPE_LIMIT * (1.0 + 1e-12));
        for (i, (dv, c)) in d.iter().zip(&env.values).enumerate() {
            assert!(*dv <= *c, "band {i}");
            assert!(*c >= envelope_at(&d, 0, ENVELOPE_DELTA, i as i64));
        }
        assert!(env.l2_ratio() < 2.0);
    }

    #[test]
    fn flat_block_envelope() {
        let d = vec![1.0; 5];
        let env = build_envelope(&d, -2, 1.0, ENVELOPE_DELTA).unwrap();
        assert!(env.values.iter().all(|&c| (c - 1.0).abs() < 1e-15));
        assert!((env.value(5) - 4f64.powf(-0.75)).abs() < 1e-15);
    }

    #[test]
    fn linear_flow_energy_ratios_bounded() {
        use crate::evolve::{run, EvolveConfig};
        use crate::nonlinear::NonlinearityPlan;
        use crate::symbols::TrilinearSymbol;
        let g = Grid::new(256, 60.0).unwrap();
        let u0 = Field::from_fn(g, |x| Complex64::from_polar((-x * x / 8.0).exp(), 1.5 * x)).unwrap();
        let eps = u0.l2_norm();
        let masses = band_masses(&u0, -6, 6).unwrap();
        let env = build_envelope(&masses, -6, eps, ENVELOPE_DELTA).unwrap();
        let plan = NonlinearityPlan::new(TrilinearSymbol::real_constant(0.0), g).unwrap();
        let mut series = FieldSeries::new();
        let cfg = EvolveConfig::new(0.05, 2.0).unwrap().with_cadence(4).unwrap();
        run(&u0, &cfg, &plan, &mut [&mut series]).unwrap();
        let spec = AuditSpec {
            bands: (-2..=4).collect(),
            pairs: vec![(0, 2), (1, 3)],
            x0: 0.0,
        };
        let rows = audit_bootstrap(&series, &env, eps, &spec).unwrap();
        for r in rows.iter().filter(|r| r.bound == BoundKind::UkEnergy) {
            assert!(r.ratio <= 1.0 + 1e-10, "{r:?}");
        }
        assert!(rows.iter().all(|r| r.ratio.is_finite()));
    }

    #[test]
    fn interpolation_constant_cases() {
        let g = Grid::new(512, 100.0).unwrap();
        let q = Field::from_real_fn(g, |x| 1.0 / x.cosh()).unwrap();
        let s = FieldSeries::frozen(&q, &times(5, 4.0)).unwrap();
        let c1 = interpolation_constant(&s, &Band::single(0), (0.0, 4.0)).unwrap().unwrap();
        let s2 = FieldSeries::frozen(&q.scale(Complex64::new(2f64.sqrt(), 0.0)), &times(5, 4.0)).unwrap();
        let c2 = interpolation_constant(&s2, &Band::single(0), (0.0, 4.0)).unwrap().unwrap();
        assert!(c1.is_finite() && (c1 - c2).abs() < 1e-12 * c1);
        let z = FieldSeries::frozen(&Field::zeros(g), &times(5, 4.0)).unwrap();
        assert_eq!(interpolation_constant(&z, &Band::single(0), (0.0, 4.0)).unwrap(), None);
        let torus = Grid::new(64, 2.0 * PI).unwrap();
        let mode = Field::from_fn(torus, |x| Complex64::from_polar(0.7, 3.0 * x)).unwrap();
        let flat = FieldSeries::frozen(&mode, &times(5, 4.0)).unwrap();
        assert_eq!(interpolation_constant(&flat, &Band::single(3), (0.0, 4.0)).unwrap(), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn norms_absolutely_homogeneous(seed in 0u64..1000, lam in -3.0f64..3.0, phase in 0.0f64..6.3) {
            let g = Grid::new(64, 20.0).unwrap();
            let u = random_field(g, 20, seed);
            let z = Complex64::from_polar(lam, phase);
            let v = u.scale(z);
            for (s, flavor) in [(-0.5, SobolevFlavor::Inhomogeneous), (1.0, SobolevFlavor::Inhomogeneous), (-0.5, SobolevFlavor::Sum { c: 0.8 })] {
                let a = sobolev_norm(&u, s, flavor).unwrap();
                let b = sobolev_norm(&v, s, flavor).unwrap();
                prop_assert!((b - lam.abs() * a).abs() <= 1e-12 * (1.0 + b));
            }
            let su = FieldSeries::frozen(&u, &times(3, 1.0)).unwrap();
            let sv = FieldSeries::frozen(&v, &times(3, 1.0)).unwrap();
            let a = spacetime_l6(&su, (0.0, 1.0)).unwrap();
            let b = spacetime_l6(&sv, (0.0, 1.0)).unwrap();
            prop_assert!((b - lam.abs() * a).abs() <= 1e-12 * (1.0 + b));
        }

        #[test]
        fn envelope_dominates_and_is_admissible(masses in proptest::collection::vec(0.0f64..1.0, 1..24), eps in 0.1f64..2.0) {
            prop_assume!(masses.iter().any(|&m| m > 0.0));
            let env = build_envelope(&masses, -3, eps, ENVELOPE_DELTA).unwrap();
            prop_assert!(env.admissibility <= ENVELOPE_LIMIT);
            for (d, c) in masses.iter().zip(&env.values) {
                prop_assert!(*d <= eps * c * (1.0 + 1e-12));
            }
        }
    }
}
