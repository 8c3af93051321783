//! Periodic grid, complex fields and their spectral representation.
//!
//! Conventions (fixed, asserted by the Parseval tests):
//!
//! * samples live at `x_j = -L/2 + j*dx`, `j = 0..N`;
//! * spectral coefficients are stored in FFT order, slot `j` carrying the
//!   integer mode `m = j` for `j < N/2` and `m = j - N` otherwise, so the
//!   frequencies are `xi_m = 2*pi*m/L` with `m` in `[-N/2, N/2)`;
//! * coefficients approximate the unitary transform
//!   `u_hat(xi) = (2*pi)^(-1/2) * int u(x) exp(-i x xi) dx`, i.e.
//!   `u_hat_m = dx/sqrt(2*pi) * sum_j u_j exp(-i xi_m x_j)`.
//!
//! With this normalization `||u||_2^2 = sum_m |u_hat_m|^2 * (2*pi/L)`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward/inverse FFT plans of one length with their own scratch space.
/// Both directions are unnormalized.
pub struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let (forward, inverse) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(n), p.plan_fft_inverse(n))
        });
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![ZERO; len],
        }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.len() == 0
    }

    pub fn forward(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
    }
}

impl std::fmt::Debug for FftPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPair").field("len", &self.len()).finish()
    }
}

/// Uniform periodic grid on a torus of circumference `length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n_points: usize,
    length: f64,
}

impl Grid {
    pub fn new(n_points: usize, length: f64) -> Result<Self> {
        if n_points < 2 || n_points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a positive even integer, got {n_points}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "length must be positive and finite, got {length}"
            )));
        }
        Ok(Self { n_points, length })
    }

    /// Grid whose frequency lattice is the unit integer lattice.
    pub fn unit_lattice(n_points: usize) -> Result<Self> {
        Self::new(n_points, 2.0 * PI)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_points as f64
    }

    /// Spacing of the frequency lattice, `2*pi/L`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn x_min(&self) -> f64 {
        -0.5 * self.length
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min() + j as f64 * self.dx()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Integer mode carried by FFT slot `j`.
    pub fn mode(&self, j: usize) -> i64 {
        let n = self.n_points as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// FFT slot of integer mode `m`, if representable.
    pub fn slot(&self, m: i64) -> Option<usize> {
        let half = (self.n_points / 2) as i64;
        if m < -half || m >= half {
            None
        } else if m >= 0 {
            Some(m as usize)
        } else {
            Some((m + self.n_points as i64) as usize)
        }
    }

    pub fn frequency(&self, j: usize) -> f64 {
        self.mode(j) as f64 * self.dk()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.frequency(j)).collect()
    }

    /// Magnitude of the Nyquist frequency.
    pub fn max_frequency(&self) -> f64 {
        (self.n_points / 2) as f64 * self.dk()
    }

    /// Largest band index whose bump overlaps the grid frequencies.
    pub fn band_limit(&self) -> i64 {
        self.max_frequency().ceil() as i64
    }

    /// Same torus, `factor` times as many points.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n_points: self.n_points * factor,
            length: self.length,
        }
    }

    fn normalization(&self) -> f64 {
        self.dx() / (2.0 * PI).sqrt()
    }
}

/// Torus length such that no wave of frequency up to `xi_max` wraps
/// during `[0, t_end]`; the group velocity of frequency `xi` is `2 xi`.
pub fn recommended_length(xi_max: f64, t_end: f64, support_width: f64) -> f64 {
    2.0 * (2.0 * xi_max.abs()) * t_end.abs() + support_width
}

/// Normalized spectral coefficients in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n_points() {
            return Err(Error::GridMismatch {
                expected: grid.n_points(),
                got: coeffs.len(),
            });
        }
        check_finite(&coeffs)?;
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![ZERO; grid.n_points()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of integer mode `m` (zero when not representable).
    pub fn mode(&self, m: i64) -> Complex64 {
        self.grid.slot(m).map_or(ZERO, |j| self.coeffs[j])
    }

    /// `sum |u_hat|^2 * dk`, the squared L2 norm by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dk()
    }
}

/// Complex samples on a grid, with a lazily computed spectrum.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl Field {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::GridMismatch {
                expected: grid.n_points(),
                got: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(Self {
            grid,
            values,
            spectrum: OnceLock::new(),
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![ZERO; grid.n_points()],
            spectrum: OnceLock::new(),
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = (0..grid.n_points()).map(|j| f(grid.x(j))).collect();
        Self::new(grid, values)
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Normalized spectrum (computed once, then cached).
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum
            .get_or_init(|| forward_normalized(&self.grid, &self.values))
    }

    pub fn to_spectrum(&self) -> Spectrum {
        Spectrum {
            grid: self.grid,
            coeffs: self.spectrum().to_vec(),
        }
    }

    /// `int |u|^2 dx` by the rectangle rule (exact for trigonometric
    /// polynomials resolved by the grid).
    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: Complex64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
            spectrum: OnceLock::new(),
        }
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                expected: self.grid.n_points(),
                got: other.grid.n_points(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Field::new(self.grid, values)
    }

    /// `u(. + shift)` by exact spectral translation.
    pub fn translate(&self, shift: f64) -> Field {
        apply_multiplier(self, |xi| Complex64::from_polar(1.0, xi * shift))
    }

    /// Values interpolated spectrally onto `factor` times as many points.
    pub fn refined(&self, factor: usize) -> Field {
        let fine = self.grid.refined(factor);
        let coeffs = pad_modes(&self.grid, self.spectrum(), &fine);
        Field {
            grid: fine,
            values: inverse_normalized(&fine, &coeffs),
            spectrum: OnceLock::new(),
        }
    }

    /// Relative L2 distance `||self - other|| / ||other||`.
    pub fn relative_l2_error(&self, reference: &Field) -> f64 {
        let num: f64 = self
            .values
            .iter()
            .zip(&reference.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = reference.values.iter().map(|b| b.norm_sqr()).sum();
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}

fn check_finite(values: &[Complex64]) -> Result<()> {
    match values
        .iter()
        .position(|v| !(v.re.is_finite() && v.im.is_finite()))
    {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// `(-1)^m`, the phase `exp(-i xi_m x_min)` for `x_min = -L/2`.
fn origin_phase(m: i64) -> f64 {
    if m.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn forward_normalized(grid: &Grid, values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    FftPair::new(grid.n_points()).forward(&mut buf);
    raw_to_normalized(grid, &mut buf);
    buf
}

pub(crate) fn inverse_normalized(grid: &Grid, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    normalized_to_raw(grid, &mut buf);
    FftPair::new(grid.n_points()).inverse(&mut buf);
    let inv_n = 1.0 / grid.n_points() as f64;
    buf.iter_mut().for_each(|v| *v *= inv_n);
    buf
}

/// Unnormalized DFT coefficients to the normalized convention, in place.
pub(crate) fn raw_to_normalized(grid: &Grid, buf: &mut [Complex64]) {
    let c = grid.normalization();
    for (j, v) in buf.iter_mut().enumerate() {
        *v *= c * origin_phase(grid.mode(j));
    }
}

pub(crate) fn normalized_to_raw(grid: &Grid, buf: &mut [Complex64]) {
    let c = 1.0 / grid.normalization();
    for (j, v) in buf.iter_mut().enumerate() {
        *v *= c * origin_phase(grid.mode(j));
    }
}

/// Copy normalized coefficients of `coarse` into the (zero-padded) mode
/// layout of `fine`. Both grids must share the same length.
pub(crate) fn pad_modes(coarse: &Grid, coeffs: &[Complex64], fine: &Grid) -> Vec<Complex64> {
    let mut out = vec![ZERO; fine.n_points()];
    for (j, &c) in coeffs.iter().enumerate() {
        if let Some(slot) = fine.slot(coarse.mode(j)) {
            out[slot] = c;
        }
    }
    out
}

pub fn transform(field: &Field) -> Result<Spectrum> {
    check_finite(field.values())?;
    Ok(field.to_spectrum())
}

pub fn inverse_transform(spectrum: &Spectrum) -> Result<Field> {
    let values = inverse_normalized(&spectrum.grid, &spectrum.coeffs);
    let field = Field::new(spectrum.grid, values)?;
    let _ = field.spectrum.set(spectrum.coeffs.clone());
    Ok(field)
}

/// Multiply the spectrum pointwise by `symbol(xi)`.
pub fn apply_multiplier(field: &Field, symbol: impl Fn(f64) -> Complex64) -> Field {
    let grid = *field.grid();
    let coeffs: Vec<Complex64> = field
        .spectrum()
        .iter()
        .enumerate()
        .map(|(j, &c)| c * symbol(grid.frequency(j)))
        .collect();
    let values = inverse_normalized(&grid, &coeffs);
    let out = Field {
        grid,
        values,
        spectrum: OnceLock::new(),
    };
    let _ = out.spectrum.set(coeffs);
    out
}

pub fn apply_real_multiplier(field: &Field, symbol: impl Fn(f64) -> f64) -> Field {
    apply_multiplier(field, |xi| Complex64::new(symbol(xi), 0.0))
}

/// Spectral derivative `d/dx`.
pub fn derivative(field: &Field) -> Field {
    apply_multiplier(field, |xi| Complex64::new(0.0, xi))
}

/// Raised-cosine bump `cos^2(pi xi / 2)` on `[-1, 1]`. Its integer
/// translates form an exact partition of unity.
pub fn bump(xi: f64) -> f64 {
    if xi.abs() < 1.0 {
        let c = (0.5 * PI * xi).cos();
        c * c
    } else {
        0.0
    }
}

/// Unit-scale frequency projector `P_k` with symbol `bump(xi - k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandProjector {
    pub center: i64,
}

impl BandProjector {
    pub fn weight(&self, xi: f64) -> f64 {
        bump(xi - self.center as f64)
    }
}

/// Frequency localization `a0(xi)`: either the identity or the sum of
/// unit bumps centred on an integer interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Global,
    Interval { lo: i64, hi: i64 },
}

impl Band {
    pub fn single(k: i64) -> Self {
        Band::Interval { lo: k, hi: k }
    }

    pub fn weight(&self, xi: f64) -> f64 {
        match *self {
            Band::Global => 1.0,
            Band::Interval { lo, hi } => {
                // Only the two bands adjacent to xi can contribute.
                let base = xi.floor() as i64;
                (base..=base + 1)
                    .filter(|k| (lo..=hi).contains(k))
                    .map(|k| bump(xi - k as f64))
                    .sum()
            }
        }
    }

    /// Distance between two intervals on the band lattice.
    pub fn distance(&self, other: &Band) -> f64 {
        match (*self, *other) {
            (Band::Interval { lo: a0, hi: a1 }, Band::Interval { lo: b0, hi: b1 }) => {
                if a1 < b0 {
                    (b0 - a1) as f64
                } else if b1 < a0 {
                    (a0 - b1) as f64
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    }

    pub fn check(&self, grid: &Grid) -> Result<()> {
        if let Band::Interval { lo, hi } = *self {
            let limit = grid.band_limit();
            for band in [lo, hi] {
                if band.abs() > limit {
                    return Err(Error::BandOutOfRange { band, limit });
                }
            }
            if lo > hi {
                return Err(Error::InvalidConfig(format!(
                    "band interval [{lo}, {hi}] is empty"
                )));
            }
        }
        Ok(())
    }
}

/// `P_k u`, the unit-band projection centred at integer `k`.
pub fn band_project(field: &Field, k: i64) -> Result<Field> {
    let limit = field.grid().band_limit();
    if k.abs() > limit {
        return Err(Error::BandOutOfRange { band: k, limit });
    }
    let p = BandProjector { center: k };
    Ok(apply_real_multiplier(field, |xi| p.weight(xi)))
}

/// Apply the band-localization `a0` of `band`.
pub fn localize(field: &Field, band: &Band) -> Field {
    match band {
        Band::Global => field.clone(),
        _ => apply_real_multiplier(field, |xi| band.weight(xi)),
    }
}

/// Fraction of spectral mass carried by the top third of the modes.
pub fn tail_fraction(grid: &Grid, coeffs: &[Complex64]) -> f64 {
    let cutoff = grid.n_points() as i64 / 3;
    let mut total = 0.0;
    let mut tail = 0.0;
    for (j, c) in coeffs.iter().enumerate() {
        let w = c.norm_sqr();
        total += w;
        if grid.mode(j).abs() > cutoff {
            tail += w;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Field::new(
            grid,
            (0..grid.n_points())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn odd_grid_rejected() {
        assert!(Grid::new(63, 1.0).is_err());
        assert!(Grid::new(64, -1.0).is_err());
    }

    #[test]
    fn frequencies_symmetric_except_nyquist() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let f = g.frequencies();
        assert_eq!(f, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
        assert!((g.dx() * g.n_points() as f64 - g.length()).abs() < 1e-15);
    }

    #[test]
    fn round_trip_identity() {
        let g = Grid::new(128, 17.0).unwrap();
        let u = random_field(g, 1);
        let back = inverse_transform(&transform(&u).unwrap()).unwrap();
        assert!(back.relative_l2_error(&u) < 1e-12);
    }

    #[test]
    fn pure_mode_concentrates() {
        let g = Grid::unit_lattice(32).unwrap();
        let u = Field::from_fn(g, |x| Complex64::from_polar(1.0, x)).unwrap();
        let s = transform(&u).unwrap();
        for (j, c) in s.coeffs().iter().enumerate() {
            if g.mode(j) == 1 {
                assert!((c.norm() - (2.0 * PI).sqrt()).abs() < 1e-12);
            } else {
                assert!(c.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn parseval_both_ways() {
        let g = Grid::new(256, 31.3).unwrap();
        let u = random_field(g, 7);
        let phys = u.l2_norm_sq();
        let spec = u.to_spectrum().l2_norm_sq();
        assert!((phys - spec).abs() / phys < 1e-12);
    }

    #[test]
    fn non_finite_rejected() {
        let g = Grid::new(4, 1.0).unwrap();
        let v = vec![ZERO, Complex64::new(f64::NAN, 0.0), ZERO, ZERO];
        assert!(matches!(Field::new(g, v), Err(Error::NonFinite { index: 1 })));
    }

    #[test]
    fn derivative_of_sine() {
        let g = Grid::unit_lattice(64).unwrap();
        let u = Field::from_real_fn(g, f64::sin).unwrap();
        let du = derivative(&u);
        for (j, v) in du.values().iter().enumerate() {
            assert!((v - Complex64::new(g.x(j).cos(), 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn identity_multiplier() {
        let g = Grid::new(64, 9.0).unwrap();
        let u = random_field(g, 3);
        let v = apply_multiplier(&u, |_| Complex64::new(1.0, 0.0));
        assert!(v.relative_l2_error(&u) < 1e-14);
    }

    #[test]
    fn free_gaussian_matches_closed_form() {
        // u0 = exp(-x^2/2); under i u_t + u_xx = 0,
        // u(t) = (1 + 2it)^(-1/2) exp(-x^2 / (2 (1 + 2it))).
        let g = Grid::new(512, 80.0).unwrap();
        let u0 = Field::from_real_fn(g, |x| (-0.5 * x * x).exp()).unwrap();
        let t = 0.5;
        let ut = apply_multiplier(&u0, |xi| Complex64::from_polar(1.0, -xi * xi * t));
        let exact = Field::from_fn(g, |x| {
            let z = Complex64::new(1.0, 2.0 * t);
            (-(x * x) / (2.0 * z)).exp() / z.sqrt()
        })
        .unwrap();
        assert!(ut.relative_l2_error(&exact) < 1e-8);
    }

    #[test]
    fn bands_resolve_identity() {
        let g = Grid::new(64, 23.0).unwrap();
        let u = random_field(g, 11);
        let k = g.band_limit();
        let mut acc = Field::zeros(g);
        for b in -k..=k {
            acc = acc.add(&band_project(&u, b).unwrap()).unwrap();
        }
        assert!(acc.relative_l2_error(&u) < 1e-12);
        assert!(band_project(&u, k + 1).is_err());
    }

    #[test]
    fn band_support() {
        let g = Grid::new(64, 4.0 * PI).unwrap(); // dk = 0.5
        let u = Field::from_fn(g, |x| Complex64::from_polar(1.0, 3.0 * x)).unwrap();
        assert!(band_project(&u, 3).unwrap().relative_l2_error(&u) < 1e-13);
        assert!(band_project(&u, 5).unwrap().l2_norm() < 1e-13);
    }

    #[test]
    fn half_integer_mode_splits_mass() {
        let g = Grid::new(64, 4.0 * PI).unwrap();
        let u = Field::from_fn(g, |x| Complex64::from_polar(1.0, 3.5 * x)).unwrap();
        let m = u.l2_norm_sq();
        let m3 = band_project(&u, 3).unwrap().l2_norm_sq();
        let m4 = band_project(&u, 4).unwrap().l2_norm_sq();
        let expected = m * (bump(0.5).powi(2) + bump(-0.5).powi(2));
        assert!((m3 + m4 - expected).abs() < 1e-12 * m);
        assert!((bump(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn refined_preserves_norm() {
        let g = Grid::new(32, 10.0).unwrap();
        let u = Field::from_real_fn(g, |x| (-x * x).exp()).unwrap();
        let r = u.refined(4);
        assert!((r.l2_norm_sq() - u.l2_norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn band_distance() {
        let a = Band::Interval { lo: 0, hi: 2 };
        let b = Band::Interval { lo: 6, hi: 9 };
        assert_eq!(a.distance(&b), 4.0);
        assert_eq!(b.distance(&a), 4.0);
        assert_eq!(a.distance(&a), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn bump_partition_of_unity(xi in -50.0f64..50.0) {
                let s: f64 = ((xi.floor() as i64 - 2)..=(xi.floor() as i64 + 2))
                    .map(|k| bump(xi - k as f64))
                    .sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
            }

            #[test]
            fn multiplier_is_linear(seed in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
                let g = Grid::new(32, 7.0).unwrap();
                let u = random_field(g, seed);
                let v = random_field(g, seed + 1);
                let sym = |xi: f64| Complex64::new(xi.cos(), xi.sin() * 0.3);
                let lhs = apply_multiplier(
                    &u.scale(Complex64::new(a, 0.0)).add(&v.scale(Complex64::new(b, 0.0))).unwrap(),
                    sym,
                );
                let rhs = apply_multiplier(&u, sym)
                    .scale(Complex64::new(a, 0.0))
                    .add(&apply_multiplier(&v, sym).scale(Complex64::new(b, 0.0)))
                    .unwrap();
                prop_assert!(lhs.sub(&rhs).unwrap().l2_norm() <= 1e-12 * (1.0 + rhs.l2_norm()));
            }

            #[test]
            fn parseval_random(seed in 0u64..1000) {
                let g = Grid::new(64, 12.5).unwrap();
                let u = random_field(g, seed);
                let a = u.l2_norm_sq();
                prop_assert!((a - u.to_spectrum().l2_norm_sq()).abs() <= 1e-12 * a);
            }
        }
    }
}
