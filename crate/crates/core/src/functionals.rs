//! Quadratic densities, quartic functionals, the modified mass and the
//! interaction Morawetz functional.
//!
//! Densities are bilinear in `f = A0 u` with symbols (in `f^(xi) conj
//! f^(eta)`):
//!
//! | tag      | symbol                              | profile                                      |
//! |----------|-------------------------------------|----------------------------------------------|
//! | mass     | `1`                                 | `|f|^2`                                      |
//! | momentum | `xi + eta - 2 xi0`                  | `2 Im(conj f f_x) - 2 xi0 |f|^2`             |
//! | energy   | `(xi + eta - 2 xi0)^2`              | `2|f_x|^2 - 2 Re(conj f f_xx) - 4 xi0 P + 4 xi0^2 M` |
//!
//! All profiles are sampled on the twice refined grid so that products of
//! two densities integrate without aliasing.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::evolve::{Diagnostic, Snapshot};
use crate::spectral::{derivative, localize, Band, Field, Grid};
use crate::symbols::{mass_source_value, resonance_data, FreqQuadruple, QuarticCorrection, SliceSymbol, TrilinearSymbol};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Refinement factor of density grids.
pub const DENSITY_REFINEMENT: usize = 2;

/// Relative Hermitian defect above which a quartic symbol is rejected.
pub const HERMITIAN_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityTag {
    Mass,
    Momentum,
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityKind {
    pub tag: DensityTag,
    pub band: Band,
    pub xi0: f64,
}

impl DensityKind {
    pub fn mass(band: Band) -> Self {
        Self {
            tag: DensityTag::Mass,
            band,
            xi0: 0.0,
        }
    }

    pub fn momentum(band: Band, xi0: f64) -> Self {
        Self {
            tag: DensityTag::Momentum,
            band,
            xi0,
        }
    }

    pub fn energy(band: Band, xi0: f64) -> Self {
        Self {
            tag: DensityTag::Energy,
            band,
            xi0,
        }
    }

    /// Bilinear symbol `s(xi, eta)` multiplying `f^(xi) conj f^(eta)`.
    pub fn symbol(&self, xi: f64, eta: f64) -> f64 {
        let a = self.band.weight(xi) * self.band.weight(eta);
        let w = xi + eta - 2.0 * self.xi0;
        match self.tag {
            DensityTag::Mass => a,
            DensityTag::Momentum => w * a,
            DensityTag::Energy => w * w * a,
        }
    }
}

/// Mass, momentum and energy profiles of one localized field, sampled on
/// the refined grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Densities {
    pub grid: Grid,
    pub mass: Vec<f64>,
    pub momentum: Vec<f64>,
    pub energy: Vec<f64>,
}

impl Densities {
    pub fn new(u: &Field, band: &Band, xi0: f64) -> Self {
        let f = localize(u, band).refined(DENSITY_REFINEMENT);
        let fx = derivative(&f);
        let fxx = derivative(&fx);
        let n = f.grid().n_points();
        let mut mass = Vec::with_capacity(n);
        let mut momentum = Vec::with_capacity(n);
        let mut energy = Vec::with_capacity(n);
        for j in 0..n {
            let (v, d1, d2) = (f.values()[j], fx.values()[j], fxx.values()[j]);
            let m = v.norm_sqr();
            let p = 2.0 * (v.conj() * d1).im;
            let e = 2.0 * d1.norm_sqr() - 2.0 * (v.conj() * d2).re;
            mass.push(m);
            momentum.push(p - 2.0 * xi0 * m);
            energy.push(e - 4.0 * xi0 * p + 4.0 * xi0 * xi0 * m);
        }
        Self {
            grid: *f.grid(),
            mass,
            momentum,
            energy,
        }
    }

    pub fn get(&self, tag: DensityTag) -> &[f64] {
        match tag {
            DensityTag::Mass => &self.mass,
            DensityTag::Momentum => &self.momentum,
            DensityTag::Energy => &self.energy,
        }
    }
}

/// Density profile of `kind` on the refined grid of `u`.
pub fn density(u: &Field, kind: &DensityKind) -> (Grid, Vec<f64>) {
    let d = Densities::new(u, &kind.band, kind.xi0);
    let profile = d.get(kind.tag).to_vec();
    (d.grid, profile)
}

fn integrate(grid: &Grid, f: &[f64]) -> f64 {
    f.iter().sum::<f64>() * grid.dx()
}

fn check_symbol_grid(grid: &Grid, symbol: &SliceSymbol) -> Result<()> {
    let rel = (symbol.dk() - grid.dk()).abs() / grid.dk();
    if rel > 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "quartic symbol lattice spacing {} does not match grid dk {}",
            symbol.dk(),
            grid.dk()
        )));
    }
    Ok(())
}

/// `Re (dk^3 / 2 pi) sum_{m1 - m2 + m3 - m4 = 0} s u1 conj(u2) u3 conj(u4)`
/// over the stored slice. The symbol is replaced by its Hermitian part;
/// symbols whose Hermitian defect exceeds [`HERMITIAN_TOLERANCE`] are
/// rejected since their functional is not real.
pub fn quartic_functional(u: &Field, symbol: &SliceSymbol) -> Result<f64> {
    let grid = *u.grid();
    check_symbol_grid(&grid, symbol)?;
    let defect = symbol.hermitian_defect();
    if defect > HERMITIAN_TOLERANCE {
        return Err(Error::NonHermitian { defect });
    }
    let k = symbol.kmax();
    let spec = u.spectrum();
    let coeff = |m: i64| grid.slot(m).map_or(ZERO, |j| spec[j]);
    let sum: Complex64 = (-k..=k)
        .into_par_iter()
        .map(|m1| {
            let u1 = coeff(m1);
            if u1 == ZERO {
                return ZERO;
            }
            let mut acc = ZERO;
            for m2 in -k..=k {
                let u12 = u1 * coeff(m2).conj();
                if u12 == ZERO {
                    continue;
                }
                for m3 in -k..=k {
                    let m4 = m1 - m2 + m3;
                    if m4.abs() > k {
                        continue;
                    }
                    let s = 0.5 * (symbol.get(m1, m2, m3) + symbol.get(m2, m1, m4).conj());
                    acc += s * u12 * coeff(m3) * coeff(m4).conj();
                }
            }
            acc
        })
        .sum();
    let dk = grid.dk();
    Ok((dk * dk * dk / (2.0 * PI) * sum).re)
}

/// Direct O(N^3) evaluation of the same functional for a symbol given as a
/// function of the frequency quadruple, over all grid modes.
pub fn quartic_functional_direct(u: &Field, symbol: impl Fn(FreqQuadruple) -> Complex64 + Sync) -> f64 {
    let grid = *u.grid();
    let n = grid.n_points();
    let spec = u.spectrum();
    let dk = grid.dk();
    let sum: Complex64 = (0..n)
        .into_par_iter()
        .map(|j1| {
            let m1 = grid.mode(j1);
            let mut acc = ZERO;
            for j2 in 0..n {
                let m2 = grid.mode(j2);
                for j3 in 0..n {
                    let m3 = grid.mode(j3);
                    let Some(j4) = grid.slot(m1 - m2 + m3) else {
                        continue;
                    };
                    let m4 = m1 - m2 + m3;
                    let q = [m1, m2, m3, m4].map(|m| m as f64 * dk);
                    acc += symbol(q) * spec[j1] * spec[j2].conj() * spec[j3] * spec[j4].conj();
                }
            }
            acc
        })
        .sum();
    (dk * dk * dk / (2.0 * PI) * sum).re
}

/// Localized mass `M_a = int |A0 u|^2` via Parseval.
pub fn band_mass(u: &Field, band: &Band) -> f64 {
    let grid = u.grid();
    u.spectrum()
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let a = band.weight(grid.frequency(j));
            a * a * c.norm_sqr()
        })
        .sum::<f64>()
        * grid.dk()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModifiedMass {
    pub mass: f64,
    pub corrected: f64,
    pub gap: f64,
}

/// `(M_a, M#_a = M_a + B4(u), |M# - M|)`.
pub fn modified_mass(u: &Field, correction: &QuarticCorrection) -> Result<ModifiedMass> {
    let mass = band_mass(u, &correction.band);
    let quartic = if correction.symbol.max_abs() == 0.0 {
        0.0
    } else {
        quartic_functional(u, &correction.symbol)?
    };
    Ok(ModifiedMass {
        mass,
        corrected: mass + quartic,
        gap: quartic.abs(),
    })
}

/// Off-slice density of the quartic correction for a symbol `c`:
/// `rho(x) = Re (dk / sqrt(2 pi))^4 sum b u1 conj(u2) u3 conj(u4) e^{i d4 x}`
/// with `b = -i c4 / d4sq_tilde`, which agrees with the slice correction
/// on `d4 = 0` and integrates to `B4(u)`. Sampled on the refined grid.
///
/// Cost is `O(K^4)` in the number `K` of retained modes; fields are
/// truncated to `|m| <= kmax` (at most 16).
pub fn correction_density(u: &Field, c: &TrilinearSymbol, band: &Band, kmax: i64) -> Result<(Grid, Vec<f64>)> {
    if !(0..=16).contains(&kmax) {
        return Err(Error::InvalidConfig(format!("correction density needs 0 <= kmax <= 16, got {kmax}")));
    }
    let grid = *u.grid();
    let fine = grid.refined(DENSITY_REFINEMENT);
    if 4 * kmax >= fine.n_points() as i64 / 2 {
        return Err(Error::InvalidConfig("grid too coarse for the correction density".into()));
    }
    let dk = grid.dk();
    let guard = 0.5 * dk * dk;
    let spec = u.spectrum();
    let coeff = |m: i64| grid.slot(m).map_or(ZERO, |j| spec[j]);
    let modes: Vec<i64> = (-kmax..=kmax).collect();
    let width = (8 * kmax + 1) as usize;
    let out: Vec<Complex64> = modes
        .par_iter()
        .map(|&m1| {
            let mut acc = vec![ZERO; width];
            let u1 = coeff(m1);
            if u1 == ZERO {
                return acc;
            }
            for &m2 in &modes {
                for &m3 in &modes {
                    for &m4 in &modes {
                        let prod = u1 * coeff(m2).conj() * coeff(m3) * coeff(m4).conj();
                        if prod == ZERO {
                            continue;
                        }
                        let q = [m1, m2, m3, m4].map(|m| m as f64 * dk);
                        let r = resonance_data(q);
                        if r.d4sq_tilde.abs() < guard {
                            continue;
                        }
                        let c4 = mass_source_value(c, band, q);
                        let b = Complex64::new(0.0, -1.0) * c4 / r.d4sq_tilde;
                        let d = (m1 - m2 + m3 - m4 + 4 * kmax) as usize;
                        acc[d] += b * prod;
                    }
                }
            }
            acc
        })
        .reduce(
            || vec![ZERO; width],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let scale = (dk / (2.0 * PI).sqrt()).powi(4);
    let profile = (0..fine.n_points())
        .map(|j| {
            let x = fine.x(j);
            let mut s = ZERO;
            for (d, &v) in out.iter().enumerate() {
                let xi = (d as i64 - 4 * kmax) as f64 * dk;
                s += v * Complex64::from_polar(1.0, xi * x);
            }
            scale * s.re
        })
        .collect();
    Ok((fine, profile))
}

/// Antiderivative `F(x) = int_{x_min}^x f`, computed spectrally for the
/// trigonometric interpolant of `f` with no mean subtraction.
pub fn prefix_integral(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let n = grid.n_points();
    let data: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut coeffs = crate::spectral::forward_normalized(grid, &data);
    // u^(0) = int f / sqrt(2 pi)
    let mean = coeffs[0].re * (2.0 * PI).sqrt() / grid.length();
    for (j, c) in coeffs.iter_mut().enumerate() {
        let m = grid.mode(j);
        if m == 0 || 2 * m == -(n as i64) {
            *c = ZERO;
        } else {
            *c /= Complex64::new(0.0, grid.frequency(j));
        }
    }
    let osc = crate::spectral::inverse_normalized(grid, &coeffs);
    let base = osc[0].re;
    let x0 = grid.x_min();
    (0..n)
        .map(|j| mean * (grid.x(j) - x0) + osc[j].re - base)
        .collect()
}

/// Options for [`interaction_functional`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    pub band_a: Band,
    pub band_b: Band,
    pub xi0: f64,
    /// `v = u(. + x0)` when the second field is a translate of the first.
    pub x0: f64,
}

impl InteractionSpec {
    pub fn new(band_a: Band, band_b: Band, xi0: f64, x0: f64) -> Self {
        Self {
            band_a,
            band_b,
            xi0,
            x0,
        }
    }
}

/// `iint_{x > y} P_a(u)(x) M_b(v)(y) - M_a(u)(x) P_b(v)(y) dx dy`
/// with optional mass-side additions `extra_a`, `extra_b` on the refined
/// grid (for instance correction densities).
pub fn interaction_from_densities(
    da: &Densities,
    db: &Densities,
    extra_a: Option<&[f64]>,
    extra_b: Option<&[f64]>,
) -> f64 {
    let grid = da.grid;
    let add = |base: &[f64], extra: Option<&[f64]>| -> Vec<f64> {
        match extra {
            Some(e) => base.iter().zip(e).map(|(a, b)| a + b).collect(),
            None => base.to_vec(),
        }
    };
    let ma = add(&da.mass, extra_a);
    let mb = add(&db.mass, extra_b);
    let cum_mb = prefix_integral(&grid, &mb);
    let cum_pb = prefix_integral(&grid, &db.momentum);
    let integrand: Vec<f64> = (0..grid.n_points())
        .map(|j| da.momentum[j] * cum_mb[j] - ma[j] * cum_pb[j])
        .collect();
    integrate(&grid, &integrand)
}

/// Interaction Morawetz functional of `u` (band A) and `v` (band B).
pub fn interaction_functional(u: &Field, v: &Field, spec: &InteractionSpec) -> Result<f64> {
    if u.grid() != v.grid() {
        return Err(Error::GridMismatch {
            expected: u.grid().n_points(),
            got: v.grid().n_points(),
        });
    }
    let da = Densities::new(u, &spec.band_a, spec.xi0);
    let db = Densities::new(v, &spec.band_b, spec.xi0);
    Ok(interaction_from_densities(&da, &db, None, None))
}

/// `int M_a(u) E_b(v) + M_b(v) E_a(u) - 2 P_a(u) P_b(v) dx`.
pub fn j4_from_densities(da: &Densities, db: &Densities) -> f64 {
    let integrand: Vec<f64> = (0..da.grid.n_points())
        .map(|j| {
            da.mass[j] * db.energy[j] + db.mass[j] * da.energy[j] - 2.0 * da.momentum[j] * db.momentum[j]
        })
        .collect();
    integrate(&da.grid, &integrand)
}

pub fn j4(u: &Field, v: &Field, band_a: &Band, band_b: &Band, xi0: f64) -> Result<f64> {
    if u.grid() != v.grid() {
        return Err(Error::GridMismatch {
            expected: u.grid().n_points(),
            got: v.grid().n_points(),
        });
    }
    let da = Densities::new(u, band_a, xi0);
    let db = Densities::new(v, band_b, xi0);
    Ok(j4_from_densities(&da, &db))
}

/// Relative disagreement above which the sampling cadence is flagged as
/// too coarse for the centered time derivative.
pub const CADENCE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorawetzReport {
    pub times: Vec<f64>,
    pub interaction: Vec<f64>,
    pub j4: Vec<f64>,
    /// Centered `dI/dt - J4` at `times[1..n-1]`.
    pub remainder: Vec<f64>,
    pub remainder_sup: f64,
    pub remainder_l1: f64,
    /// Max discrepancy between the step-`h` and step-`2h` derivatives,
    /// relative to `max |dI/dt|`.
    pub cadence_defect: f64,
    pub cadence_too_coarse: bool,
    pub spec: InteractionSpec,
    pub corrected: bool,
}

/// Build the balance report from uniformly sampled `I` and `J4` series.
pub fn morawetz_balance(
    times: &[f64],
    interaction: &[f64],
    j4: &[f64],
    spec: InteractionSpec,
    corrected: bool,
) -> Result<MorawetzReport> {
    let n = times.len();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    if interaction.len() != n || j4.len() != n {
        return Err(Error::InvalidConfig("series lengths differ".into()));
    }
    let h = (times[n - 1] - times[0]) / (n - 1) as f64;
    if times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) {
        return Err(Error::InvalidConfig("balance needs a uniform time cadence".into()));
    }
    let derivative: Vec<f64> = (1..n - 1).map(|i| (interaction[i + 1] - interaction[i - 1]) / (2.0 * h)).collect();
    let remainder: Vec<f64> = derivative.iter().zip(&j4[1..n - 1]).map(|(d, j)| d - j).collect();
    let remainder_sup = remainder.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    let remainder_l1 = remainder.iter().map(|r| r.abs()).sum::<f64>() * h;
    let mut worst: f64 = 0.0;
    for i in 2..n.saturating_sub(2) {
        let wide = (interaction[i + 2] - interaction[i - 2]) / (4.0 * h);
        worst = worst.max((wide - derivative[i - 1]).abs());
    }
    let scale = derivative.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let cadence_defect = if scale > 0.0 { worst / scale } else { 0.0 };
    Ok(MorawetzReport {
        times: times.to_vec(),
        interaction: interaction.to_vec(),
        j4: j4.to_vec(),
        remainder,
        remainder_sup,
        remainder_l1,
        cadence_defect,
        cadence_too_coarse: cadence_defect > CADENCE_TOLERANCE,
        spec,
        corrected,
    })
}

/// Diagnostic recording `I_AB` and `J4` with `v = u(. + x0)`.
#[derive(Debug, Clone)]
pub struct MorawetzMonitor {
    pub spec: InteractionSpec,
    pub times: Vec<f64>,
    pub interaction: Vec<f64>,
    pub j4: Vec<f64>,
}

impl MorawetzMonitor {
    pub fn new(spec: InteractionSpec) -> Self {
        Self {
            spec,
            times: Vec::new(),
            interaction: Vec::new(),
            j4: Vec::new(),
        }
    }

    pub fn report(&self) -> Result<MorawetzReport> {
        morawetz_balance(&self.times, &self.interaction, &self.j4, self.spec, false)
    }
}

impl Diagnostic for MorawetzMonitor {
    fn observe(&mut self, snapshot: &Snapshot<'_>) {
        let u = snapshot.field;
        let v = if self.spec.x0 == 0.0 {
            u.clone()
        } else {
            u.translate(self.spec.x0)
        };
        let da = Densities::new(u, &self.spec.band_a, self.spec.xi0);
        let db = Densities::new(&v, &self.spec.band_b, self.spec.xi0);
        self.times.push(snapshot.time);
        self.interaction.push(interaction_from_densities(&da, &db, None, None));
        self.j4.push(j4_from_densities(&da, &db));
    }
}

/// Diagnostic recording `M_a` and `M#_a`.
#[derive(Debug, Clone)]
pub struct MassMonitor {
    pub correction: QuarticCorrection,
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub corrected: Vec<f64>,
}

impl MassMonitor {
    pub fn new(correction: QuarticCorrection) -> Self {
        Self {
            correction,
            times: Vec::new(),
            mass: Vec::new(),
            corrected: Vec::new(),
        }
    }
}

impl Diagnostic for MassMonitor {
    fn observe(&mut self, snapshot: &Snapshot<'_>) {
        let m = modified_mass(snapshot.field, &self.correction).expect("correction is Hermitian by construction");
        self.times.push(snapshot.time);
        self.mass.push(m.mass);
        self.corrected.push(m.corrected);
    }
}
