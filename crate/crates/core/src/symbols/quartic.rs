use num_complex::Complex64;
use rayon::prelude::*;

use super::resonance::{japanese, resonance_data, FreqQuadruple};
use super::trilinear::TrilinearSymbol;
use crate::error::{Error, Result};
use crate::spectral::{Band, Grid};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Quadrilinear symbol on the slice `m1 - m2 + m3 - m4 = 0` of the integer
/// mode lattice `|m| <= kmax`, frequencies `xi = m * dk`.
///
/// Values are stored for every `(m1, m2, m3)` in the window; entries whose
/// implied `m4` falls outside the window are zero and never read.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSymbol {
    kmax: i64,
    dk: f64,
    values: Vec<Complex64>,
}

impl SliceSymbol {
    pub fn zeros(dk: f64, kmax: i64) -> Self {
        let w = (2 * kmax + 1) as usize;
        Self {
            kmax,
            dk,
            values: vec![Complex64::new(0.0, 0.0); w * w * w],
        }
    }

    /// Tabulate `f([xi1, xi2, xi3, xi4])` over the slice.
    pub fn from_fn(dk: f64, kmax: i64, f: impl Fn(FreqQuadruple) -> Complex64 + Sync) -> Self {
        let w = (2 * kmax + 1) as usize;
        let mut values = vec![Complex64::new(0.0, 0.0); w * w * w];
        values
            .par_chunks_mut(w * w)
            .enumerate()
            .for_each(|(i1, plane)| {
                let m1 = i1 as i64 - kmax;
                for m2 in -kmax..=kmax {
                    for m3 in -kmax..=kmax {
                        let m4 = m1 - m2 + m3;
                        if m4.abs() > kmax {
                            continue;
                        }
                        let q = [m1, m2, m3, m4].map(|m| m as f64 * dk);
                        plane[(m2 + kmax) as usize * w + (m3 + kmax) as usize] = f(q);
                    }
                }
            });
        Self { kmax, dk, values }
    }

    pub fn kmax(&self) -> i64 {
        self.kmax
    }

    pub fn dk(&self) -> f64 {
        self.dk
    }

    pub fn width(&self) -> usize {
        (2 * self.kmax + 1) as usize
    }

    pub fn contains(&self, m: i64) -> bool {
        m.abs() <= self.kmax
    }

    fn index(&self, m1: i64, m2: i64, m3: i64) -> usize {
        let w = self.width();
        let k = self.kmax;
        ((m1 + k) as usize * w + (m2 + k) as usize) * w + (m3 + k) as usize
    }

    /// Value at `(m1, m2, m3, m1 - m2 + m3)`; zero outside the window.
    pub fn get(&self, m1: i64, m2: i64, m3: i64) -> Complex64 {
        if [m1, m2, m3, m1 - m2 + m3].iter().all(|m| self.contains(*m)) {
            self.values[self.index(m1, m2, m3)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn set(&mut self, m1: i64, m2: i64, m3: i64, v: Complex64) {
        let idx = self.index(m1, m2, m3);
        self.values[idx] = v;
    }

    /// Visit every slice point as `(m1, m2, m3, m4, value)`.
    pub fn for_each(&self, mut f: impl FnMut(i64, i64, i64, i64, Complex64)) {
        let k = self.kmax;
        for m1 in -k..=k {
            for m2 in -k..=k {
                for m3 in -k..=k {
                    let m4 = m1 - m2 + m3;
                    if m4.abs() <= k {
                        f(m1, m2, m3, m4, self.values[self.index(m1, m2, m3)]);
                    }
                }
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |s(1,2,3,4) - conj s(2,1,4,3)| / max |s|`; zero exactly when
    /// the quartic functional is real for every field.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        self.for_each(|m1, m2, _, m4, v| {
            worst = worst.max((v - self.get(m2, m1, m4).conj()).norm());
        });
        worst / scale
    }

    /// `(s + s*) / 2` with `s*(1,2,3,4) = conj s(2,1,4,3)`.
    pub fn hermitian_part(&self) -> Self {
        let mut out = self.clone();
        self.for_each(|m1, m2, m3, m4, v| {
            out.set(m1, m2, m3, 0.5 * (v + self.get(m2, m1, m4).conj()));
        });
        out
    }

    /// Average over the slot swaps `1 <-> 3` and `2 <-> 4`.
    pub fn symmetrized(&self) -> Self {
        let mut out = self.clone();
        self.for_each(|m1, m2, m3, m4, v| {
            let s = v + self.get(m3, m2, m1) + self.get(m1, m4, m3) + self.get(m3, m4, m1);
            out.set(m1, m2, m3, 0.25 * s);
        });
        out
    }

    pub fn map(&self, f: impl Fn(FreqQuadruple, Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        let dk = self.dk;
        self.for_each(|m1, m2, m3, m4, v| {
            out.set(m1, m2, m3, f([m1, m2, m3, m4].map(|m| m as f64 * dk), v));
        });
        out
    }
}

fn raw_source(c: &TrilinearSymbol, band: &Band, q: FreqQuadruple) -> Complex64 {
    let [x1, x2, x3, x4] = q;
    let a3 = band.weight(x3);
    let a4 = band.weight(x4);
    -I * (a4 * a4) * c.eval(x1, x2, x3) + I * (a3 * a3) * c.eval(x2, x1, x4).conj()
}

/// Source symbol `c4_{m,a}` of the localized mass at one quadruple:
///
/// `d/dt int |A0 u|^2 = Re (dk^3 / 2 pi) sum_{d4 = 0} c4 u1 conj(u2) u3 conj(u4)`
///
/// for solutions of `i u_t + u_xx = C(u, conj u, u)`. Before symmetrization
/// the chain rule gives `-i a(xi4)^2 c(xi1, xi2, xi3) + i a(xi3)^2
/// conj c(xi2, xi1, xi4)`; the returned value is averaged over the slot
/// swaps `1 <-> 3`, `2 <-> 4`.
pub fn mass_source_value(c: &TrilinearSymbol, band: &Band, q: FreqQuadruple) -> Complex64 {
    let [x1, x2, x3, x4] = q;
    0.25 * (raw_source(c, band, [x1, x2, x3, x4])
        + raw_source(c, band, [x3, x2, x1, x4])
        + raw_source(c, band, [x1, x4, x3, x2])
        + raw_source(c, band, [x3, x4, x1, x2]))
}

/// Tabulate [`mass_source_value`] on the grid's mode lattice `|m| <= kmax`.
pub fn mass_source_symbol(c: &TrilinearSymbol, band: &Band, grid: &Grid, kmax: i64) -> Result<SliceSymbol> {
    band.check(grid)?;
    if kmax < 0 {
        return Err(Error::InvalidConfig(format!("kmax must be >= 0, got {kmax}")));
    }
    Ok(SliceSymbol::from_fn(grid.dk(), kmax, |q| mass_source_value(c, band, q)))
}

/// Correction symbol solving `c4 - i d4sq b = 0` on the slice, i.e.
/// `b = -i c4 / d4sq`. Under `e^{-i xi^2 t}` linear propagation the
/// quartic form with symbol `b` has time derivative `-i d4sq b`, so this
/// choice cancels the quartic mass source.
pub fn correction_value(c4: Complex64, d4sq: f64) -> Complex64 {
    -I * c4 / d4sq
}

/// Quartic symbol `b4` defining `M# = M_a + B4(u, conj u, u, conj u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticCorrection {
    pub band: Band,
    pub symbol: SliceSymbol,
    /// Measured `sup |b4| <xi_hi> <xi_med>` over the stored slice.
    pub size_constant: f64,
    /// `|d4sq|` below this counts as exact resonance.
    pub resonance_guard: f64,
}

impl QuarticCorrection {
    pub fn zero(band: Band, dk: f64, kmax: i64) -> Self {
        Self {
            band,
            symbol: SliceSymbol::zeros(dk, kmax),
            size_constant: 0.0,
            resonance_guard: 0.5 * dk * dk,
        }
    }

    /// Source symbol and correction in one go.
    pub fn for_symbol(c: &TrilinearSymbol, band: Band, grid: &Grid, kmax: i64) -> Result<Self> {
        if c.as_constant().is_some_and(|mu| mu.im == 0.0) && band == Band::Global {
            return Ok(Self::zero(band, grid.dk(), kmax));
        }
        let c4 = mass_source_symbol(c, &band, grid, kmax)?;
        build_correction(&c4, band, 1e-10)
    }
}

/// Divide the source by the resonance function on the slice.
///
/// On the integer lattice `d4sq = 2 dk^2 (m1 - m2)(m2 - m3)` so any
/// nonzero value has magnitude at least `2 dk^2`; entries with smaller
/// `|d4sq|` are exact resonances and must carry a vanishing source
/// (`|c4| <= tolerance * max(1, max |c4|)`), otherwise (H2) fails.
pub fn build_correction(c4: &SliceSymbol, band: Band, tolerance: f64) -> Result<QuarticCorrection> {
    let dk = c4.dk();
    let guard = 0.5 * dk * dk;
    let limit = tolerance * c4.max_abs().max(1.0);
    let mut out = SliceSymbol::zeros(dk, c4.kmax());
    let mut size: f64 = 0.0;
    let mut violation = None;
    c4.for_each(|m1, m2, m3, m4, v| {
        let q = [m1, m2, m3, m4].map(|m| m as f64 * dk);
        let r = resonance_data(q);
        if r.d4sq.abs() < guard {
            if v.norm() > limit && violation.is_none() {
                violation = Some((q, v.norm()));
            }
            return;
        }
        let b = correction_value(v, r.d4sq);
        size = size.max(b.norm() * japanese(r.hi) * japanese(r.med));
        out.set(m1, m2, m3, b);
    });
    if let Some((quadruple, magnitude)) = violation {
        return Err(Error::H2Violation {
            quadruple,
            magnitude,
        });
    }
    Ok(QuarticCorrection {
        band,
        symbol: out,
        size_constant: size,
        resonance_guard: guard,
    })
}
