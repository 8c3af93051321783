//! Evaluation of the trilinear form `C(u, conj u, u)`.
//!
//! In normalized spectral coefficients (see [`crate::spectral`]) the form is
//!
//! ```text
//! C^(xi4) = dk^2 / (2 pi) * sum_{xi1 - xi2 + xi3 = xi4} c(xi1, xi2, xi3) u^1 conj(u^2) u^3
//! ```
//!
//! with all four frequencies restricted to the grid modes (no wrap-around).
//! Pointwise-product paths reproduce this exactly through zero-padding by
//! a factor 2: products of three fields with modes in `[-N/2, N/2)` reach
//! at most `|m| < 3N/2`, so on `2N` points nothing aliases back onto the
//! retained band.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    normalized_to_raw, raw_to_normalized, tail_fraction, FftPair, Field, Grid,
};
use crate::symbols::{Structure, TrilinearSymbol};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest grid accepted by the dense `O(N^3)` oracle.
pub const DENSE_ORACLE_LIMIT: usize = 128;

/// Relative cross-approximation residual accepted without falling back.
pub const ACCEPTED_CROSS_RESIDUAL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    PointwiseConstant,
    Separable,
    DenseOracle,
}

/// Multiplier triple realizing one separable term
/// `alpha(xi1) beta(xi2) gamma(xi3)` as `(alpha u) * conj(conj(beta) u) * (gamma u)`.
#[derive(Debug, Clone)]
struct SeparableTerm {
    alpha: Vec<Complex64>,
    beta_conj: Vec<Complex64>,
    gamma: Vec<Complex64>,
}

#[derive(Debug, Clone)]
enum Strategy {
    PointwiseConstant(Complex64),
    Separable(Vec<SeparableTerm>),
    DenseOracle(Arc<Vec<Complex64>>),
}

/// Accuracy record of a cross approximation of a black-box symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossReport {
    pub rank: usize,
    /// Largest residual on the pivot-search lattice.
    pub sample_residual: f64,
    /// Largest residual on random off-lattice grid triples.
    pub validation_residual: f64,
    /// `sup |c|` on the pivot-search lattice.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrossOptions {
    pub max_rank: usize,
    pub tolerance: f64,
    pub sample_points: usize,
    pub validation_points: usize,
}

impl Default for CrossOptions {
    fn default() -> Self {
        Self {
            max_rank: 32,
            tolerance: 1e-12,
            sample_points: 48,
            validation_points: 4096,
        }
    }
}

/// How `C` is evaluated on one grid.
#[derive(Debug, Clone)]
pub struct NonlinearityPlan {
    grid: Grid,
    symbol: TrilinearSymbol,
    strategy: Strategy,
    pad_factor: usize,
    cross: Option<CrossReport>,
    tail_tolerance: Option<f64>,
}

/// Scratch buffers and FFT plans reused across evaluations.
#[derive(Debug)]
pub struct Workspace {
    fft: FftPair,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    g: Vec<Complex64>,
    acc: Vec<Complex64>,
}

impl NonlinearityPlan {
    /// Fastest exact strategy for the declared structure. Black-box
    /// symbols get a cross approximation; if its validation residual is
    /// above `ACCEPTED_CROSS_RESIDUAL` (relative) and the grid is small
    /// enough, the dense path is used instead.
    pub fn new(symbol: TrilinearSymbol, grid: Grid) -> Result<Self> {
        match symbol.structure() {
            Structure::Constant(_) => Self::with_strategy(symbol, grid, StrategyKind::PointwiseConstant),
            Structure::Separable(_) => Self::with_strategy(symbol, grid, StrategyKind::Separable),
            Structure::BlackBox(_) => {
                let plan = Self::cross_approximation(symbol, grid, &CrossOptions::default())?;
                let r = plan.cross.expect("cross plan carries a report");
                if r.validation_residual > ACCEPTED_CROSS_RESIDUAL * r.scale
                    && grid.n_points() <= DENSE_ORACLE_LIMIT
                {
                    let mut dense = Self::dense_oracle(plan.symbol, grid)?;
                    dense.cross = Some(r);
                    Ok(dense)
                } else {
                    Ok(plan)
                }
            }
        }
    }

    pub fn with_strategy(symbol: TrilinearSymbol, grid: Grid, kind: StrategyKind) -> Result<Self> {
        let strategy = match kind {
            StrategyKind::PointwiseConstant => match symbol.as_constant() {
                Some(mu) => Strategy::PointwiseConstant(mu),
                None => {
                    return Err(Error::InvalidStrategy {
                        strategy: "pointwise-constant",
                        reason: format!("symbol `{}` is not constant", symbol.label()),
                    })
                }
            },
            StrategyKind::Separable => match symbol.structure() {
                Structure::Constant(mu) => Strategy::Separable(vec![constant_term(&grid, *mu)]),
                Structure::Separable(terms) => {
                    let freqs = grid.frequencies();
                    Strategy::Separable(
                        terms
                            .iter()
                            .map(|t| SeparableTerm {
                                alpha: freqs
                                    .iter()
                                    .map(|&x| t.coefficient * t.factors[0].eval(x))
                                    .collect(),
                                beta_conj: freqs.iter().map(|&x| t.factors[1].eval(x).conj()).collect(),
                                gamma: freqs.iter().map(|&x| t.factors[2].eval(x)).collect(),
                            })
                            .collect(),
                    )
                }
                Structure::BlackBox(_) => {
                    return Self::cross_approximation(symbol, grid, &CrossOptions::default())
                }
            },
            StrategyKind::DenseOracle => {
                let n = grid.n_points();
                if n > DENSE_ORACLE_LIMIT {
                    return Err(Error::OracleTooLarge {
                        n,
                        limit: DENSE_ORACLE_LIMIT,
                    });
                }
                let freqs = grid.frequencies();
                let mut tensor = vec![ZERO; n * n * n];
                tensor.par_chunks_mut(n * n).enumerate().for_each(|(i, plane)| {
                    for j in 0..n {
                        for k in 0..n {
                            plane[j * n + k] = symbol.eval(freqs[i], freqs[j], freqs[k]);
                        }
                    }
                });
                Strategy::DenseOracle(Arc::new(tensor))
            }
        };
        let plan = Self {
            grid,
            symbol,
            strategy,
            pad_factor: 2,
            cross: None,
            tail_tolerance: None,
        };
        plan.check_finite()?;
        Ok(plan)
    }

    pub fn dense_oracle(symbol: TrilinearSymbol, grid: Grid) -> Result<Self> {
        Self::with_strategy(symbol, grid, StrategyKind::DenseOracle)
    }

    /// Greedy three-way cross approximation `c ~ sum_r f_r(xi1) g_r(xi2) h_r(xi3)`.
    ///
    /// Each step pivots on the largest residual over a subsampled lattice
    /// and adds the rank-one term interpolating the residual on the three
    /// fibers through the pivot.
    pub fn cross_approximation(symbol: TrilinearSymbol, grid: Grid, opts: &CrossOptions) -> Result<Self> {
        let freqs = grid.frequencies();
        let n = freqs.len();
        let s = opts.sample_points.clamp(1, n);
        let sample: Vec<usize> = (0..s).map(|i| i * n / s).collect();
        let mut residual: Vec<Complex64> = (0..s * s * s)
            .into_par_iter()
            .map(|idx| {
                let (a, b, c) = (idx / (s * s), (idx / s) % s, idx % s);
                symbol.eval(freqs[sample[a]], freqs[sample[b]], freqs[sample[c]])
            })
            .collect();
        let scale = residual.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut terms: Vec<(Vec<Complex64>, Vec<Complex64>, Vec<Complex64>)> = Vec::new();
        let eval_residual = |terms: &[(Vec<Complex64>, Vec<Complex64>, Vec<Complex64>)], i: usize, j: usize, k: usize| {
            let approx: Complex64 = terms.iter().map(|(f, g, h)| f[i] * g[j] * h[k]).sum();
            symbol.eval(freqs[i], freqs[j], freqs[k]) - approx
        };
        let mut sample_residual = scale;
        while terms.len() < opts.max_rank {
            let (pivot, max) = residual
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            sample_residual = max;
            if max <= opts.tolerance * scale.max(f64::MIN_POSITIVE) {
                break;
            }
            let (pi, pj, pk) = (
                sample[pivot / (s * s)],
                sample[(pivot / s) % s],
                sample[pivot % s],
            );
            let p = eval_residual(&terms, pi, pj, pk);
            let f: Vec<Complex64> = (0..n).map(|i| eval_residual(&terms, i, pj, pk)).collect();
            let g: Vec<Complex64> = (0..n).map(|j| eval_residual(&terms, pi, j, pk) / p).collect();
            let h: Vec<Complex64> = (0..n).map(|k| eval_residual(&terms, pi, pj, k) / p).collect();
            residual.par_iter_mut().enumerate().for_each(|(idx, r)| {
                let (a, b, c) = (sample[idx / (s * s)], sample[(idx / s) % s], sample[idx % s]);
                *r -= f[a] * g[b] * h[c];
            });
            terms.push((f, g, h));
            sample_residual = residual.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let validation_residual = (0..opts.validation_points)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(i, j, k)| eval_residual(&terms, i, j, k).norm())
            .reduce(|| 0.0, f64::max);
        let report = CrossReport {
            rank: terms.len(),
            sample_residual,
            validation_residual,
            scale,
        };
        let strategy = Strategy::Separable(
            terms
                .into_iter()
                .map(|(f, g, h)| SeparableTerm {
                    alpha: f,
                    beta_conj: g.iter().map(|v| v.conj()).collect(),
                    gamma: h,
                })
                .collect(),
        );
        let plan = Self {
            grid,
            symbol,
            strategy,
            pad_factor: 2,
            cross: Some(report),
            tail_tolerance: None,
        };
        plan.check_finite()?;
        Ok(plan)
    }

    fn check_finite(&self) -> Result<()> {
        let ok = |v: &[Complex64]| v.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        let fine = match &self.strategy {
            Strategy::PointwiseConstant(mu) => ok(&[*mu]),
            Strategy::Separable(terms) => terms
                .iter()
                .all(|t| ok(&t.alpha) && ok(&t.beta_conj) && ok(&t.gamma)),
            Strategy::DenseOracle(t) => ok(t),
        };
        if fine {
            Ok(())
        } else {
            Err(Error::SymbolEval(format!(
                "symbol `{}` is not finite on the grid frequencies",
                self.symbol.label()
            )))
        }
    }

    /// Zero-padding factor for the pointwise-product paths (1 disables
    /// dealiasing).
    pub fn with_pad_factor(mut self, pad: usize) -> Result<Self> {
        if pad == 0 {
            return Err(Error::InvalidConfig("pad factor must be >= 1".into()));
        }
        self.pad_factor = pad;
        Ok(self)
    }

    /// Reject inputs whose top-third spectral mass fraction exceeds `tol`.
    pub fn with_tail_tolerance(mut self, tol: Option<f64>) -> Self {
        self.tail_tolerance = tol;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn symbol(&self) -> &TrilinearSymbol {
        &self.symbol
    }

    pub fn pad_factor(&self) -> usize {
        self.pad_factor
    }

    pub fn kind(&self) -> StrategyKind {
        match self.strategy {
            Strategy::PointwiseConstant(_) => StrategyKind::PointwiseConstant,
            Strategy::Separable(_) => StrategyKind::Separable,
            Strategy::DenseOracle(_) => StrategyKind::DenseOracle,
        }
    }

    /// Number of rank-one terms on the separable path.
    pub fn rank(&self) -> Option<usize> {
        match &self.strategy {
            Strategy::Separable(t) => Some(t.len()),
            _ => None,
        }
    }

    pub fn cross_report(&self) -> Option<&CrossReport> {
        self.cross.as_ref()
    }

    /// Real constant `mu` when the plan is the pointwise path with a real
    /// symbol (the case handled by Strang splitting).
    pub fn real_constant(&self) -> Option<f64> {
        match self.strategy {
            Strategy::PointwiseConstant(mu) if mu.im == 0.0 => Some(mu.re),
            _ => None,
        }
    }

    pub fn workspace(&self) -> Workspace {
        let m = self.grid.n_points() * self.pad_factor;
        Workspace {
            fft: FftPair::new(m),
            a: vec![ZERO; m],
            b: vec![ZERO; m],
            g: vec![ZERO; m],
            acc: vec![ZERO; m],
        }
    }

    pub fn apply(&self, u: &Field) -> Result<Field> {
        if *u.grid() != self.grid {
            return Err(Error::GridMismatch {
                expected: self.grid.n_points(),
                got: u.grid().n_points(),
            });
        }
        if let Some(tol) = self.tail_tolerance {
            let fraction = tail_fraction(&self.grid, u.spectrum());
            if fraction > tol {
                return Err(Error::AliasingTail {
                    fraction,
                    tolerance: tol,
                });
            }
        }
        let mut ws = self.workspace();
        let mut out = vec![ZERO; self.grid.n_points()];
        self.apply_coeffs(&mut ws, u.spectrum(), &mut out);
        crate::spectral::inverse_transform(&crate::spectral::Spectrum::new(self.grid, out)?)
    }

    /// Normalized coefficients of `C(u)` from those of `u`.
    pub fn apply_coeffs(&self, ws: &mut Workspace, input: &[Complex64], out: &mut [Complex64]) {
        match &self.strategy {
            Strategy::PointwiseConstant(mu) => {
                let mu = *mu;
                self.to_padded_physical(ws, input, |_| Complex64::new(1.0, 0.0), Buf::A);
                for (acc, &a) in ws.acc.iter_mut().zip(&ws.a) {
                    *acc = mu * a.norm_sqr() * a;
                }
                self.from_padded_physical(ws, out);
            }
            Strategy::Separable(terms) => {
                ws.acc.iter_mut().for_each(|v| *v = ZERO);
                for t in terms {
                    self.to_padded_physical(ws, input, |j| t.alpha[j], Buf::A);
                    self.to_padded_physical(ws, input, |j| t.beta_conj[j], Buf::B);
                    self.to_padded_physical(ws, input, |j| t.gamma[j], Buf::G);
                    for (((acc, &a), &b), &g) in ws.acc.iter_mut().zip(&ws.a).zip(&ws.b).zip(&ws.g) {
                        *acc += a * b.conj() * g;
                    }
                }
                self.from_padded_physical(ws, out);
            }
            Strategy::DenseOracle(tensor) => self.dense(tensor, input, out),
        }
    }

    fn padded_grid(&self) -> Grid {
        self.grid.refined(self.pad_factor)
    }

    fn to_padded_physical(
        &self,
        ws: &mut Workspace,
        input: &[Complex64],
        weight: impl Fn(usize) -> Complex64,
        which: Buf,
    ) {
        let fine = self.padded_grid();
        let buf = match which {
            Buf::A => &mut ws.a,
            Buf::B => &mut ws.b,
            Buf::G => &mut ws.g,
        };
        buf.iter_mut().for_each(|v| *v = ZERO);
        for (j, &c) in input.iter().enumerate() {
            if let Some(slot) = fine.slot(self.grid.mode(j)) {
                buf[slot] = c * weight(j);
            }
        }
        normalized_to_raw(&fine, buf);
        ws.fft.inverse(buf);
        let inv = 1.0 / fine.n_points() as f64;
        buf.iter_mut().for_each(|v| *v *= inv);
    }

    fn from_padded_physical(&self, ws: &mut Workspace, out: &mut [Complex64]) {
        let fine = self.padded_grid();
        ws.fft.forward(&mut ws.acc);
        raw_to_normalized(&fine, &mut ws.acc);
        for (j, o) in out.iter_mut().enumerate() {
            *o = fine.slot(self.grid.mode(j)).map_or(ZERO, |s| ws.acc[s]);
        }
    }

    fn dense(&self, tensor: &[Complex64], input: &[Complex64], out: &mut [Complex64]) {
        let grid = self.grid;
        let n = grid.n_points();
        let scale = grid.dk() * grid.dk() / (2.0 * PI);
        out.par_iter_mut().enumerate().for_each(|(j4, o)| {
            let m4 = grid.mode(j4);
            let mut acc = ZERO;
            for j1 in 0..n {
                let m1 = grid.mode(j1);
                for j2 in 0..n {
                    let m3 = m4 - m1 + grid.mode(j2);
                    if let Some(j3) = grid.slot(m3) {
                        acc += tensor[(j1 * n + j2) * n + j3] * input[j1] * input[j2].conj() * input[j3];
                    }
                }
            }
            *o = scale * acc;
        });
    }
}

#[derive(Clone, Copy)]
enum Buf {
    A,
    B,
    G,
}

fn constant_term(grid: &Grid, mu: Complex64) -> SeparableTerm {
    let n = grid.n_points();
    SeparableTerm {
        alpha: vec![mu; n],
        beta_conj: vec![Complex64::new(1.0, 0.0); n],
        gamma: vec![Complex64::new(1.0, 0.0); n],
    }
}

/// `C(u, conj u, u)` as a field.
pub fn apply_nonlinearity(plan: &NonlinearityPlan, u: &Field) -> Result<Field> {
    plan.apply(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_band_limited(grid: Grid, seed: u64, kmax: i64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<Complex64> = (0..grid.n_points())
            .map(|j| {
                if grid.mode(j).abs() <= kmax {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    ZERO
                }
            })
            .collect();
        crate::spectral::inverse_transform(&crate::spectral::Spectrum::new(grid, coeffs).unwrap()).unwrap()
    }

    fn random_full(grid: Grid, seed: u64) -> Field {
        random_band_limited(grid, seed, grid.n_points() as i64)
    }

    fn rank_two() -> TrilinearSymbol {
        TrilinearSymbol::parse("separable:-1|1|1|1;0.5,0.2|sech(x/3)|cos(x/5)|sech(x/3)").unwrap()
    }

    #[test]
    fn constant_on_plane_wave() {
        let g = Grid::unit_lattice(64).unwrap();
        let a = Complex64::new(0.6, -0.3);
        let u = Field::from_fn(g, |x| a * Complex64::from_polar(1.0, 3.0 * x)).unwrap();
        let plan = NonlinearityPlan::new(TrilinearSymbol::real_constant(-2.0), g).unwrap();
        let out = plan.apply(&u).unwrap();
        let expected = u.scale(Complex64::new(-2.0 * a.norm_sqr(), 0.0));
        assert!(out.relative_l2_error(&expected) < 1e-13);
    }

    #[test]
    fn zero_in_zero_out() {
        let g = Grid::new(32, 10.0).unwrap();
        let plan = NonlinearityPlan::new(rank_two(), g).unwrap();
        assert_eq!(plan.apply(&Field::zeros(g)).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn separable_matches_dense_oracle() {
        let g = Grid::new(64, 2.0 * PI * 1.5).unwrap();
        let u = random_full(g, 4);
        let fast = NonlinearityPlan::new(rank_two(), g).unwrap().apply(&u).unwrap();
        let slow = NonlinearityPlan::dense_oracle(rank_two(), g).unwrap().apply(&u).unwrap();
        assert!(fast.relative_l2_error(&slow) < 1e-10, "{}", fast.relative_l2_error(&slow));
    }

    #[test]
    fn constant_matches_dense_oracle_including_nyquist() {
        let g = Grid::unit_lattice(32).unwrap();
        let u = random_full(g, 9);
        let mu = TrilinearSymbol::constant(Complex64::new(-2.0, 0.4));
        let fast = NonlinearityPlan::new(mu.clone(), g).unwrap().apply(&u).unwrap();
        let slow = NonlinearityPlan::dense_oracle(mu, g).unwrap().apply(&u).unwrap();
        assert!(fast.relative_l2_error(&slow) < 1e-12);
    }

    #[test]
    fn cross_approximation_of_black_box() {
        let g = Grid::new(64, 4.0 * PI).unwrap();
        let c = TrilinearSymbol::parse("expr:-1 - 0.3*cos((x1-x2)/6)*exp(-(x3-x2)^2/200)").unwrap();
        let plan = NonlinearityPlan::cross_approximation(c.clone(), g, &CrossOptions::default()).unwrap();
        let report = *plan.cross_report().unwrap();
        assert_eq!(report.rank, 32);
        let u = random_full(g, 2);
        let fast = plan.apply(&u).unwrap();
        let slow = NonlinearityPlan::dense_oracle(c.clone(), g).unwrap().apply(&u).unwrap();
        let err = fast.relative_l2_error(&slow);
        // The recorded residual bounds the realized error.
        assert!(err < report.validation_residual / report.scale, "err {err} report {report:?}");
        assert!(err < 1e-3);
        // The automatic plan prefers exactness on small grids.
        let auto = NonlinearityPlan::new(c, g).unwrap();
        assert_eq!(auto.kind(), StrategyKind::DenseOracle);
        assert!(auto.apply(&u).unwrap().relative_l2_error(&slow) < 1e-14);
    }

    #[test]
    fn cross_approximation_exact_for_low_rank_black_box() {
        let g = Grid::new(64, 4.0 * PI).unwrap();
        let c = TrilinearSymbol::parse("expr:-1 + 0.4*cos(x1/4)*sech(x2/5)*cos(x3/4)").unwrap();
        let plan = NonlinearityPlan::new(c.clone(), g).unwrap();
        assert_eq!(plan.kind(), StrategyKind::Separable);
        assert!(plan.rank().unwrap() <= 4);
        let u = random_full(g, 5);
        let slow = NonlinearityPlan::dense_oracle(c, g).unwrap().apply(&u).unwrap();
        assert!(plan.apply(&u).unwrap().relative_l2_error(&slow) < 1e-10);
    }

    #[test]
    fn cross_report_is_honest_for_hard_symbols() {
        // A narrow kernel needs far more than the rank cap; the recorded
        // residual must say so.
        let g = Grid::new(64, 4.0 * PI).unwrap();
        let c = TrilinearSymbol::parse("expr:-1 - 0.5*exp(-(x1-x2)^2/8 - (x3-x2)^2/8)").unwrap();
        let opts = CrossOptions { max_rank: 8, ..CrossOptions::default() };
        let plan = NonlinearityPlan::cross_approximation(c.clone(), g, &opts).unwrap();
        let report = *plan.cross_report().unwrap();
        assert_eq!(report.rank, 8);
        assert!(report.validation_residual > 1e-3);
        let dense = NonlinearityPlan::dense_oracle(c, g).unwrap();
        let u = random_full(g, 8);
        let err = plan.apply(&u).unwrap().relative_l2_error(&dense.apply(&u).unwrap());
        assert!(err > 1e-6);
    }

    #[test]
    fn oracle_size_limit() {
        let g = Grid::new(256, 1.0).unwrap();
        assert!(matches!(
            NonlinearityPlan::dense_oracle(rank_two(), g),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn pointwise_requires_constant() {
        let g = Grid::new(16, 1.0).unwrap();
        assert!(NonlinearityPlan::with_strategy(rank_two(), g, StrategyKind::PointwiseConstant).is_err());
    }

    #[test]
    fn tail_flagged() {
        let g = Grid::new(32, 5.0).unwrap();
        let plan = NonlinearityPlan::new(TrilinearSymbol::real_constant(1.0), g)
            .unwrap()
            .with_tail_tolerance(Some(1e-6));
        assert!(matches!(plan.apply(&random_full(g, 1)), Err(Error::AliasingTail { .. })));
        assert!(plan.apply(&random_band_limited(g, 1, 4)).is_ok());
    }

    #[test]
    fn translation_invariance() {
        let g = Grid::new(64, 12.0).unwrap();
        let u = random_band_limited(g, 3, 12);
        let plan = NonlinearityPlan::new(rank_two(), g).unwrap();
        let a = plan.apply(&u.translate(0.37)).unwrap();
        let b = plan.apply(&u).unwrap().translate(0.37);
        assert!(a.relative_l2_error(&b) < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn phase_rotation_equivariance(seed in 0u64..500, theta in -PI..PI) {
                let g = Grid::new(32, 9.0).unwrap();
                let u = random_full(g, seed);
                let rot = Complex64::from_polar(1.0, theta);
                for plan in [
                    NonlinearityPlan::new(rank_two(), g).unwrap(),
                    NonlinearityPlan::new(TrilinearSymbol::real_constant(-2.0), g).unwrap(),
                ] {
                    let a = plan.apply(&u.scale(rot)).unwrap();
                    let b = plan.apply(&u).unwrap().scale(rot);
                    prop_assert!(a.relative_l2_error(&b) < 1e-12);
                }
            }

            #[test]
            fn cubic_homogeneity(seed in 0u64..500, lambda in 0.1f64..3.0) {
                let g = Grid::new(32, 9.0).unwrap();
                let u = random_full(g, seed);
                let l = Complex64::new(lambda, 0.0);
                for plan in [
                    NonlinearityPlan::new(rank_two(), g).unwrap(),
                    NonlinearityPlan::new(TrilinearSymbol::real_constant(-2.0), g).unwrap(),
                ] {
                    let a = plan.apply(&u.scale(l)).unwrap();
                    let b = plan.apply(&u).unwrap().scale(l * l * l);
                    prop_assert!(a.relative_l2_error(&b) < 1e-12);
                }
            }
        }
    }
}
