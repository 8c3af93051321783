//! Time integration of `i u_t + u_xx = C(u, conj u, u)`.
//!
//! Both schemes propagate the linear part exactly with `e^{-i xi^2 t}` on
//! normalized spectral coefficients `v`:
//!
//! * integrating-factor RK4 (Lawson form) for any symbol, with
//!   `N(v) = -i C^(v)` and `E = e^{-i xi^2 dt / 2}`:
//!   `k1 = N(v)`, `k2 = N(E(v + dt/2 k1))`, `k3 = N(E v + dt/2 k2)`,
//!   `k4 = N(E^2 v + dt E k3)`,
//!   `v' = E^2 v + dt/6 (E^2 k1 + 2 E (k2 + k3) + k4)`;
//! * Strang splitting for a real constant symbol `mu`: half step of the
//!   exact phase rotation `u e^{-i mu |u|^2 dt/2}`, full linear step,
//!   half phase rotation.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinear::{NonlinearityPlan, Workspace};
use crate::spectral::{
    inverse_normalized, forward_normalized, tail_fraction, Field, Grid, Spectrum,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Strang,
    IntegratingFactorRk4,
}

/// Early-exit thresholds; `None` disables a check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HealthThresholds {
    /// Exit once mass exceeds this multiple of the initial mass.
    pub mass_growth: Option<f64>,
    /// Exit once `max |u|` exceeds this value (checked at the cadence).
    pub amplitude_cap: Option<f64>,
    /// Exit once the top-third spectral mass fraction exceeds this value.
    pub tail_fraction: Option<f64>,
}

impl Default for HealthThresholds {
    fn default() -> Self {
        Self {
            mass_growth: Some(2.0),
            amplitude_cap: None,
            tail_fraction: Some(1e-6),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Diagnostics and health samples every `cadence` steps.
    pub cadence: usize,
    pub health: HealthThresholds,
}

impl EvolveConfig {
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        let cfg = Self {
            dt,
            t_end,
            scheme: Scheme::IntegratingFactorRk4,
            cadence: 1,
            health: HealthThresholds::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_cadence(mut self, cadence: usize) -> Result<Self> {
        self.cadence = cadence;
        self.validate()?;
        Ok(self)
    }

    pub fn with_health(mut self, health: HealthThresholds) -> Self {
        self.health = health;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidConfig(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if self.t_end > 0.0 && self.dt > self.t_end {
            return Err(Error::InvalidConfig(format!(
                "dt = {} exceeds t_end = {}",
                self.dt, self.t_end
            )));
        }
        if self.cadence == 0 {
            return Err(Error::InvalidConfig("cadence must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of steps and the step size that lands exactly on `t_end`.
    pub fn steps(&self) -> (usize, f64) {
        if self.t_end == 0.0 {
            return (0, self.dt);
        }
        let n = (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_end / n as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitReason {
    MassGrowth,
    AmplitudeCap,
    SpectralTail,
    NumericalBlowUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitRecord {
    pub reason: ExitReason,
    pub time: f64,
    pub step: usize,
}

/// Sticky health flags; once raised they stay raised.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthFlags {
    pub mass_growth: bool,
    pub amplitude_cap: bool,
    pub spectral_tail: bool,
    pub blow_up: bool,
}

impl HealthFlags {
    pub fn healthy(&self) -> bool {
        !(self.mass_growth || self.amplitude_cap || self.spectral_tail || self.blow_up)
    }

    fn raise(&mut self, reason: ExitReason) {
        match reason {
            ExitReason::MassGrowth => self.mass_growth = true,
            ExitReason::AmplitudeCap => self.amplitude_cap = true,
            ExitReason::SpectralTail => self.spectral_tail = true,
            ExitReason::NumericalBlowUp => self.blow_up = true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HealthSample {
    pub time: f64,
    pub mass: f64,
    pub max_amplitude: f64,
    pub tail_fraction: f64,
}

/// Solution state: normalized spectral coefficients at `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    grid: Grid,
    coeffs: Vec<Complex64>,
    pub time: f64,
    pub step: usize,
    pub initial_mass: f64,
    pub flags: HealthFlags,
    pub exit: Option<ExitRecord>,
}

impl RunState {
    pub fn start(initial: &Field) -> Self {
        let coeffs = initial.spectrum().to_vec();
        let grid = *initial.grid();
        let mass = mass_of(&grid, &coeffs);
        Self {
            grid,
            coeffs,
            time: 0.0,
            step: 0,
            initial_mass: mass,
            flags: HealthFlags::default(),
            exit: None,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn field(&self) -> Field {
        Field::new(self.grid, inverse_normalized(&self.grid, &self.coeffs))
            .expect("healthy state has finite values")
    }

    pub fn mass(&self) -> f64 {
        mass_of(&self.grid, &self.coeffs)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            schema: CHECKPOINT_SCHEMA.to_string(),
            n_points: self.grid.n_points(),
            length: self.grid.length(),
            time: self.time,
            step: self.step,
            initial_mass: self.initial_mass,
            re: self.coeffs.iter().map(|c| c.re).collect(),
            im: self.coeffs.iter().map(|c| c.im).collect(),
        }
    }

    pub fn from_checkpoint(cp: &Checkpoint) -> Result<Self> {
        if cp.schema != CHECKPOINT_SCHEMA {
            return Err(Error::InvalidConfig(format!("unknown checkpoint schema `{}`", cp.schema)));
        }
        let grid = Grid::new(cp.n_points, cp.length)?;
        if cp.re.len() != cp.n_points || cp.im.len() != cp.n_points {
            return Err(Error::GridMismatch {
                expected: cp.n_points,
                got: cp.re.len().min(cp.im.len()),
            });
        }
        let coeffs = cp.re.iter().zip(&cp.im).map(|(&re, &im)| Complex64::new(re, im)).collect();
        let spectrum = Spectrum::new(grid, coeffs)?;
        Ok(Self {
            grid,
            coeffs: spectrum.into_coeffs(),
            time: cp.time,
            step: cp.step,
            initial_mass: cp.initial_mass,
            flags: HealthFlags::default(),
            exit: None,
        })
    }
}

fn mass_of(grid: &Grid, coeffs: &[Complex64]) -> f64 {
    coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * grid.dk()
}

pub const CHECKPOINT_SCHEMA: &str = "cubiclab.checkpoint.v1";

/// Textual checkpoint. Field order: `schema, n_points, length, time,
/// step, initial_mass, re[], im[]`, the arrays holding the normalized
/// spectrum in FFT order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema: String,
    pub n_points: usize,
    pub length: f64,
    pub time: f64,
    pub step: usize,
    pub initial_mass: f64,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Immutable view handed to diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub time: f64,
    pub step: usize,
    pub field: &'a Field,
}

pub trait Diagnostic {
    fn observe(&mut self, snapshot: &Snapshot<'_>);
}

impl<F: FnMut(&Snapshot<'_>)> Diagnostic for F {
    fn observe(&mut self, snapshot: &Snapshot<'_>) {
        self(snapshot)
    }
}

/// Reusable single-step integrator for a fixed `dt` (which may be
/// negative for backward stepping).
pub struct Stepper<'a> {
    plan: &'a NonlinearityPlan,
    scheme: Scheme,
    dt: f64,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    ws: Workspace,
    k: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
}

impl<'a> Stepper<'a> {
    pub fn new(plan: &'a NonlinearityPlan, scheme: Scheme, dt: f64) -> Result<Self> {
        if scheme == Scheme::Strang && plan.real_constant().is_none() {
            return Err(Error::InvalidStrategy {
                strategy: "strang",
                reason: format!("needs a real constant symbol, got `{}`", plan.symbol().label()),
            });
        }
        let grid = plan.grid();
        let n = grid.n_points();
        let freqs = grid.frequencies();
        let phase = |t: f64| -> Vec<Complex64> {
            freqs.iter().map(|&xi| Complex64::from_polar(1.0, -xi * xi * t)).collect()
        };
        Ok(Self {
            plan,
            scheme,
            dt,
            half: phase(0.5 * dt),
            full: phase(dt),
            ws: plan.workspace(),
            k: std::array::from_fn(|_| vec![ZERO; n]),
            tmp: vec![ZERO; n],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `k[slot] = -i C^(tmp)`.
    fn rhs(&mut self, slot: usize) {
        let dst = &mut self.k[slot];
        self.plan.apply_coeffs(&mut self.ws, &self.tmp, dst);
        dst.iter_mut().for_each(|c| *c = Complex64::new(c.im, -c.re));
    }

    /// Advance `v` by one step in place.
    pub fn advance(&mut self, v: &mut [Complex64]) {
        match self.scheme {
            Scheme::IntegratingFactorRk4 => self.rk4(v),
            Scheme::Strang => self.strang(v),
        }
    }

    fn rk4(&mut self, v: &mut [Complex64]) {
        let h = self.dt;
        let n = v.len();
        // k1 = N(v)
        self.tmp.copy_from_slice(v);
        self.rhs(0);
        // k2 = N(E (v + h/2 k1))
        for j in 0..n {
            self.tmp[j] = self.half[j] * (v[j] + 0.5 * h * self.k[0][j]);
        }
        self.rhs(1);
        // k3 = N(E v + h/2 k2)
        for j in 0..n {
            self.tmp[j] = self.half[j] * v[j] + 0.5 * h * self.k[1][j];
        }
        self.rhs(2);
        // k4 = N(E^2 v + h E k3)
        for j in 0..n {
            self.tmp[j] = self.full[j] * v[j] + h * self.half[j] * self.k[2][j];
        }
        self.rhs(3);
        for j in 0..n {
            v[j] = self.full[j] * v[j]
                + h / 6.0
                    * (self.full[j] * self.k[0][j]
                        + 2.0 * self.half[j] * (self.k[1][j] + self.k[2][j])
                        + self.k[3][j]);
        }
    }

    fn strang(&mut self, v: &mut [Complex64]) {
        let mu = self.plan.real_constant().expect("checked in new");
        let grid = *self.plan.grid();
        let rotate = |u: &mut [Complex64], t: f64| {
            for z in u.iter_mut() {
                *z *= Complex64::from_polar(1.0, -mu * z.norm_sqr() * t);
            }
        };
        let mut u = inverse_normalized(&grid, v);
        rotate(&mut u, 0.5 * self.dt);
        let mut w = forward_normalized(&grid, &u);
        for (z, e) in w.iter_mut().zip(&self.full) {
            *z *= e;
        }
        let mut u = inverse_normalized(&grid, &w);
        rotate(&mut u, 0.5 * self.dt);
        v.copy_from_slice(&forward_normalized(&grid, &u));
    }
}

/// One step of size `config.dt`.
pub fn step(state: &mut RunState, config: &EvolveConfig, plan: &NonlinearityPlan) -> Result<()> {
    if !state.flags.healthy() {
        return Err(Error::InvalidConfig("cannot step an unhealthy state".into()));
    }
    let mut stepper = Stepper::new(plan, config.scheme, config.dt)?;
    stepper.advance(&mut state.coeffs);
    state.step += 1;
    state.time = state.step as f64 * config.dt;
    if !state.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        state.flags.raise(ExitReason::NumericalBlowUp);
        state.exit = Some(ExitRecord {
            reason: ExitReason::NumericalBlowUp,
            time: state.time,
            step: state.step,
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: RunState,
    pub health: Vec<HealthSample>,
    /// Step size actually used (adjusted to land on `t_end`).
    pub dt: f64,
}

impl RunOutput {
    pub fn completed(&self) -> bool {
        self.state.exit.is_none()
    }
}

/// Integrate from `initial` to `config.t_end` or an early exit.
pub fn run(
    initial: &Field,
    config: &EvolveConfig,
    plan: &NonlinearityPlan,
    diagnostics: &mut [&mut dyn Diagnostic],
) -> Result<RunOutput> {
    resume(RunState::start(initial), config, plan, diagnostics)
}

/// Continue a state (fresh or from a checkpoint) up to `config.t_end`.
pub fn resume(
    mut state: RunState,
    config: &EvolveConfig,
    plan: &NonlinearityPlan,
    diagnostics: &mut [&mut dyn Diagnostic],
) -> Result<RunOutput> {
    config.validate()?;
    if *plan.grid() != state.grid {
        return Err(Error::GridMismatch {
            expected: plan.grid().n_points(),
            got: state.grid.n_points(),
        });
    }
    let (n_steps, dt) = config.steps();
    let t0 = state.time;
    let first = state.step;
    let remaining = if state.step == 0 {
        n_steps
    } else {
        ((config.t_end - t0) / dt).round().max(0.0) as usize
    };
    let mut stepper = Stepper::new(plan, config.scheme, dt)?;
    let mut health = Vec::new();
    let th = config.health;
    let observe = |state: &mut RunState,
                   health: &mut Vec<HealthSample>,
                   diagnostics: &mut [&mut dyn Diagnostic]| {
        let field = state.field();
        let sample = HealthSample {
            time: state.time,
            mass: state.mass(),
            max_amplitude: field.max_abs(),
            tail_fraction: tail_fraction(&state.grid, &state.coeffs),
        };
        health.push(sample);
        let snap = Snapshot {
            time: state.time,
            step: state.step,
            field: &field,
        };
        for d in diagnostics.iter_mut() {
            d.observe(&snap);
        }
        sample
    };
    let over_cap = |sample: &HealthSample| th.amplitude_cap.is_some_and(|cap| sample.max_amplitude > cap);
    if over_cap(&observe(&mut state, &mut health, diagnostics)) {
        exit(&mut state, ExitReason::AmplitudeCap);
    }
    for i in 0..remaining {
        if state.exit.is_some() {
            break;
        }
        stepper.advance(&mut state.coeffs);
        state.step += 1;
        state.time = t0 + (i + 1) as f64 * dt;
        let mass = state.mass();
        if !mass.is_finite() {
            exit(&mut state, ExitReason::NumericalBlowUp);
            break;
        }
        if let Some(g) = th.mass_growth {
            if mass > g * state.initial_mass {
                exit(&mut state, ExitReason::MassGrowth);
            }
        }
        if let Some(tol) = th.tail_fraction {
            if tail_fraction(&state.grid, &state.coeffs) > tol {
                exit(&mut state, ExitReason::SpectralTail);
            }
        }
        let at_cadence = (state.step - first) % config.cadence == 0 || i + 1 == remaining;
        if at_cadence || state.exit.is_some() {
            let sample = observe(&mut state, &mut health, diagnostics);
            if state.exit.is_none() && over_cap(&sample) {
                exit(&mut state, ExitReason::AmplitudeCap);
            }
        }
    }
    Ok(RunOutput { state, health, dt })
}

fn exit(state: &mut RunState, reason: ExitReason) {
    state.flags.raise(reason);
    if state.exit.is_none() {
        state.exit = Some(ExitRecord {
            reason,
            time: state.time,
            step: state.step,
        });
    }
}

/// Step size `0.1 / max(1, ||u0||_inf^2 sup|c|)`, halved until two
/// successive halvings agree to `tol` (relative) in the final mass.
pub fn auto_dt(initial: &Field, t_end: f64, plan: &NonlinearityPlan, scheme: Scheme, tol: f64) -> Result<f64> {
    let amp = initial.max_abs();
    let sup_c = plan.symbol().sup_on_grid(plan.grid());
    let mut dt = 0.1 / (amp * amp * sup_c).max(1.0);
    if t_end <= 0.0 {
        return Ok(dt);
    }
    dt = dt.min(t_end);
    let final_mass = |dt: f64| -> Result<f64> {
        let cfg = EvolveConfig::new(dt, t_end)?
            .with_scheme(scheme)
            .with_cadence(usize::MAX)?
            .with_health(HealthThresholds {
                mass_growth: None,
                amplitude_cap: None,
                tail_fraction: None,
            });
        Ok(run(initial, &cfg, plan, &mut [])?.state.mass())
    };
    let mut prev = final_mass(dt)?;
    let mut cur = final_mass(0.5 * dt)?;
    while dt > 1e-6 {
        let next = final_mass(0.25 * dt)?;
        let scale = next.abs().max(f64::MIN_POSITIVE);
        if (prev - cur).abs() <= tol * scale && (cur - next).abs() <= tol * scale {
            return Ok(0.5 * dt);
        }
        dt *= 0.5;
        prev = cur;
        cur = next;
    }
    Ok(dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::apply_multiplier;
    use crate::symbols::TrilinearSymbol;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn no_health() -> HealthThresholds {
        HealthThresholds {
            mass_growth: None,
            amplitude_cap: None,
            tail_fraction: None,
        }
    }

    fn smooth_random(grid: Grid, seed: u64, kmax: i64, amp: f64) -> Field {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<Complex64> = (0..grid.n_points())
            .map(|j| {
                if grid.mode(j).abs() <= kmax {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    ZERO
                }
            })
            .collect();
        let f = crate::spectral::inverse_transform(&Spectrum::new(grid, coeffs).unwrap()).unwrap();
        let norm = f.l2_norm();
        f.scale(Complex64::new(amp / norm, 0.0))
    }

    #[test]
    fn plane_wave_exact() {
        let g = Grid::unit_lattice(256).unwrap();
        let (a, k, mu) = (0.8, 3.0, -2.0);
        let u0 = Field::from_fn(g, |x| Complex64::from_polar(a, k * x)).unwrap();
        let plan = NonlinearityPlan::new(TrilinearSymbol::real_constant(mu), g).unwrap();
        for scheme in [Scheme::IntegratingFactorRk4, Scheme::Strang] {
            let cfg = EvolveConfig::new(1e-3, 1.0).unwrap().with_scheme(scheme).with_cadence(1000).unwrap();
            let out = run(&u0, &cfg, &plan, &mut []).unwrap();
            let t = out.state.time;
            let exact = Field::from_fn(g, |x| Complex64::from_polar(a, k * x - k * k * t - mu * a * a * t)).unwrap();
            assert!((t - 1.0).abs() < 1e-12);
            assert!(out.state.field().relative_l2_error(&exact) < 1e-8);
        }
    }

    #[test]
    fn constant_field_focusing_phase() {
        let g = Grid::new(16, 5.0).unwrap();
        let u0 = Field::from_fn(g, |_| Complex64::new(1.0, 0.0)).unwrap();
        let plan = NonlinearityPlan::new(TrilinearSymbol::real_constant(-2.0), g).unwrap();
        let cfg = EvolveConfig::new(1e-3, 0.7).unwrap();
        let out = run(&u0, &cfg, &plan, &mut []).unwrap();
        let exact = Field::from_fn(g, |_| Complex64::from_polar(1.0, 2.0 * 0.7)).unwrap();
        assert!(out.state.field().relative_l2_error(&exact) < 1e-10);
    }

    #[test]
    fn free_gaussian() {
        let g = Grid::new(512, 120.0).unwrap();
        let u0 = Field::from_real_fn(g, |x| (-0.5 * x * x).exp()).unwrap();
        let plan = NonlinearityPlan::new(TrilinearSymbol::real_constant(0.0), g).unwrap();
        let cfg = EvolveConfig::new(0.05, 1.0).unwrap();
        let out = run(&u0, &cfg, &plan, &mut []).unwrap();
        let exact = Field::from_fn(g, |x| {
            let z = Complex64::new(1.0, 2.0);
            (-(x * x) / (2.0 * z)).exp() / z.sqrt()
        })
        .unwrap();
        assert!(out.state.field().relative_l2_error(&exact) < 1e-8);
    }

    #[test]
    fn soliton_holds_shape() {
        let g = Grid::new(512, 20.0 * PI).unwrap();
        let u0 = Field::from_real_fn(g, |x| 1.0 / x.cosh()).unwrap();
        let plan = NonlinearityPlan::new(TrilinearSymbol::real_constant(-2.0), g).unwrap();
        let cfg = EvolveConfig::new(2e-3, 10.0).unwrap().with_cadence(1000).unwrap();
        let out = run(&u0, &cfg, &plan, &mut []).unwrap();
        assert!(out.completed());
        let exact = u0.scale(Complex64::from_polar(1.0, 10.0));
        assert!(out.state.field().relative_l2_error(&exact) < 1e-6);
    }

    #[test]
    fn rk4_fourth_order() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let u0 = smooth_random(g, 1, 4, 1.5);
        let c = TrilinearSymbol::parse("separable:-1|1|1|1;0.5|sech(x/3)|sech(x/3)|sech(x/3)").unwrap();
        let plan = NonlinearityPlan::new(c, g).unwrap();
        let solve = |dt: f64| {
            let cfg = EvolveConfig::new(dt, 1.0).unwrap().with_cadence(100000).unwrap().with_health(no_health());
            run(&u0, &cfg, &plan, &mut []).unwrap().state.field()
        };
        let reference = solve(1e-3);
        let dts = [0.05, 0.025, 0.0125, 0.00625];
        let errs: Vec<f64> = dts.iter().map(|&dt| solve(dt).relative_l2_error(&reference)).collect();
        let x: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
        let y: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let (mx, my) = (x.iter().sum::<f64>() / 4.0, y.iter().sum::<f64>() / 4.0);
        let slope = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
            / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
        assert!(slope >= 3.8, "order {slope}, errors {errs:?}");
    }

    #[test]
    fn zero_stays_zero() {
        let g = Grid::new(32, 10.0).unwrap();
        let plan = NonlinearityPlan::new(TrilinearSymbol::real_constant(-2.0), g).unwrap();
        let cfg = EvolveConfig::new(0.1, 1.0).unwrap().with_health(HealthThresholds {
            mass_growth: Some(2.0),
            ..no_health()
        });
        let out = run(&Field::zeros(g), &cfg, &plan, &mut []).unwrap();
        assert_eq!(out.state.field().l2_norm(), 0.0);
    }

    #[test]
    fn mass_conserved_for_real_constant() {
        let g = Grid::new(128, 30.0).unwrap();
        let u0 = Field::from_fn(g, |x| Complex64::new((-x * x / 8.0).exp(), 0.3 * (-x * x / 4.0).exp() * x)).unwrap();
        let plan = NonlinearityPlan::new(TrilinearSymbol::real_constant(-2.0), g).unwrap();
        for scheme in [Scheme::Strang, Scheme::IntegratingFactorRk4] {
            let cfg = EvolveConfig::new(1e-3, 10.0).unwrap().with_scheme(scheme).with_cadence(10_000).unwrap();
            let out = run(&u0, &cfg, &plan, &mut []).unwrap();
            let rel = (out.state.mass() - out.state.initial_mass).abs() / out.state.initial_mass;
            assert!(rel <= 1e-10, "{scheme:?}: {rel}");
        }
    }

    #[test]
    fn free_flow_conserves_band_masses() {
        let g = Grid::new(128, 40.0).unwrap();
        let u0 = smooth_random(g, 2, 30, 1.0);
        let plan = NonlinearityPlan::new(TrilinearSymbol::real_constant(0.0), g).unwrap();
        let cfg = EvolveConfig::new(0.01, 3.0).unwrap().with_health(no_health());
        let out = run(&u0, &cfg, &plan, &mut []).unwrap();
        let u1 = out.state.field();
        for k in -3..=3 {
            let a = crate::spectral::band_project(&u0, k).unwrap().l2_norm_sq();
            let b = crate::spectral::band_project(&u1, k).unwrap().l2_norm_sq();
            assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }
    }

    #[test]
    fn strang_time_reversible() {
        let g = Grid::new(128, 30.0).unwrap();
        let u0 = Field::from_real_fn(g, |x| 1.2 * (-x * x / 4.0).exp()).unwrap();
        let plan = NonlinearityPlan::new(TrilinearSymbol::real_constant(-2.0), g).unwrap();
        let mut v = u0.spectrum().to_vec();
        let mut fwd = Stepper::new(&plan, Scheme::Strang, 0.01).unwrap();
        let mut bwd = Stepper::new(&plan, Scheme::Strang, -0.01).unwrap();
        for _ in 0..200 {
            fwd.advance(&mut v);
        }
        for _ in 0..200 {
            bwd.advance(&mut v);
        }
        let back = Field::new(g, inverse_normalized(&g, &v)).unwrap();
        assert!(back.relative_l2_error(&u0) < 1e-9);
    }

    #[test]
    fn strang_rejects_variable_symbol() {
        let g = Grid::new(16, 5.0).unwrap();
        let plan = NonlinearityPlan::new(TrilinearSymbol::parse("separable:1|1|1|1").unwrap(), g).unwrap();
        assert!(Stepper::new(&plan, Scheme::Strang, 0.1).is_err());
    }

    #[test]
    fn exits_on_mass_growth_and_flags_stick() {
        let g = Grid::new(64, 40.0).unwrap();
        let u0 = Field::from_real_fn(g, |x| 0.5 * (-x * x / 8.0).exp()).unwrap();
        let c = TrilinearSymbol::constant(Complex64::new(-2.0, 1.0));
        let plan = NonlinearityPlan::new(c, g).unwrap();
        let cfg = EvolveConfig::new(0.01, 200.0)
            .unwrap()
            .with_cadence(10)
            .unwrap()
            .with_health(HealthThresholds {
                mass_growth: Some(2.0),
                ..no_health()
            });
        let out = run(&u0, &cfg, &plan, &mut []).unwrap();
        let exit = out.state.exit.expect("non-conservative symbol must exit");
        assert_eq!(exit.reason, ExitReason::MassGrowth);
        assert!(out.state.flags.mass_growth && !out.state.flags.healthy());
        assert!(exit.time < 200.0);
        assert!(out.health.last().unwrap().mass > 2.0 * out.state.initial_mass);
    }

    #[test]
    fn time_matches_step_count() {
        let g = Grid::new(16, 5.0).unwrap();
        let plan = NonlinearityPlan::new(TrilinearSymbol::real_constant(1.0), g).unwrap();
        let cfg = EvolveConfig::new(0.3, 1.0).unwrap();
        let mut times = Vec::new();
        let mut rec = |s: &Snapshot<'_>| times.push((s.step, s.time));
        let out = run(&Field::zeros(g), &cfg, &plan, &mut [&mut rec]).unwrap();
        assert!((out.dt - 0.25).abs() < 1e-15);
        for (k, t) in times {
            assert!((t - k as f64 * out.dt).abs() < 1e-12);
        }
    }

    #[test]
    fn checkpoint_round_trip_and_resume() {
        let g = Grid::new(64, 20.0).unwrap();
        let u0 = Field::from_real_fn(g, |x| (-x * x / 4.0).exp()).unwrap();
        let plan = NonlinearityPlan::new(TrilinearSymbol::real_constant(-2.0), g).unwrap();
        let full = EvolveConfig::new(0.01, 1.0).unwrap();
        let half = EvolveConfig::new(0.01, 0.5).unwrap();
        let straight = run(&u0, &full, &plan, &mut []).unwrap().state;
        let mid = run(&u0, &half, &plan, &mut []).unwrap().state;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cp.json");
        mid.to_checkpoint().save(&path).unwrap();
        let loaded = RunState::from_checkpoint(&Checkpoint::load(&path).unwrap()).unwrap();
        assert_eq!(loaded.coeffs(), mid.coeffs());
        let resumed = resume(loaded, &full, &plan, &mut []).unwrap().state;
        assert_eq!(resumed.step, straight.step);
        assert!(resumed.field().relative_l2_error(&straight.field()) < 1e-13);
    }

    #[test]
    fn auto_dt_reasonable() {
        let g = Grid::new(64, 20.0).unwrap();
        let u0 = Field::from_real_fn(g, |x| 1.0 / x.cosh()).unwrap();
        let plan = NonlinearityPlan::new(TrilinearSymbol::real_constant(-2.0), g).unwrap();
        let dt = auto_dt(&u0, 1.0, &plan, Scheme::IntegratingFactorRk4, 1e-6).unwrap();
        assert!(dt <= 0.05 && dt >= 1e-6);
    }

    #[test]
    fn linear_step_matches_multiplier() {
        let g = Grid::new(64, 20.0).unwrap();
        let u0 = Field::from_real_fn(g, |x| (-x * x).exp()).unwrap();
        let plan = NonlinearityPlan::new(TrilinearSymbol::real_constant(0.0), g).unwrap();
        let mut s = RunState::start(&u0);
        let cfg = EvolveConfig::new(0.1, 1.0).unwrap();
        step(&mut s, &cfg, &plan).unwrap();
        let exact = apply_multiplier(&u0, |xi| Complex64::from_polar(1.0, -xi * xi * 0.1));
        assert!(s.field().relative_l2_error(&exact) < 1e-14);
    }
}
