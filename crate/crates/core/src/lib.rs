//! Pseudo-spectral laboratory for one-dimensional cubic dispersive flows
//!
//! ```text
//! i u_t + u_xx = C(u, conj(u), u)
//! ```
//!
//! where `C` is a translation-invariant trilinear form with symbol
//! `c(xi1, xi2, xi3)` and output frequency `xi1 - xi2 + xi3`.
//!
//! The crate is organised bottom-up: [`spectral`] owns grids and
//! transforms, [`symbols`] the resonance geometry and symbol algebra,
//! [`nonlinear`] evaluates `C`, [`evolve`] integrates the flow,
//! [`functionals`] and [`norms`] measure it, and [`experiments`] combines
//! everything into reproducible scaling studies.

pub mod config;
pub mod error;
pub mod evolve;
pub mod experiments;
pub mod functionals;
pub mod nonlinear;
pub mod norms;
pub mod persist;
pub mod selftest;
pub mod spectral;
pub mod symbols;

pub use error::{Error, Result};
pub use evolve::{EvolveConfig, ExitReason, RunOutput, RunState, Scheme, Snapshot};
pub use functionals::{DensityKind, DensityTag, MorawetzReport};
pub use nonlinear::{NonlinearityPlan, StrategyKind};
pub use norms::{Envelope, FieldSeries, SobolevFlavor};
pub use spectral::{Band, Field, Grid, Spectrum};
pub use symbols::{
    FreqQuadruple, QuarticCorrection, RegionWeights, ResonanceData, SliceSymbol, TrilinearSymbol,
};

pub use num_complex::Complex64;
