//! Initial-data families. Each family produces a fixed shape; the sweep
//! variable `eps` only rescales it.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{inverse_transform, Field, Grid, Spectrum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataFamily {
    /// Gaussian coefficients on the modes `|m| <= kmax`, weighted by
    /// `(1 + |xi|)^{-decay}`, normalized to unit L2 norm.
    RandomModes {
        kmax: i64,
        seed: u64,
        #[serde(default)]
        decay: f64,
    },
    /// `exp(-(x - center)^2 / (2 width^2) + i k0 x)`, unit L2 norm.
    Gaussian { center: f64, width: f64, k0: f64 },
    /// `Q_lambda(x) = lambda sech(lambda x)` with `lambda = eps^2`.
    Soliton,
    /// `eps exp(i xi_m x)` on the grid mode `m`.
    PlaneWave { mode: i64 },
}

impl DataFamily {
    pub fn name(&self) -> &'static str {
        match self {
            DataFamily::RandomModes { .. } => "random-modes",
            DataFamily::Gaussian { .. } => "gaussian",
            DataFamily::Soliton => "soliton",
            DataFamily::PlaneWave { .. } => "plane-wave",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            DataFamily::RandomModes { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    /// Shape at size `eps`: L2 norm `eps` for the normalized families,
    /// amplitude `eps` for plane waves, `lambda = eps^2` for solitons.
    pub fn sample(&self, grid: &Grid, eps: f64) -> Result<Field> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidConfig(format!("data size must be positive, got {eps}")));
        }
        match *self {
            DataFamily::RandomModes { kmax, seed, decay } => {
                if kmax < 0 || kmax >= grid.n_points() as i64 / 2 {
                    return Err(Error::BandOutOfRange {
                        band: kmax,
                        limit: grid.n_points() as i64 / 2 - 1,
                    });
                }
                let shape = random_modes(grid, kmax, seed, decay)?;
                Ok(normalized(shape, eps))
            }
            DataFamily::Gaussian { center, width, k0 } => {
                if !(width > 0.0) {
                    return Err(Error::InvalidConfig("gaussian width must be positive".into()));
                }
                let shape = Field::from_fn(*grid, |x| {
                    let y = (x - center) / width;
                    Complex64::from_polar((-0.5 * y * y).exp(), k0 * x)
                })?;
                Ok(normalized(shape, eps))
            }
            DataFamily::Soliton => soliton_profile(grid, eps * eps),
            DataFamily::PlaneWave { mode } => {
                if grid.slot(mode).is_none() {
                    return Err(Error::BandOutOfRange {
                        band: mode,
                        limit: grid.n_points() as i64 / 2,
                    });
                }
                let xi = mode as f64 * grid.dk();
                Field::from_fn(*grid, |x| Complex64::from_polar(eps, xi * x))
            }
        }
    }
}

fn normalized(shape: Field, eps: f64) -> Field {
    let norm = shape.l2_norm();
    shape.scale(Complex64::new(eps / norm, 0.0))
}

fn random_modes(grid: &Grid, kmax: i64, seed: u64, decay: f64) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.n_points()];
    // Draw in mode order so the shape does not depend on N.
    for m in -kmax..=kmax {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        let w = (1.0 + (m as f64 * grid.dk()).abs()).powf(-decay);
        let slot = grid.slot(m).expect("kmax checked against the grid");
        coeffs[slot] = Complex64::new(re, im) * w;
    }
    inverse_transform(&Spectrum::new(*grid, coeffs)?)
}

/// `lambda sech(lambda x)`.
pub fn soliton_profile(grid: &Grid, lambda: f64) -> Result<Field> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidConfig(format!("soliton scale must be positive, got {lambda}")));
    }
    Field::from_real_fn(*grid, |x| lambda / (lambda * x).cosh())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn normalized_families_have_size_eps() {
        let grid = Grid::new(128, 2.0 * PI).unwrap();
        for fam in [
            DataFamily::RandomModes {
                kmax: 5,
                seed: 7,
                decay: 0.0,
            },
            DataFamily::Gaussian {
                center: 0.3,
                width: 0.5,
                k0: 2.0,
            },
        ] {
            let u = fam.sample(&grid, 0.3).unwrap();
            assert!((u.l2_norm() - 0.3).abs() < 1e-13, "{}", fam.name());
        }
    }

    #[test]
    fn random_shape_is_grid_independent() {
        let fam = DataFamily::RandomModes {
            kmax: 4,
            seed: 11,
            decay: 1.0,
        };
        let coarse = fam.sample(&Grid::new(32, 2.0 * PI).unwrap(), 1.0).unwrap();
        let fine = fam.sample(&Grid::new(64, 2.0 * PI).unwrap(), 1.0).unwrap();
        // The fine grid interleaves the coarse one.
        for j in 0..32 {
            assert!((coarse.values()[j] - fine.values()[2 * j]).norm() < 1e-13);
        }
        let again = fam.sample(&Grid::new(32, 2.0 * PI).unwrap(), 1.0).unwrap();
        assert_eq!(coarse.values(), again.values());
    }

    #[test]
    fn eps_only_rescales() {
        let grid = Grid::new(64, 2.0 * PI).unwrap();
        let fam = DataFamily::RandomModes {
            kmax: 5,
            seed: 3,
            decay: 0.0,
        };
        let a = fam.sample(&grid, 0.2).unwrap();
        let b = fam.sample(&grid, 0.8).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x * 4.0 - y).norm() < 1e-14);
        }
    }

    #[test]
    fn soliton_mass_is_two_lambda() {
        for lambda in [0.25, 0.5, 1.0] {
            let grid = Grid::new(1024, 80.0 / lambda).unwrap();
            let u = soliton_profile(&grid, lambda).unwrap();
            assert!((u.l2_norm_sq() - 2.0 * lambda).abs() < 1e-8 * lambda);
        }
    }

    #[test]
    fn plane_wave_mode_must_exist() {
        let grid = Grid::new(16, 2.0 * PI).unwrap();
        assert!(DataFamily::PlaneWave { mode: 9 }.sample(&grid, 1.0).is_err());
        let u = DataFamily::PlaneWave { mode: 3 }.sample(&grid, 0.5).unwrap();
        assert!((u.max_abs() - 0.5).abs() < 1e-15);
    }
}
