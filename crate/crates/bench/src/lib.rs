//! Fixtures shared by the benchmarks.

use cubiclab::experiments::DataFamily;
use cubiclab::{Field, Grid};

pub const SEPARABLE: &str = "separable:-1|1|1|1;0.5|sech(x/3)|sech(x/3)|sech(x/3)";

/// Unit-amplitude random band-limited field on `[0, 2 pi)`.
pub fn random_field(n_points: usize, kmax: i64) -> Field {
    let grid = Grid::new(n_points, std::f64::consts::TAU).expect("even grid");
    DataFamily::RandomModes { kmax, seed: 7, decay: 0.0 }
        .sample(&grid, 1.0)
        .expect("band fits the grid")
}
