//! Resonance geometry, the division regions, trilinear symbols and the
//! quartic mass correction.

mod expr;
mod quartic;
mod regions;
mod resonance;
mod trilinear;

pub use expr::Expression;
pub use quartic::{
    build_correction, correction_value, mass_source_symbol, mass_source_value, QuarticCorrection,
    SliceSymbol,
};
pub use regions::{region_weights, region_weights_with, RegionThresholds, RegionWeights};
pub use resonance::{japanese, resonance_data, FreqQuadruple, ResonanceData};
pub use trilinear::{
    check_hypotheses, Classification, Factor, HypothesisRecord, RankOneTerm, SampleSpec,
    Structure, TrilinearSymbol,
};
