//! Rank-one cutting-and-stacking constructions and numerical checks of the
//! weak closure of their powers.
//!
//! * [`construction`] builds parameter sets: named examples and randomized
//!   P-constructions with Sidon spacers.
//! * [`series`] is the exact algebra of admissible functions `P(T)` and the
//!   semigroup they generate.
//! * [`occupancy`] places base-stage levels inside a taller tower.
//! * [`weaktop`] turns level correlations into weak-operator discrepancies
//!   and scans shifts for limit points.

pub mod acceptance;
pub mod construction;
pub mod error;
pub mod json;
pub mod occupancy;
pub mod oracle;
pub mod series;
pub mod weaktop;

pub use construction::{
    gen_example, gen_p_construction, heights, validate_params, ConstructionParams, ExampleKind,
    PConstructionSpec, SidonPolicy, StageParams,
};
pub use error::{ConstructionError, SeriesError, WeakError};
pub use occupancy::{expand_occupancy, LevelOccupancy};
pub use series::{adjoint, convolve, enumerate_semigroup, power, AdmissibleSeries, FormalElement};
