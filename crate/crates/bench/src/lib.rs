//! Fixtures shared by the benchmarks.

use rankone::construction::GeneratedConstruction;
use rankone::{gen_p_construction, AdmissibleSeries, PConstructionSpec};

pub fn half() -> AdmissibleSeries {
    "1/2,1/2".parse().expect("valid series")
}

/// P=(1/2,1/2) build with `towers` towers and a fixed seed.
pub fn half_build(towers: usize) -> GeneratedConstruction {
    gen_p_construction(&PConstructionSpec::new(vec![half()], towers, 7)).expect("generation succeeds")
}
