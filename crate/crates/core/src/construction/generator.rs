//! Randomized P-constructions and (P_1, ..., P_k)-constructions.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

use super::sampling::{sample_with, verify_frequencies, FrequencyReport, RNG_ALGORITHM};
use super::sidon::{apply_sidon_at, SidonPolicy};
use super::{next_height, ConstructionParams, Meta, StageParams};
use crate::error::ConstructionError;
use crate::series::AdmissibleSeries;

/// Relative frequency tolerance per stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsSchedule {
    /// `1 / (j + 1)`.
    InverseStage,
    Constant(f64),
}

impl EpsSchedule {
    pub fn at(self, j: usize) -> f64 {
        match self {
            EpsSchedule::InverseStage => 1.0 / (j as f64 + 1.0),
            EpsSchedule::Constant(e) => e,
        }
    }

    fn to_json(self) -> Value {
        match self {
            EpsSchedule::InverseStage => json!("1/(j+1)"),
            EpsSchedule::Constant(e) => json!(e),
        }
    }
}

/// Column count search: start at `max(stage_factor * j, min_r)` and multiply
/// by `growth` until the frequency check passes or `max_r` is exceeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RPolicy {
    pub min_r: usize,
    pub stage_factor: usize,
    pub growth: usize,
    pub max_r: usize,
    /// Window orders checked at stage `j` are `1..=min(j, max_m_cap)`.
    pub max_m_cap: usize,
}

impl Default for RPolicy {
    fn default() -> Self {
        RPolicy { min_r: 16, stage_factor: 2, growth: 2, max_r: 1 << 17, max_m_cap: 4 }
    }
}

impl RPolicy {
    pub fn start(&self, j: usize) -> usize {
        (self.stage_factor * j).max(self.min_r).max(2)
    }

    pub fn max_m(&self, j: usize) -> usize {
        j.min(self.max_m_cap).max(1)
    }

    fn to_json(self) -> Value {
        json!({
            "min_r": self.min_r,
            "stage_factor": self.stage_factor,
            "growth": self.growth,
            "max_r": self.max_r,
            "max_m_cap": self.max_m_cap,
        })
    }
}

#[derive(Debug, Clone)]
pub struct PConstructionSpec {
    pub generators: Vec<AdmissibleSeries>,
    /// Number of towers `J`; stages `1..J` are generated.
    pub towers: usize,
    pub h1: u64,
    pub seed: u64,
    pub eps: EpsSchedule,
    pub r_policy: RPolicy,
    pub sidon: SidonPolicy,
}

impl PConstructionSpec {
    pub fn new(generators: Vec<AdmissibleSeries>, towers: usize, seed: u64) -> Self {
        PConstructionSpec {
            generators,
            towers,
            h1: 1,
            seed,
            eps: EpsSchedule::InverseStage,
            r_policy: RPolicy::default(),
            sidon: SidonPolicy::default(),
        }
    }

    /// Index of the generator driving stage `j`.
    pub fn generator_for(&self, j: usize) -> usize {
        j % self.generators.len()
    }

    fn policies_json(&self) -> Value {
        json!({
            "generators": self.generators.iter().map(|g| g.to_dense_string()).collect::<Vec<_>>(),
            "stage_rule": "q = j mod k",
            "eps": self.eps.to_json(),
            "r_policy": self.r_policy.to_json(),
            "sidon": self.sidon.to_json(),
            "frequency_windows": "i = 1..=r-m+1",
        })
    }
}

/// What happened at one stage of the generator.
#[derive(Debug, Clone)]
pub struct StageReport {
    pub stage: usize,
    pub generator: usize,
    pub r: usize,
    /// Raw draws for indices `1..=sampled`, before any Sidon overwrite.
    pub sample: Vec<u64>,
    pub frequencies: FrequencyReport,
    /// 1-based indices carrying Sidon values.
    pub sidon_indices: Vec<usize>,
    pub conforming: bool,
}

impl StageReport {
    pub fn sampled(&self) -> usize {
        self.sample.len()
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedConstruction {
    pub params: ConstructionParams,
    pub stages: Vec<StageReport>,
}

/// The point mass at 0, a valid (if not admissible) spacer law.
#[cfg(test)]
pub(crate) fn point_mass_distribution() -> AdmissibleSeries {
    AdmissibleSeries::lenient_from_dense(&[num_traits::One::one()]).expect("point mass")
}

/// Builds a (P_1, ..., P_k)-construction. Stage `j` uses `P_q`, `q = j mod k`:
/// `r_j` columns of which the first `floor(c r_j)` are i.i.d. draws from
/// `P_q / c` (`c = P_q(1)`), grown until the window frequencies pass; the
/// remaining columns and all multiples of `j` then carry one Sidon chain.
pub fn gen_p_construction(
    spec: &PConstructionSpec,
) -> Result<GeneratedConstruction, ConstructionError> {
    if spec.towers < 2 {
        return Err(ConstructionError::TooFewStages(2));
    }
    if spec.generators.is_empty() {
        return Err(ConstructionError::Format("no generators".into()));
    }
    if spec.h1 == 0 {
        return Err(ConstructionError::Format("h1 must be positive".into()));
    }
    let laws: Vec<(AdmissibleSeries, BigRational)> =
        spec.generators.iter().map(|g| (g.normalized(), g.mass())).collect();

    let mut params = ConstructionParams::new(spec.h1, Vec::with_capacity(spec.towers - 1));
    let mut reports = Vec::with_capacity(spec.towers - 1);
    let mut h = BigUint::from(spec.h1);
    let mut all_conforming = true;

    for j in 1..spec.towers {
        let q = spec.generator_for(j);
        let (law, mass) = &laws[q];
        let eps = spec.eps.at(j);
        let max_m = spec.r_policy.max_m(j);

        let mut r = spec.r_policy.start(j);
        let (sample, frequencies) = loop {
            let sampled = sampled_len(mass, r);
            let mut last = None;
            if sampled > max_m {
                let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
                rng.set_stream(j as u64);
                let sample = sample_with(law, sampled, &mut rng)?;
                let as_big: Vec<BigUint> = sample.iter().map(|&x| BigUint::from(x)).collect();
                let report = verify_frequencies(&as_big, law, max_m, eps)?;
                if report.passed {
                    break (sample, report);
                }
                last = Some(report);
            }
            let next = r.saturating_mul(spec.r_policy.growth.max(2));
            if next > spec.r_policy.max_r {
                let report = last.unwrap_or(FrequencyReport {
                    max_m,
                    eps,
                    len: sampled,
                    rows: Vec::new(),
                    passed: false,
                });
                return Err(ConstructionError::Generation { stage: j, r, report: Box::new(report) });
            }
            r = next;
        };

        let sampled = sample.len();
        let mut spacers: Vec<BigUint> = sample.iter().map(|&x| BigUint::from(x)).collect();
        spacers.resize(r, BigUint::default());
        let mut indices: Vec<usize> = (j..=r).step_by(j).collect();
        indices.extend(sampled + 1..=r);
        indices.sort_unstable();
        indices.dedup();
        let outcome = apply_sidon_at(&spacers, &indices, j, &h, &spec.sidon);
        all_conforming &= outcome.conforming;

        let stage = StageParams::new(outcome.spacers);
        h = next_height(&h, &stage);
        params.push_stage(stage);
        reports.push(StageReport {
            stage: j,
            generator: q,
            r,
            sample,
            frequencies,
            sidon_indices: outcome.indices,
            conforming: outcome.conforming,
        });
    }

    params.meta = Meta {
        generator: if spec.generators.len() == 1 { "p-construction" } else { "multi-p-construction" }
            .into(),
        seed: Some(spec.seed),
        rng: Some(RNG_ALGORITHM.into()),
        policies: spec.policies_json(),
        sidon_conforming: all_conforming,
    };
    Ok(GeneratedConstruction { params, stages: reports })
}

/// `floor(c r)`.
fn sampled_len(mass: &BigRational, r: usize) -> usize {
    (mass * BigRational::from_integer(r.into())).floor().to_integer().to_usize().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::satisfies_sidon;

    fn half() -> AdmissibleSeries {
        "1/2,1/2".parse().unwrap()
    }

    #[test]
    fn half_three_towers() {
        let spec = PConstructionSpec::new(vec![half()], 3, 11);
        let g = gen_p_construction(&spec).unwrap();
        assert_eq!(g.params.stages.len(), 2);
        let st = &g.stages[1];
        let sample: Vec<BigUint> = st.sample.iter().map(|&x| BigUint::from(x)).collect();
        assert!(verify_frequencies(&sample, &half(), 2, 1.0 / 3.0).unwrap().passed);
        // non-Sidon entries are the raw draws
        let spacers = &g.params.stages[1].spacers;
        for i in 1..=st.r {
            if i % 2 != 0 {
                assert_eq!(spacers[i - 1], sample[i - 1]);
            }
        }
        assert!(g.params.meta.sidon_conforming);
    }

    #[test]
    fn deterministic() {
        let spec = PConstructionSpec::new(vec![half()], 4, 5);
        let a = gen_p_construction(&spec).unwrap().params;
        let b = gen_p_construction(&spec).unwrap().params;
        assert_eq!(a, b);
        let other = gen_p_construction(&PConstructionSpec::new(vec![half()], 4, 6)).unwrap().params;
        assert_ne!(a, other);
    }

    #[test]
    fn point_mass_gives_zero_spacers() {
        let spec = PConstructionSpec::new(vec![point_mass_distribution()], 3, 1);
        let g = gen_p_construction(&spec).unwrap();
        for (st, report) in g.params.stages.iter().zip(&g.stages) {
            for (i, s) in st.spacers.iter().enumerate() {
                if !report.sidon_indices.contains(&(i + 1)) {
                    assert_eq!(*s, BigUint::default());
                }
            }
        }
    }

    #[test]
    fn deficient_mass_reserves_upper_part() {
        let quarter: AdmissibleSeries = "1/4,1/4".parse().unwrap();
        let spec = PConstructionSpec::new(vec![quarter], 4, 3);
        let g = gen_p_construction(&spec).unwrap();
        let heights = crate::construction::heights(&g.params).unwrap();
        for (idx, report) in g.stages.iter().enumerate() {
            let j = idx + 1;
            let r = report.r;
            assert_eq!(report.sampled(), r / 2);
            let expected: Vec<usize> = (1..=r).filter(|&i| i > r / 2 || i % j == 0).collect();
            assert_eq!(report.sidon_indices, expected);
            let spacers = &g.params.stages[idx].spacers;
            assert!(satisfies_sidon(spacers, &report.sidon_indices, j, &heights[idx]));
            assert!(report.sample.iter().all(|&x| x <= 1));
            assert!(report.frequencies.passed);
        }
    }

    #[test]
    fn interleaves_generators() {
        let third: AdmissibleSeries = "1/3,1/3,1/3".parse().unwrap();
        let spec = PConstructionSpec::new(vec![half(), third], 4, 2);
        let g = gen_p_construction(&spec).unwrap();
        let qs: Vec<usize> = g.stages.iter().map(|s| s.generator).collect();
        assert_eq!(qs, vec![1, 0, 1]);
        assert!(g.stages[0].sample.contains(&2));
        assert!(g.stages[1].sample.iter().all(|&x| x <= 1));
    }

    #[test]
    fn exhausted_policy_reports() {
        let mut spec = PConstructionSpec::new(vec![half()], 4, 2);
        spec.eps = EpsSchedule::Constant(1e-9);
        spec.r_policy.max_r = 64;
        match gen_p_construction(&spec) {
            Err(ConstructionError::Generation { stage, report, .. }) => {
                assert_eq!(stage, 1);
                assert!(!report.passed);
            }
            other => panic!("{other:?}"),
        }
    }
}
