//! Cutting-and-stacking parameter sets.
//!
//! Stage `j` has a tower of height `h_j`. It is cut into `r_j` columns, column
//! `i` receives `s_j(i)` spacer levels on top, and the columns are stacked
//! left to right into the stage `j+1` tower, so
//! `h_{j+1} = h_j r_j + sum_i s_j(i)`. The spacer block of the last column
//! is part of the new tower.

mod examples;
mod generator;
mod sampling;
mod sidon;

use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde_json::{json, Value};

use crate::error::ConstructionError;
use crate::json::big_from_json;

pub use examples::{gen_example, ExampleKind};
pub use generator::{
    gen_p_construction, EpsSchedule, GeneratedConstruction, PConstructionSpec, RPolicy,
    StageReport,
};
pub use sampling::{
    sample_spacers, sample_with, verify_frequencies, FrequencyReport, FrequencyRow, SpacerSampler,
    RNG_ALGORITHM,
};
pub use sidon::{apply_sidon, apply_sidon_at, satisfies_sidon, Multiplier, SidonOutcome, SidonPolicy};

pub use crate::occupancy::{expand_occupancy, LevelOccupancy};

/// Columns and spacer counts of one stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageParams {
    pub r: usize,
    pub spacers: Vec<BigUint>,
}

impl StageParams {
    pub fn new(spacers: Vec<BigUint>) -> Self {
        StageParams { r: spacers.len(), spacers }
    }

    pub fn from_u64(spacers: &[u64]) -> Self {
        Self::new(spacers.iter().map(|&s| BigUint::from(s)).collect())
    }

    pub fn spacer_total(&self) -> BigUint {
        self.spacers.iter().sum()
    }
}

/// Provenance recorded alongside a parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    pub generator: String,
    pub seed: Option<u64>,
    pub rng: Option<String>,
    pub policies: Value,
    /// False when a Sidon cap clamped some value.
    pub sidon_conforming: bool,
}

impl Default for Meta {
    fn default() -> Self {
        Meta {
            generator: "manual".into(),
            seed: None,
            rng: None,
            policies: Value::Object(Default::default()),
            sidon_conforming: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionParams {
    pub h1: u64,
    /// `stages[j - 1]` holds `(r_j, s_j)`.
    pub stages: Vec<StageParams>,
    pub meta: Meta,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamViolationKind {
    ZeroBaseHeight,
    TooFewColumns { r: usize },
    SpacerCountMismatch { r: usize, len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamViolation {
    /// 1-based stage, `None` for the base height.
    pub stage: Option<usize>,
    pub kind: ParamViolationKind,
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(j) = self.stage {
            write!(f, "stage {j}: ")?;
        }
        match &self.kind {
            ParamViolationKind::ZeroBaseHeight => write!(f, "h1 must be at least 1"),
            ParamViolationKind::TooFewColumns { r } => write!(f, "r = {r}, need r >= 2"),
            ParamViolationKind::SpacerCountMismatch { r, len } => {
                write!(f, "{len} spacer counts for r = {r} columns")
            }
        }
    }
}

impl ConstructionParams {
    pub fn new(h1: u64, stages: Vec<StageParams>) -> Self {
        ConstructionParams { h1, stages, meta: Meta::default() }
    }

    /// Number of towers `J` described: stages plus the base.
    pub fn tower_count(&self) -> usize {
        self.stages.len() + 1
    }

    pub fn stage(&self, j: usize) -> &StageParams {
        &self.stages[j - 1]
    }

    /// Appends the next stage.
    pub fn push_stage(&mut self, stage: StageParams) {
        self.stages.push(stage);
    }

    pub fn to_json(&self) -> Value {
        let stages: Vec<Value> = self
            .stages
            .iter()
            .map(|s| {
                json!({
                    "r": s.r,
                    "spacers": s.spacers.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "h1": self.h1,
            "stages": stages,
            "meta": {
                "generator": self.meta.generator,
                "seed": self.meta.seed,
                "rng": self.meta.rng,
                "policies": self.meta.policies,
                "sidon_conforming": self.meta.sidon_conforming,
            }
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("json values serialize")
    }

    pub fn from_json(v: &Value) -> Result<Self, ConstructionError> {
        let err = |m: &str| ConstructionError::Format(m.to_string());
        let h1 = v.get("h1").and_then(Value::as_u64).ok_or_else(|| err("h1"))?;
        let raw = v.get("stages").and_then(Value::as_array).ok_or_else(|| err("stages"))?;
        let mut stages = Vec::with_capacity(raw.len());
        for (idx, s) in raw.iter().enumerate() {
            let at = |f: &str| err(&format!("stages[{idx}].{f}"));
            let r = s.get("r").and_then(Value::as_u64).ok_or_else(|| at("r"))? as usize;
            let spacers = s
                .get("spacers")
                .and_then(Value::as_array)
                .ok_or_else(|| at("spacers"))?
                .iter()
                .map(|x| {
                    big_from_json(x)
                        .and_then(|b| b.to_biguint())
                        .ok_or_else(|| at("spacers"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            stages.push(StageParams { r, spacers });
        }
        let mut meta = Meta::default();
        if let Some(m) = v.get("meta") {
            if let Some(g) = m.get("generator").and_then(Value::as_str) {
                meta.generator = g.to_string();
            }
            meta.seed = m.get("seed").and_then(Value::as_u64);
            meta.rng = m.get("rng").and_then(Value::as_str).map(str::to_string);
            if let Some(p) = m.get("policies") {
                meta.policies = p.clone();
            }
            if let Some(c) = m.get("sidon_conforming").and_then(Value::as_bool) {
                meta.sidon_conforming = c;
            }
        }
        Ok(ConstructionParams { h1, stages, meta })
    }

    pub fn from_json_str(s: &str) -> Result<Self, ConstructionError> {
        let v: Value =
            serde_json::from_str(s).map_err(|e| ConstructionError::Format(e.to_string()))?;
        Self::from_json(&v)
    }
}

/// Every invariant violation; empty iff the parameters define a construction.
pub fn validate_params(params: &ConstructionParams) -> Vec<ParamViolation> {
    let mut out = Vec::new();
    if params.h1 == 0 {
        out.push(ParamViolation { stage: None, kind: ParamViolationKind::ZeroBaseHeight });
    }
    for (idx, s) in params.stages.iter().enumerate() {
        let stage = Some(idx + 1);
        if s.r < 2 {
            out.push(ParamViolation { stage, kind: ParamViolationKind::TooFewColumns { r: s.r } });
        }
        if s.spacers.len() != s.r {
            out.push(ParamViolation {
                stage,
                kind: ParamViolationKind::SpacerCountMismatch { r: s.r, len: s.spacers.len() },
            });
        }
    }
    out
}

/// `[h_1, ..., h_J]`.
pub fn heights(params: &ConstructionParams) -> Result<Vec<BigUint>, ConstructionError> {
    let violations = validate_params(params);
    if !violations.is_empty() {
        return Err(ConstructionError::Invalid(violations));
    }
    let mut out = Vec::with_capacity(params.stages.len() + 1);
    let mut h = BigUint::from(params.h1);
    for s in &params.stages {
        let next = &h * BigUint::from(s.r) + s.spacer_total();
        out.push(std::mem::replace(&mut h, next));
    }
    out.push(h);
    Ok(out)
}

pub(crate) fn next_height(h: &BigUint, stage: &StageParams) -> BigUint {
    h * BigUint::from(stage.r) + stage.spacer_total()
}

/// Product of `r_j` over `base <= j < top`.
pub fn copy_count(params: &ConstructionParams, base: usize, top: usize) -> BigUint {
    (base..top).fold(BigUint::one(), |acc, j| acc * BigUint::from(params.stage(j).r))
}
