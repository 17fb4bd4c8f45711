//! Widely separated spacer values at selected column indices.
//!
//! At stage `j` the chain of Sidon values is `s_1 = M h_j + inc`,
//! `s_{t+1} = M s_t + inc` with `M >= j`, which gives the strict inequalities
//! `j h_j < s_j(j)` and `j s_j(kj) < s_j(kj + j)`.

use num_bigint::BigUint;
use serde_json::{json, Value};

/// Multiplier of the Sidon chain as a function of the stage `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplier {
    /// `M = j`.
    Stage,
    /// `M = j + extra`.
    StagePlus(u64),
}

impl Multiplier {
    pub fn at(self, j: usize) -> BigUint {
        match self {
            Multiplier::Stage => BigUint::from(j),
            Multiplier::StagePlus(extra) => BigUint::from(j) + extra,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SidonPolicy {
    pub multiplier: Multiplier,
    pub increment: u64,
    /// Values are clamped to `cap` and the result marked non-conforming.
    pub cap: Option<BigUint>,
}

impl Default for SidonPolicy {
    fn default() -> Self {
        SidonPolicy { multiplier: Multiplier::Stage, increment: 1, cap: None }
    }
}

impl SidonPolicy {
    pub fn capped(cap: BigUint) -> Self {
        SidonPolicy { cap: Some(cap), ..Self::default() }
    }

    pub fn to_json(&self) -> Value {
        let multiplier = match self.multiplier {
            Multiplier::Stage => "j".to_string(),
            Multiplier::StagePlus(e) => format!("j+{e}"),
        };
        json!({
            "multiplier": multiplier,
            "increment": self.increment,
            "cap": self.cap.as_ref().map(|c| c.to_string()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SidonOutcome {
    pub spacers: Vec<BigUint>,
    /// 1-based indices that were overwritten, increasing.
    pub indices: Vec<usize>,
    /// False iff the cap clamped at least one value.
    pub conforming: bool,
}

/// Overwrites indices `j, 2j, 3j, ...` (1-based) with the Sidon chain.
pub fn apply_sidon(
    spacers: &[BigUint],
    stage_j: usize,
    h_j: &BigUint,
    policy: &SidonPolicy,
) -> SidonOutcome {
    assert!(stage_j >= 1, "stages are numbered from 1");
    let indices: Vec<usize> = (stage_j..=spacers.len()).step_by(stage_j).collect();
    apply_sidon_at(spacers, &indices, stage_j, h_j, policy)
}

/// Runs one Sidon chain over the given increasing 1-based indices.
pub fn apply_sidon_at(
    spacers: &[BigUint],
    indices: &[usize],
    stage_j: usize,
    h_j: &BigUint,
    policy: &SidonPolicy,
) -> SidonOutcome {
    let mult = policy.multiplier.at(stage_j);
    let mut out = spacers.to_vec();
    let mut conforming = true;
    let mut prev = h_j.clone();
    for &i in indices {
        let mut v = &mult * &prev + policy.increment;
        if let Some(cap) = &policy.cap {
            if &v > cap {
                v = cap.clone();
                conforming = false;
            }
        }
        out[i - 1] = v.clone();
        prev = v;
    }
    SidonOutcome { spacers: out, indices: indices.to_vec(), conforming }
}

/// Checks `j h_j < s(i_1)` and `j s(i_t) < s(i_{t+1})` along `indices`.
pub fn satisfies_sidon(spacers: &[BigUint], indices: &[usize], stage_j: usize, h_j: &BigUint) -> bool {
    let j = BigUint::from(stage_j);
    let mut prev = h_j.clone();
    for &i in indices {
        let v = &spacers[i - 1];
        if &j * &prev >= *v {
            return false;
        }
        prev = v.clone();
    }
    true
}
