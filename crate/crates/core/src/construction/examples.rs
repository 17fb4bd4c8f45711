use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Roots;
use serde_json::json;

use super::{next_height, ConstructionParams, Meta, StageParams};
use crate::error::ConstructionError;

/// The three named deterministic constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleKind {
    /// `s_j(i) = h_j` for all columns, `r_j` strictly increasing:
    /// `T^{h_j} -> 0` weakly while `T^{2h_j} -> I` strongly.
    MixIdentity,
    /// `r_j = 2`, `s_j = (0, j h_j)`.
    TwoColumn,
    /// `r_j = 3`, `s_j = (h_j, h_j + floor(sqrt j), h_j)`.
    AllLimits,
}

impl ExampleKind {
    pub fn name(self) -> &'static str {
        match self {
            ExampleKind::MixIdentity => "mix-identity",
            ExampleKind::TwoColumn => "two-column",
            ExampleKind::AllLimits => "all-limits",
        }
    }
}

impl fmt::Display for ExampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExampleKind {
    type Err = ConstructionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mix-identity" => Ok(ExampleKind::MixIdentity),
            "two-column" => Ok(ExampleKind::TwoColumn),
            "all-limits" => Ok(ExampleKind::AllLimits),
            other => Err(ConstructionError::Format(format!("unknown example `{other}`"))),
        }
    }
}

/// Builds towers `1..=towers` of a named example. `r_schedule` only applies
/// to [`ExampleKind::MixIdentity`] (default `r_j = j + 2`).
pub fn gen_example(
    kind: ExampleKind,
    towers: usize,
    h1: u64,
    r_schedule: Option<&[usize]>,
) -> Result<ConstructionParams, ConstructionError> {
    if towers < 2 {
        return Err(ConstructionError::TooFewStages(2));
    }
    if h1 == 0 {
        return Err(ConstructionError::Format("h1 must be positive".into()));
    }
    let n = towers - 1;
    let schedule: Vec<usize> = match (kind, r_schedule) {
        (ExampleKind::MixIdentity, Some(s)) => {
            if s.len() < n {
                return Err(ConstructionError::Format(format!(
                    "r schedule has {} entries, need {n}",
                    s.len()
                )));
            }
            if s[0] < 2 || s.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ConstructionError::Format(
                    "r schedule must be strictly increasing and start at 2 or more".into(),
                ));
            }
            s[..n].to_vec()
        }
        (ExampleKind::MixIdentity, None) => (1..=n).map(|j| j + 2).collect(),
        (ExampleKind::TwoColumn, _) => vec![2; n],
        (ExampleKind::AllLimits, _) => vec![3; n],
    };

    let mut params = ConstructionParams::new(h1, Vec::with_capacity(n));
    let mut h = BigUint::from(h1);
    for (idx, &r) in schedule.iter().enumerate() {
        let j = idx + 1;
        let spacers = match kind {
            ExampleKind::MixIdentity => vec![h.clone(); r],
            ExampleKind::TwoColumn => vec![BigUint::from(0u32), &h * BigUint::from(j)],
            ExampleKind::AllLimits => {
                let bump = BigUint::from(j.sqrt());
                vec![h.clone(), &h + bump, h.clone()]
            }
        };
        let stage = StageParams::new(spacers);
        h = next_height(&h, &stage);
        params.push_stage(stage);
    }
    params.meta = Meta {
        generator: format!("example:{kind}"),
        policies: json!({ "r_schedule": schedule }),
        ..Meta::default()
    };
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::heights;

    fn spacers(p: &ConstructionParams) -> Vec<(usize, Vec<u64>)> {
        p.stages
            .iter()
            .map(|s| (s.r, s.spacers.iter().map(|x| x.try_into().unwrap()).collect()))
            .collect()
    }

    #[test]
    fn two_column() {
        let p = gen_example(ExampleKind::TwoColumn, 4, 1, None).unwrap();
        assert_eq!(spacers(&p), vec![(2, vec![0, 1]), (2, vec![0, 6]), (2, vec![0, 36])]);
        let h: Vec<u64> = heights(&p).unwrap().iter().map(|x| x.try_into().unwrap()).collect();
        assert_eq!(h, vec![1, 3, 12, 60]);
    }

    #[test]
    fn mix_identity() {
        let p = gen_example(ExampleKind::MixIdentity, 3, 2, Some(&[3, 4])).unwrap();
        assert_eq!(spacers(&p), vec![(3, vec![2, 2, 2]), (4, vec![12, 12, 12, 12])]);
        let d = gen_example(ExampleKind::MixIdentity, 5, 1, None).unwrap();
        let rs: Vec<usize> = d.stages.iter().map(|s| s.r).collect();
        assert_eq!(rs, vec![3, 4, 5, 6]);
        assert!(gen_example(ExampleKind::MixIdentity, 3, 1, Some(&[3, 3])).is_err());
    }

    #[test]
    fn all_limits() {
        let p = gen_example(ExampleKind::AllLimits, 3, 1, None).unwrap();
        // h_2 = 1*3 + (1 + 2 + 1) = 7; floor(sqrt 2) = 1
        assert_eq!(spacers(&p), vec![(3, vec![1, 2, 1]), (3, vec![7, 8, 7])]);
    }

    #[test]
    fn too_few() {
        assert!(gen_example(ExampleKind::TwoColumn, 1, 1, None).is_err());
        assert_eq!("all-limits".parse::<ExampleKind>().unwrap(), ExampleKind::AllLimits);
    }
}
