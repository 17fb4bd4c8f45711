//! Bernoulli sampling of spacer values and window-sum frequency checks.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::ConstructionError;
use crate::series::{power, to_f64, AdmissibleSeries};

/// Identity of the generator recorded in parameter metadata.
pub const RNG_ALGORITHM: &str = "chacha20/seed_from_u64/stream=stage";

/// Inverse-CDF sampler over a normalized coefficient distribution, with exact
/// cut points on the `u64` lattice.
#[derive(Debug, Clone)]
pub struct SpacerSampler {
    // (upper cut point, value); last cut point is 2^64
    cuts: Vec<(u128, u64)>,
}

impl SpacerSampler {
    pub fn new(p: &AdmissibleSeries) -> Result<Self, ConstructionError> {
        if !p.is_normalized() {
            return Err(ConstructionError::NotNormalized(p.mass().to_string()));
        }
        let scale = BigRational::from_integer(BigInt::one() << 64);
        let mut cum = BigRational::zero();
        let mut cuts = Vec::with_capacity(p.coeffs().len());
        for (&k, c) in p.coeffs() {
            cum += c;
            let cut = (&cum * &scale).floor().to_integer().to_u128().expect("cut fits u128");
            cuts.push((cut, k as u64));
        }
        Ok(SpacerSampler { cuts })
    }

    pub fn draw(&self, rng: &mut impl RngCore) -> u64 {
        let x = rng.next_u64() as u128;
        let idx = self.cuts.partition_point(|&(cut, _)| cut <= x);
        self.cuts[idx.min(self.cuts.len() - 1)].1
    }
}

/// `r` i.i.d. draws from the distribution `(c_k)`, deterministic in `seed`.
pub fn sample_spacers(
    p: &AdmissibleSeries,
    r: usize,
    seed: u64,
) -> Result<Vec<u64>, ConstructionError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    sample_with(p, r, &mut rng)
}

pub fn sample_with(
    p: &AdmissibleSeries,
    r: usize,
    rng: &mut impl RngCore,
) -> Result<Vec<u64>, ConstructionError> {
    let sampler = SpacerSampler::new(p)?;
    Ok((0..r).map(|_| sampler.draw(rng)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyRow {
    pub m: usize,
    pub k: u64,
    pub expected: f64,
    pub observed: f64,
    /// `|expected - observed|`.
    pub deviation: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyReport {
    pub max_m: usize,
    pub eps: f64,
    pub len: usize,
    pub rows: Vec<FrequencyRow>,
    pub passed: bool,
}

impl fmt::Display for FrequencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "m,k,expected,observed,deviation,ok")?;
        for r in &self.rows {
            writeln!(f, "{},{},{},{},{},{}", r.m, r.k, r.expected, r.observed, r.deviation, r.ok)?;
        }
        Ok(())
    }
}

/// For each `m <= max_m` and each `k` with `c_k^{(m)} > 0` (the coefficient
/// of `T^k` in `P^m`), compares `c_k^{(m)}` with the share of windows
/// `s(i) + ... + s(i+m-1)`, `i = 1..=r-m+1`, that sum to `k`. Passes iff every
/// such deviation is below `eps * c_k^{(m)}`.
pub fn verify_frequencies(
    spacers: &[BigUint],
    p: &AdmissibleSeries,
    max_m: usize,
    eps: f64,
) -> Result<FrequencyReport, ConstructionError> {
    if max_m == 0 || max_m >= spacers.len() {
        return Err(ConstructionError::WindowTooLong { max_m, len: spacers.len() });
    }
    // values beyond u64 never match a support point
    let small: Vec<Option<u64>> = spacers.iter().map(|s| s.to_u64()).collect();
    let base = p.element(0);
    let mut rows = Vec::new();
    for m in 1..=max_m {
        let target = power(&base, m as u32);
        let windows = spacers.len() - m + 1;
        let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
        for w in small.windows(m) {
            let sum = w.iter().try_fold(0u64, |acc, x| x.and_then(|x| acc.checked_add(x)));
            if let Some(s) = sum {
                *counts.entry(s).or_insert(0) += 1;
            }
        }
        for (&k, c) in target.coeffs() {
            let expected = to_f64(c);
            let observed = counts.get(&(k as u64)).copied().unwrap_or(0) as f64 / windows as f64;
            let deviation = (expected - observed).abs();
            rows.push(FrequencyRow {
                m,
                k: k as u64,
                expected,
                observed,
                deviation,
                ok: deviation < eps * expected,
            });
        }
    }
    let passed = rows.iter().all(|r| r.ok);
    Ok(FrequencyReport { max_m, eps, len: spacers.len(), rows, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    fn half() -> AdmissibleSeries {
        "1/2,1/2".parse().unwrap()
    }

    #[test]
    fn regression_draw() {
        // pinned output of chacha20 seeded with 7
        let s = sample_spacers(&half(), 16, 7).unwrap();
        assert_eq!(s, sample_spacers(&half(), 16, 7).unwrap());
        assert_eq!(s[..4], PINNED_SEED7[..]);
    }

    const PINNED_SEED7: [u64; 4] = [0, 1, 1, 0];

    #[test]
    fn point_mass_and_support() {
        assert!("1".parse::<AdmissibleSeries>().is_err());
        let one = AdmissibleSeries::lenient_from_dense(&[BigRational::one()]).unwrap();
        assert!(sample_spacers(&one, 50, 3).unwrap().iter().all(|&x| x == 0));
        let gap: AdmissibleSeries = "1/2,0,1/2".parse().unwrap();
        let s = sample_spacers(&gap, 200, 9).unwrap();
        assert!(s.iter().all(|&x| x == 0 || x == 2));
        assert!(s.contains(&0) && s.contains(&2));
        let quarter: AdmissibleSeries = "1/4,1/4".parse().unwrap();
        assert!(matches!(
            sample_spacers(&quarter, 4, 1),
            Err(ConstructionError::NotNormalized(_))
        ));
    }

    #[test]
    fn hand_enumerated_windows() {
        let s = big(&[0, 1, 1, 0, 1, 0, 0, 1]);
        let rep = verify_frequencies(&s, &half(), 2, 0.5).unwrap();
        assert!(rep.passed, "{rep}");
        let m2: Vec<(u64, f64)> =
            rep.rows.iter().filter(|r| r.m == 2).map(|r| (r.k, r.observed)).collect();
        assert_eq!(m2, vec![(0, 1.0 / 7.0), (1, 5.0 / 7.0), (2, 1.0 / 7.0)]);
    }

    #[test]
    fn degenerate_fails() {
        let rep = verify_frequencies(&big(&[0; 10]), &half(), 1, 0.1).unwrap();
        assert!(!rep.passed);
        let row = rep.rows.iter().find(|r| r.k == 1).unwrap();
        assert_eq!(row.observed, 0.0);
        assert_eq!(row.deviation, 0.5);
    }

    #[test]
    fn alternating_passes() {
        let s: Vec<u64> = (0..100).map(|i| i % 2).collect();
        assert!(verify_frequencies(&big(&s), &half(), 1, 0.05).unwrap().passed);
    }

    #[test]
    fn window_too_long() {
        assert!(verify_frequencies(&big(&[0, 1]), &half(), 2, 0.1).is_err());
    }

    #[test]
    fn huge_values_never_match() {
        let mut s = big(&[0, 1, 0, 1]);
        s.push(BigUint::from(2u32).pow(80));
        let rep = verify_frequencies(&s, &half(), 1, 1.0).unwrap();
        let total: f64 = rep.rows.iter().map(|r| r.observed).sum();
        assert!((total - 0.8).abs() < 1e-12);
    }
}
