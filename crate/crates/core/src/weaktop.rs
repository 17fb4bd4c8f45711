//! Weak-operator estimates from level correlations.
//!
//! For unions `A`, `B` of base levels, `corr(m; A, B)` counts positions `p`
//! of the window with `p - m` labeled in `A` and `p` labeled in `B`, i.e.
//! `mu(T^m A ∩ B)` in level units. A semigroup element `Q = sum_z Q(z) T^z`
//! predicts `sum_z Q(z) corr(z; A, B)`; the panel discrepancy is the largest
//! gap between the two over all test-set pairs, normalized by `mu(A)`.

use std::collections::HashMap;
use std::io::{self, Write};

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::WeakError;
use crate::occupancy::LevelOccupancy;
use crate::series::{adjoint, convolve, power, AdmissibleSeries, FormalElement};

/// Singleton panels are capped at this many labels by default.
pub const DEFAULT_PANEL_LABELS: u64 = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSet {
    pub name: String,
    pub labels: Vec<u64>,
}

impl TestSet {
    pub fn singleton(b: u64) -> Self {
        TestSet { name: b.to_string(), labels: vec![b] }
    }

    pub fn union(name: impl Into<String>, labels: Vec<u64>) -> Self {
        TestSet { name: name.into(), labels }
    }
}

/// Test sets for matrix coefficients `<T^m 1_A, 1_B>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelationPanel {
    pub sets: Vec<TestSet>,
}

impl CorrelationPanel {
    pub fn singletons(labels: impl IntoIterator<Item = u64>) -> Self {
        CorrelationPanel { sets: labels.into_iter().map(TestSet::singleton).collect() }
    }

    /// Every singleton level when the base tower is short, otherwise the
    /// lowest [`DEFAULT_PANEL_LABELS`] levels.
    pub fn default_for(occ: &LevelOccupancy) -> Self {
        let n = occ.base_height().to_u64().unwrap_or(u64::MAX).min(DEFAULT_PANEL_LABELS);
        Self::singletons(0..n)
    }

    pub fn validate(&self, occ: &LevelOccupancy) -> Result<(), WeakError> {
        for s in &self.sets {
            if s.labels.is_empty() || !s.labels.iter().all(|&b| occ.has_label(b)) {
                return Err(WeakError::BadTestSet(s.name.clone()));
            }
        }
        Ok(())
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.sets.len();
        (0..n).flat_map(move |a| (0..n).map(move |b| (a, b)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub count: u128,
    /// `count / mu(A)`.
    pub normalized: f64,
}

fn label_mass(occ: &LevelOccupancy, a: &[u64]) -> u128 {
    a.len() as u128 * occ.copies()
}

fn count_pair(
    occ: &LevelOccupancy,
    m: &BigInt,
    a: &[u64],
    b: &[u64],
    cache: &mut HashMap<BigInt, u128>,
) -> u128 {
    let mut total = 0;
    for &x in a {
        for &y in b {
            // c' + y - (c + x) = m
            let d = m + BigInt::from(x) - BigInt::from(y);
            total += *cache.entry(d.clone()).or_insert_with(|| occ.autocorr(&d));
        }
    }
    total
}

/// `mu(T^m A ∩ B)` in level units, both endpoints inside the window.
pub fn corr(
    occ: &LevelOccupancy,
    m: &BigInt,
    a: &[u64],
    b: &[u64],
) -> Result<Correlation, WeakError> {
    for (name, set) in [("A", a), ("B", b)] {
        if set.is_empty() || !set.iter().all(|&x| occ.has_label(x)) {
            return Err(WeakError::BadTestSet(name.into()));
        }
    }
    let mut cache = HashMap::new();
    let count = count_pair(occ, m, a, b, &mut cache);
    Ok(Correlation { count, normalized: ratio(count, label_mass(occ, a)) })
}

fn ratio(n: u128, d: u128) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// `|m| / h_J`, the share of the window that a shift by `m` pushes out.
pub fn boundary_loss(occ: &LevelOccupancy, m: &BigInt) -> f64 {
    let w = BigInt::from(occ.window().clone());
    let loss = BigRational::new(m.abs(), w).to_f64().unwrap_or(1.0);
    loss.clamp(0.0, 1.0)
}

fn check_support(occ: &LevelOccupancy, q: &FormalElement) -> Result<(), WeakError> {
    let radius = q.support_radius();
    if BigUint::from(radius) * 4u32 >= *occ.window() {
        return Err(WeakError::SupportTooWide { radius, window: occ.window().to_string() });
    }
    Ok(())
}

fn check_shift(occ: &LevelOccupancy, m: &BigInt) -> Result<(), WeakError> {
    if m.magnitude() >= occ.window() {
        return Err(WeakError::ShiftOutsideWindow(m.to_string()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDelta {
    pub a: String,
    pub b: String,
    pub count: u128,
    pub normalized: f64,
    /// `sum_z Q(z) corr(z; A, B) / mu(A)`.
    pub predicted: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub delta: f64,
    pub pairs: Vec<PairDelta>,
    pub boundary_loss: f64,
    /// Largest boundary loss over the support of `Q`.
    pub support_loss: f64,
}

/// Correlation counts for a fixed panel, memoized by copy-start difference.
struct PanelCounts<'a> {
    occ: &'a LevelOccupancy,
    panel: &'a CorrelationPanel,
    masses: Vec<u128>,
    cache: HashMap<BigInt, u128>,
}

impl<'a> PanelCounts<'a> {
    fn new(occ: &'a LevelOccupancy, panel: &'a CorrelationPanel) -> Self {
        let masses = panel.sets.iter().map(|s| label_mass(occ, &s.labels)).collect();
        PanelCounts { occ, panel, masses, cache: HashMap::new() }
    }

    /// Counts for every ordered pair, row-major in `(A, B)`.
    fn at(&mut self, m: &BigInt) -> Vec<u128> {
        let sets = &self.panel.sets;
        self.panel
            .pairs()
            .map(|(a, b)| count_pair(self.occ, m, &sets[a].labels, &sets[b].labels, &mut self.cache))
            .collect()
    }
}

/// Per-pair deltas of `Q` against the counts at `m`; `small` maps each
/// support exponent to its panel counts.
fn element_deltas(
    q: &FormalElement,
    at_m: &[u128],
    small: &HashMap<i64, Vec<u128>>,
    masses: &[u128],
    n: usize,
) -> Vec<(f64, f64)> {
    (0..at_m.len())
        .map(|idx| {
            let mut predicted = BigRational::zero();
            for (z, c) in q.coeffs() {
                predicted += c * BigRational::from_integer(BigInt::from(small[z][idx]));
            }
            let mass = BigRational::from_integer(BigInt::from(masses[idx / n]));
            let diff = (BigRational::from_integer(BigInt::from(at_m[idx])) - &predicted).abs();
            let pred = (predicted / &mass).to_f64().unwrap_or(f64::NAN);
            (pred, (diff / mass).to_f64().unwrap_or(f64::NAN))
        })
        .collect()
}

/// Panel discrepancy between `T^m` and `Q`.
pub fn weak_discrepancy(
    occ: &LevelOccupancy,
    m: &BigInt,
    q: &FormalElement,
    panel: &CorrelationPanel,
) -> Result<Discrepancy, WeakError> {
    panel.validate(occ)?;
    check_support(occ, q)?;
    check_shift(occ, m)?;
    let mut counts = PanelCounts::new(occ, panel);
    let at_m = counts.at(m);
    let small: HashMap<i64, Vec<u128>> =
        q.coeffs().keys().map(|&z| (z, counts.at(&BigInt::from(z)))).collect();
    let n = panel.sets.len();
    let deltas = element_deltas(q, &at_m, &small, &counts.masses, n);
    let pairs: Vec<PairDelta> = panel
        .pairs()
        .zip(at_m.iter().zip(&deltas))
        .map(|((a, b), (&count, &(predicted, delta)))| PairDelta {
            a: panel.sets[a].name.clone(),
            b: panel.sets[b].name.clone(),
            count,
            normalized: ratio(count, counts.masses[a]),
            predicted,
            delta,
        })
        .collect();
    let delta = pairs.iter().map(|p| p.delta).fold(0.0, f64::max);
    let support_loss = q
        .coeffs()
        .keys()
        .map(|&z| boundary_loss(occ, &BigInt::from(z)))
        .fold(0.0, f64::max);
    Ok(Discrepancy { delta, pairs, boundary_loss: boundary_loss(occ, m), support_loss })
}

/// `||Q 1_A||^2 / mu(A) = sum_{u,v} Q(u) Q(v) corr(u - v; A, A) / mu(A)`.
pub fn strong_norm_sq(
    occ: &LevelOccupancy,
    q: &FormalElement,
    a: &[u64],
) -> Result<f64, WeakError> {
    check_support(occ, q)?;
    if a.is_empty() || !a.iter().all(|&x| occ.has_label(x)) {
        return Err(WeakError::BadTestSet("A".into()));
    }
    // collect Q(u) Q(v) by lag u - v
    let mut lags: HashMap<i64, BigRational> = HashMap::new();
    for (u, x) in q.coeffs() {
        for (v, y) in q.coeffs() {
            *lags.entry(u - v).or_insert_with(BigRational::zero) += x * y;
        }
    }
    let mut cache = HashMap::new();
    let mut total = BigRational::zero();
    for (w, c) in lags {
        let count = count_pair(occ, &BigInt::from(w), a, a, &mut cache);
        total += c * BigRational::from_integer(BigInt::from(count));
    }
    let mass = BigRational::from_integer(BigInt::from(label_mass(occ, a)));
    Ok((total / mass).to_f64().unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HadicTerm {
    /// 1-based stage.
    pub stage: usize,
    pub a: i64,
}

/// `m = sum a_i h_{j_i} + z` with strictly decreasing stages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub terms: Vec<HadicTerm>,
    pub z: BigInt,
}

impl Decomposition {
    pub fn value(&self, heights: &[BigUint]) -> BigInt {
        self.terms
            .iter()
            .map(|t| BigInt::from(t.a) * BigInt::from(heights[t.stage - 1].clone()))
            .sum::<BigInt>()
            + &self.z
    }

    /// `T^z prod P_q^{|a|}` with `q = stage mod k`, adjoint for `a > 0`.
    pub fn element(&self, generators: &[AdmissibleSeries]) -> Option<FormalElement> {
        let z = self.z.to_i64()?;
        let mut e = FormalElement::shift(z);
        for t in &self.terms {
            let g = t.stage % generators.len();
            let base = generators[g].element(g);
            let base = if t.a > 0 { adjoint(&base) } else { base };
            e = convolve(&e, &power(&base, t.a.unsigned_abs() as u32));
        }
        Some(e)
    }

    pub fn describe(&self) -> String {
        let mut parts: Vec<String> =
            self.terms.iter().map(|t| format!("{}*h{}", t.a, t.stage)).collect();
        if !self.z.is_zero() || parts.is_empty() {
            parts.push(self.z.to_string());
        }
        parts.join(" + ")
    }
}

/// Greedy search for `m = sum a_i h_{j_i} + z`, `|a_i| <= a_bound`,
/// `|z| <= z_bound`, over all stages. `heights[i]` is `h_{i+1}`.
pub fn hadic_decompose(
    m: &BigInt,
    heights: &[BigUint],
    a_bound: u64,
    z_bound: u64,
) -> Option<Decomposition> {
    hadic_decompose_from(m, heights, 1, a_bound, z_bound)
}

/// As [`hadic_decompose`], using only stages `>= min_stage`.
pub fn hadic_decompose_from(
    m: &BigInt,
    heights: &[BigUint],
    min_stage: usize,
    a_bound: u64,
    z_bound: u64,
) -> Option<Decomposition> {
    let hs: Vec<BigInt> = heights.iter().map(|h| BigInt::from(h.clone())).collect();
    let first = min_stage.max(1) - 1;
    if first >= hs.len() {
        return (m.magnitude() <= &BigUint::from(z_bound))
            .then(|| Decomposition { terms: Vec::new(), z: m.clone() });
    }
    // reach[i]: largest |value| the stages first..=i plus z can produce
    let mut reach = Vec::with_capacity(hs.len());
    let mut acc = BigInt::from(z_bound);
    for (i, h) in hs.iter().enumerate() {
        if i >= first {
            acc += h * BigInt::from(a_bound);
        }
        reach.push(acc.clone());
    }
    let mut terms = Vec::new();
    let z = descend(m, &hs, &reach, first, hs.len(), a_bound, z_bound, &mut terms)?;
    Some(Decomposition { terms, z })
}

#[allow(clippy::too_many_arguments)]
fn descend(
    rem: &BigInt,
    hs: &[BigInt],
    reach: &[BigInt],
    first: usize,
    upto: usize,
    a_bound: u64,
    z_bound: u64,
    terms: &mut Vec<HadicTerm>,
) -> Option<BigInt> {
    if rem.magnitude() <= &BigUint::from(z_bound) {
        return Some(rem.clone());
    }
    if upto <= first || rem.abs() > reach[upto - 1] {
        return None;
    }
    let idx = upto - 1;
    let h = &hs[idx];
    let below = if idx > first { reach[idx - 1].clone() } else { BigInt::from(z_bound) };
    // nearest multiple first, then outward
    let (q, r) = rem.div_mod_floor(h);
    let nearest = if &(BigInt::from(2) * &r) >= h { q + 1 } else { q };
    let bound = a_bound as i64;
    let start = nearest.to_i64().unwrap_or(if rem.is_positive() { bound } else { -bound });
    let mut candidates: Vec<i64> = (-bound..=bound).collect();
    candidates.sort_by_key(|a| ((a - start).abs(), a.abs()));
    for a in candidates {
        let next = rem - BigInt::from(a) * h;
        if next.abs() > below {
            continue;
        }
        if a != 0 {
            terms.push(HadicTerm { stage: idx + 1, a });
        }
        if let Some(z) = descend(&next, hs, reach, first, idx, a_bound, z_bound, terms) {
            return Some(z);
        }
        if a != 0 {
            terms.pop();
        }
    }
    None
}

#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub tol: f64,
    pub a_bound: u64,
    pub z_bound: u64,
    /// Lowest stage used by the h-adic cross-check.
    pub min_stage: usize,
    /// Generators in construction order, for the residue cross-check.
    pub generators: Vec<AdmissibleSeries>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestMatch {
    /// Index into the scanned semigroup list.
    pub index: usize,
    pub word: String,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairCorrelation {
    pub a: String,
    pub b: String,
    pub count: u128,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub m: BigInt,
    pub boundary_loss: f64,
    pub pairs: Vec<PairCorrelation>,
    /// `(semigroup index, delta)` for every element whose support fits.
    pub discrepancies: Vec<(usize, f64)>,
    /// Smallest discrepancy, regardless of tolerance.
    pub closest: Option<BestMatch>,
    /// `closest` when its delta is below the tolerance.
    pub best_match: Option<BestMatch>,
    pub decomposition: Option<Decomposition>,
    /// Whether the matched element equals the element the decomposition
    /// predicts; `None` when there is nothing to compare.
    pub consistent: Option<bool>,
    pub skipped: Option<String>,
}

impl ScanReport {
    pub fn matched_word(&self) -> Option<&str> {
        self.best_match.as_ref().map(|b| b.word.as_str())
    }
}

/// Ordering key for near ties: zero, then shorter words, then smaller shifts.
fn complexity(e: &FormalElement) -> (u32, u32, u64) {
    if e.is_zero() {
        return (0, 0, 0);
    }
    (1, e.word().degree(), e.word().shift.unsigned_abs())
}

const TIE: f64 = 1e-12;

/// For each shift finds the semigroup element of smallest panel discrepancy,
/// and checks matched shifts against their h-adic decomposition.
pub fn scan_limits(
    occ: &LevelOccupancy,
    heights: &[BigUint],
    semigroup: &[FormalElement],
    m_set: &[BigInt],
    panel: &CorrelationPanel,
    opts: &ScanOptions,
) -> Result<Vec<ScanReport>, WeakError> {
    panel.validate(occ)?;
    let usable: Vec<usize> =
        (0..semigroup.len()).filter(|&i| check_support(occ, &semigroup[i]).is_ok()).collect();
    let mut zs: Vec<i64> = usable
        .iter()
        .flat_map(|&i| semigroup[i].coeffs().keys().copied().collect::<Vec<_>>())
        .collect();
    zs.sort_unstable();
    zs.dedup();
    let mut base = PanelCounts::new(occ, panel);
    let small: HashMap<i64, Vec<u128>> =
        zs.iter().map(|&z| (z, base.at(&BigInt::from(z)))).collect();
    let masses = base.masses.clone();
    let n = panel.sets.len();

    let reports = m_set
        .par_iter()
        .map(|m| {
            let mut report = ScanReport {
                m: m.clone(),
                boundary_loss: 0.0,
                pairs: Vec::new(),
                discrepancies: Vec::new(),
                closest: None,
                best_match: None,
                decomposition: None,
                consistent: None,
                skipped: None,
            };
            if let Err(e) = check_shift(occ, m) {
                report.skipped = Some(e.to_string());
                return report;
            }
            report.boundary_loss = boundary_loss(occ, m);
            let mut counts = PanelCounts::new(occ, panel);
            let at_m = counts.at(m);
            report.pairs = panel
                .pairs()
                .zip(&at_m)
                .map(|((a, b), &count)| PairCorrelation {
                    a: panel.sets[a].name.clone(),
                    b: panel.sets[b].name.clone(),
                    count,
                    normalized: ratio(count, masses[a]),
                })
                .collect();
            let mut best: Option<(usize, f64)> = None;
            for &i in &usable {
                let e = &semigroup[i];
                let delta = element_deltas(e, &at_m, &small, &masses, n)
                    .into_iter()
                    .map(|(_, d)| d)
                    .fold(0.0, f64::max);
                report.discrepancies.push((i, delta));
                let better = match best {
                    None => true,
                    Some((j, d)) => {
                        delta < d - TIE
                            || (delta <= d + TIE && complexity(e) < complexity(&semigroup[j]))
                    }
                };
                if better {
                    best = Some((i, delta));
                }
            }
            if let Some((i, delta)) = best {
                let bm = BestMatch { index: i, word: semigroup[i].word().to_string(), delta };
                if delta < opts.tol {
                    report.best_match = Some(bm.clone());
                }
                report.closest = Some(bm);
            }
            report.decomposition =
                hadic_decompose_from(m, heights, opts.min_stage, opts.a_bound, opts.z_bound);
            if let Some(bm) = &report.best_match {
                let matched = &semigroup[bm.index];
                if !matched.is_zero() && !opts.generators.is_empty() {
                    report.consistent = Some(
                        report
                            .decomposition
                            .as_ref()
                            .and_then(|d| d.element(&opts.generators))
                            .is_some_and(|e| e.same_operator(matched)),
                    );
                }
            }
            report
        })
        .collect();
    Ok(reports)
}

/// Shifts drawn uniformly from `(lower * h_j, h_{j+1})` with random sign,
/// rejecting any within `z_bound` of a bounded h-combination of stages
/// `>= min_stage`.
#[allow(clippy::too_many_arguments)]
pub fn sample_gap_shifts(
    heights: &[BigUint],
    stage: usize,
    lower: u64,
    count: usize,
    min_stage: usize,
    a_bound: u64,
    z_bound: u64,
    seed: u64,
) -> Result<Vec<BigInt>, WeakError> {
    let lo = &heights[stage - 1] * lower + 1u32;
    let hi = heights[stage].clone();
    if lo >= hi {
        return Err(WeakError::GapSamplingExhausted(0));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stage as u64);
    let max_attempts = count * 1000;
    let mut out = Vec::with_capacity(count);
    for _ in 0..max_attempts {
        if out.len() == count {
            break;
        }
        let mag = rng.gen_biguint_range(&lo, &hi);
        let m = if rng.gen::<bool>() { -BigInt::from(mag) } else { BigInt::from(mag) };
        if hadic_decompose_from(&m, heights, min_stage, a_bound, z_bound).is_none() {
            out.push(m);
        }
    }
    if out.len() < count {
        return Err(WeakError::GapSamplingExhausted(max_attempts));
    }
    Ok(out)
}

/// Writes scan rows as CSV, preceded by `# key: value` metadata lines.
/// Columns: `m,id,count,normalized,delta,boundary_loss,best_match_word`.
pub fn write_scan_csv<W: Write>(
    out: &mut W,
    meta: &[(String, String)],
    reports: &[ScanReport],
    semigroup: &[FormalElement],
) -> io::Result<()> {
    for (k, v) in meta {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "m,id,count,normalized,delta,boundary_loss,best_match_word")?;
    for r in reports {
        let best = r.best_match.as_ref().map(|b| b.word.as_str()).unwrap_or("none");
        if let Some(why) = &r.skipped {
            writeln!(out, "{},skipped,,,,,{}", r.m, why.replace(',', ";"))?;
            continue;
        }
        for p in &r.pairs {
            writeln!(
                out,
                "{},pair:{}|{},{},{:.9},,{:.9},{}",
                r.m, p.a, p.b, p.count, p.normalized, r.boundary_loss, best
            )?;
        }
        for &(i, d) in &r.discrepancies {
            writeln!(
                out,
                "{},element:{},,,{:.9},{:.9},{}",
                r.m,
                semigroup[i].word(),
                d,
                r.boundary_loss,
                best
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{gen_example, ConstructionParams, ExampleKind, StageParams};
    use crate::occupancy::expand_occupancy;

    fn small() -> LevelOccupancy {
        let p = ConstructionParams::new(1, vec![StageParams::from_u64(&[0, 1])]);
        expand_occupancy(&p, 1, 2).unwrap()
    }

    fn u(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn corr_hand_enumerated() {
        let occ = small();
        let c = corr(&occ, &BigInt::from(1), &[0], &[0]).unwrap();
        assert_eq!(c.count, 1);
        assert_eq!(c.normalized, 0.5);
        let c0 = corr(&occ, &BigInt::from(0), &[0], &[0]).unwrap();
        assert_eq!(c0.normalized, 1.0);
        assert!(corr(&occ, &BigInt::from(0), &[1], &[0]).is_err());
        assert!(corr(&occ, &BigInt::from(0), &[], &[0]).is_err());
    }

    #[test]
    fn corr_symmetry() {
        let p = gen_example(ExampleKind::AllLimits, 4, 3, None).unwrap();
        let occ = expand_occupancy(&p, 2, 4).unwrap();
        let sets: [&[u64]; 3] = [&[0], &[1, 4], &[2, 3, 5]];
        for m in -60i64..60 {
            for a in sets {
                for b in sets {
                    let x = corr(&occ, &BigInt::from(m), a, b).unwrap().count;
                    let y = corr(&occ, &BigInt::from(-m), b, a).unwrap().count;
                    assert_eq!(x, y);
                }
            }
        }
    }

    #[test]
    fn discrepancy_examples() {
        let p = gen_example(ExampleKind::TwoColumn, 5, 1, None).unwrap();
        let occ = expand_occupancy(&p, 2, 5).unwrap();
        let panel = CorrelationPanel::default_for(&occ);
        for m in [-7i64, 0, 3, 11] {
            let d = weak_discrepancy(&occ, &BigInt::from(m), &FormalElement::shift(m), &panel)
                .unwrap();
            assert_eq!(d.delta, 0.0);
        }
        let m = BigInt::from(3);
        let d = weak_discrepancy(&occ, &m, &FormalElement::zero(), &panel).unwrap();
        let max_norm = d.pairs.iter().map(|p| p.normalized).fold(0.0, f64::max);
        assert_eq!(d.delta, max_norm);
        assert!(d.delta > 0.0);
        let wide = FormalElement::shift(occ.window().to_i64().unwrap() / 4);
        assert!(matches!(
            weak_discrepancy(&occ, &m, &wide, &panel),
            Err(WeakError::SupportTooWide { .. })
        ));
    }

    #[test]
    fn strong_norm_examples() {
        let p = gen_example(ExampleKind::AllLimits, 4, 1, None).unwrap();
        let occ = expand_occupancy(&p, 2, 4).unwrap();
        assert_eq!(strong_norm_sq(&occ, &FormalElement::identity(), &[0]).unwrap(), 1.0);
        assert_eq!(strong_norm_sq(&occ, &FormalElement::zero(), &[1]).unwrap(), 0.0);
    }

    #[test]
    fn hadic_examples() {
        let hs = u(&[1, 3, 12, 60]);
        let d = hadic_decompose(&BigInt::from(25), &hs, 3, 2).unwrap();
        assert_eq!(d.terms, vec![HadicTerm { stage: 3, a: 2 }]);
        assert_eq!(d.z, BigInt::from(1));
        let d = hadic_decompose(&BigInt::from(60), &hs, 3, 2).unwrap();
        assert_eq!(d.terms, vec![HadicTerm { stage: 4, a: 1 }]);
        assert_eq!(d.z, BigInt::zero());
        assert!(hadic_decompose(&BigInt::from(7), &u(&[1, 12]), 0, 2).is_none());
    }

    /// All bounded combinations, independently of the greedy search.
    fn brute_force_reachable(m: i64, hs: &[i64], a_bound: i64, z_bound: i64) -> bool {
        fn go(rem: i64, hs: &[i64], a_bound: i64, z_bound: i64) -> bool {
            match hs.split_last() {
                None => rem.abs() <= z_bound,
                Some((h, rest)) => {
                    (-a_bound..=a_bound).any(|a| go(rem - a * h, rest, a_bound, z_bound))
                }
            }
        }
        go(m, hs, a_bound, z_bound)
    }

    #[test]
    fn hadic_agrees_with_brute_force() {
        let hs = [1i64, 3, 12, 60];
        let big = u(&[1, 3, 12, 60]);
        for a_bound in 0..3 {
            for z_bound in 0..3 {
                for m in -250i64..250 {
                    let found = hadic_decompose_from(&BigInt::from(m), &big, 2, a_bound, z_bound);
                    let expect =
                        brute_force_reachable(m, &hs[1..], a_bound as i64, z_bound as i64);
                    assert_eq!(found.is_some(), expect, "m={m} a={a_bound} z={z_bound}");
                    if let Some(d) = found {
                        assert_eq!(d.value(&big), BigInt::from(m));
                        assert!(d.terms.windows(2).all(|w| w[0].stage > w[1].stage));
                        assert!(d.terms.iter().all(|t| t.stage >= 2));
                    }
                }
            }
        }
    }

    #[test]
    fn scan_identity_and_shift() {
        let p = gen_example(ExampleKind::AllLimits, 5, 1, None).unwrap();
        let hs = crate::construction::heights(&p).unwrap();
        let occ = expand_occupancy(&p, 3, 5).unwrap();
        let panel = CorrelationPanel::singletons(0..8);
        let elements = vec![
            FormalElement::zero(),
            FormalElement::identity(),
            FormalElement::shift(1),
            FormalElement::shift(-1),
        ];
        let opts = ScanOptions { tol: 0.01, a_bound: 2, z_bound: 2, min_stage: 3, generators: vec![] };
        let ms = vec![BigInt::from(0), BigInt::from(1)];
        let reps = scan_limits(&occ, &hs, &elements, &ms, &panel, &opts).unwrap();
        assert_eq!(reps[0].matched_word(), Some("I"));
        assert_eq!(reps[1].matched_word(), Some("T"));
        assert_eq!(reps[1].best_match.as_ref().unwrap().delta, 0.0);
        let mut buf = Vec::new();
        write_scan_csv(&mut buf, &[("stage".into(), "3".into())], &reps, &elements).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# stage: 3\nm,id,count"));
        assert!(text.contains("1,element:T,,,0.000000000"));
    }

    #[test]
    fn gap_samples_avoid_combinations() {
        let p = gen_example(ExampleKind::TwoColumn, 6, 1, None).unwrap();
        let hs = crate::construction::heights(&p).unwrap();
        let shifts = sample_gap_shifts(&hs, 4, 2, 16, 2, 2, 1, 9).unwrap();
        assert_eq!(shifts.len(), 16);
        for m in &shifts {
            assert!(hadic_decompose_from(m, &hs, 2, 2, 1).is_none());
            assert!(m.magnitude() > &(&hs[3] * 2u32) && m.magnitude() < &hs[4]);
        }
        assert_eq!(shifts, sample_gap_shifts(&hs, 4, 2, 16, 2, 2, 1, 9).unwrap());
    }
}
