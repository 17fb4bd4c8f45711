//! Admissible functions of a unitary operator and the commutative semigroup
//! they generate together with `T`, `T*` and `0`.
//!
//! Every element is a finitely supported nonnegative Laurent series in `T`
//! (negative exponents stand for powers of `T*`). All generators are
//! functions of the same unitary operator, so products commute and reduce to
//! coefficient convolution. Coefficients are exact rationals so equality of
//! elements is decidable.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::SeriesError;
use crate::json::{big_from_json, big_to_json};

/// Tail mass below which an infinite admissible series is cut off.
pub const TRUNCATION_TAIL: f64 = 1e-6;

/// A condition that keeps a coefficient map from being admissible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NegativeCoefficient { exponent: u32 },
    ZeroConstantTerm,
    NoPositiveTerm,
    MassExceedsOne { mass: BigRational },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeCoefficient { exponent } => {
                write!(f, "coefficient c_{exponent} is negative")
            }
            Violation::ZeroConstantTerm => write!(f, "c_0 must be positive"),
            Violation::NoPositiveTerm => write!(f, "some c_k with k > 0 must be positive"),
            Violation::MassExceedsOne { mass } => write!(f, "total mass {mass} exceeds 1"),
        }
    }
}

/// `P(T) = sum c_k T^k` with `c_k >= 0`, `sum c_k <= 1`, `c_0 > 0` and some
/// `c_k > 0` for `k > 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AdmissibleSeries {
    coeffs: BTreeMap<u32, BigRational>,
}

/// Validates a coefficient map, reporting every failed condition.
pub fn make_admissible(
    coeffs: impl IntoIterator<Item = (u32, BigRational)>,
) -> Result<AdmissibleSeries, SeriesError> {
    let mut map: BTreeMap<u32, BigRational> = BTreeMap::new();
    for (k, c) in coeffs {
        *map.entry(k).or_insert_with(BigRational::zero) += c;
    }
    let mut violations = Vec::new();
    for (&k, c) in &map {
        if c.is_negative() {
            violations.push(Violation::NegativeCoefficient { exponent: k });
        }
    }
    if !map.get(&0).is_some_and(|c| c.is_positive()) {
        violations.push(Violation::ZeroConstantTerm);
    }
    if !map.iter().any(|(&k, c)| k > 0 && c.is_positive()) {
        violations.push(Violation::NoPositiveTerm);
    }
    let mass: BigRational = map.values().sum();
    if mass > BigRational::one() {
        violations.push(Violation::MassExceedsOne { mass });
    }
    if !violations.is_empty() {
        return Err(SeriesError::NotAdmissible(violations));
    }
    map.retain(|_, c| !c.is_zero());
    Ok(AdmissibleSeries { coeffs: map })
}

impl AdmissibleSeries {
    /// Coefficients listed by exponent `0, 1, 2, ...`.
    pub fn from_dense(coeffs: &[BigRational]) -> Result<Self, SeriesError> {
        make_admissible(coeffs.iter().cloned().enumerate().map(|(k, c)| (k as u32, c)))
    }

    /// Truncates an infinite series at the smallest `K` whose tail mass
    /// `total - sum_{k<K} c_k` drops below [`TRUNCATION_TAIL`]; the discarded
    /// tail is added to the largest retained coefficient.
    pub fn from_infinite(
        coeff: impl Fn(u32) -> BigRational,
        total: &BigRational,
        max_terms: u32,
    ) -> Result<Self, SeriesError> {
        let tail_bound = BigRational::from_float(TRUNCATION_TAIL).expect("finite");
        let mut kept: Vec<BigRational> = Vec::new();
        let mut partial = BigRational::zero();
        loop {
            if kept.len() as u32 >= max_terms {
                return Err(SeriesError::TruncationLimit(max_terms));
            }
            let c = coeff(kept.len() as u32);
            partial += &c;
            kept.push(c);
            let tail = total - &partial;
            if tail < tail_bound {
                if tail.is_positive() {
                    let largest = kept
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                        .map(|(i, _)| i)
                        .expect("nonempty");
                    kept[largest] += tail;
                }
                return Self::from_dense(&kept);
            }
        }
    }

    /// Accepts degenerate laws such as the point mass `(1)`: only
    /// nonnegativity and `0 < mass <= 1` are checked. Such a series can drive
    /// spacer sampling but need not be admissible.
    pub fn lenient_from_dense(coeffs: &[BigRational]) -> Result<Self, SeriesError> {
        match Self::from_dense(coeffs) {
            Ok(p) => Ok(p),
            Err(SeriesError::NotAdmissible(v)) => {
                let fatal: Vec<Violation> = v
                    .into_iter()
                    .filter(|x| {
                        matches!(
                            x,
                            Violation::NegativeCoefficient { .. } | Violation::MassExceedsOne { .. }
                        )
                    })
                    .collect();
                let map: BTreeMap<u32, BigRational> = coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(k, c)| (k as u32, c.clone()))
                    .collect();
                if !fatal.is_empty() {
                    Err(SeriesError::NotAdmissible(fatal))
                } else if map.is_empty() {
                    Err(SeriesError::NotAdmissible(vec![Violation::ZeroConstantTerm]))
                } else {
                    Ok(AdmissibleSeries { coeffs: map })
                }
            }
            Err(e) => Err(e),
        }
    }

    /// Lenient parse of a dense list (see [`Self::lenient_from_dense`]).
    pub fn parse_lenient(s: &str) -> Result<Self, SeriesError> {
        let coeffs = s
            .split(',')
            .map(|t| parse_rational(t.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::lenient_from_dense(&coeffs)
    }

    /// True when all admissibility conditions hold.
    pub fn is_admissible(&self) -> bool {
        make_admissible(self.coeffs.clone()).is_ok()
    }

    pub fn coeffs(&self) -> &BTreeMap<u32, BigRational> {
        &self.coeffs
    }

    pub fn coeff(&self, k: u32) -> BigRational {
        self.coeffs.get(&k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn mass(&self) -> BigRational {
        self.coeffs.values().sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.mass().is_one()
    }

    pub fn degree(&self) -> u32 {
        *self.coeffs.keys().next_back().expect("admissible series is nonempty")
    }

    /// `P / P(1)`: the probability distribution of spacer values.
    pub fn normalized(&self) -> AdmissibleSeries {
        let mass = self.mass();
        AdmissibleSeries {
            coeffs: self.coeffs.iter().map(|(&k, c)| (k, c / &mass)).collect(),
        }
    }

    /// The element `P_{generator}(T)` of the semigroup.
    pub fn element(&self, generator: usize) -> FormalElement {
        FormalElement {
            coeffs: self.coeffs.iter().map(|(&k, c)| (k as i64, c.clone())).collect(),
            word: Word::generator(generator),
        }
    }

    /// Dense coefficient text, e.g. `1/2,0,1/2`.
    pub fn to_dense_string(&self) -> String {
        (0..=self.degree())
            .map(|k| self.coeff(k).to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Parses a comma separated dense coefficient list such as `1/2,1/2` or
/// `0.25,0.25`.
impl FromStr for AdmissibleSeries {
    type Err = SeriesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let coeffs = s
            .split(',')
            .map(|t| parse_rational(t.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_dense(&coeffs)
    }
}

pub fn parse_rational(t: &str) -> Result<BigRational, SeriesError> {
    let bad = || SeriesError::Parse(t.to_string());
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let digits = format!("{int}{frac}");
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(BigRational::new(n, d));
    }
    let n: BigInt = t.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

/// One generator occurrence: `P_g(T)` or its adjoint `P_g(T*)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Factor {
    pub generator: usize,
    pub adjoint: bool,
}

/// Symbolic factorization `T^shift * prod factor^exponent`, or the zero
/// operator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    pub zero: bool,
    pub shift: i64,
    pub factors: BTreeMap<Factor, u32>,
}

impl Word {
    pub fn zero() -> Self {
        Word { zero: true, ..Word::default() }
    }

    pub fn identity() -> Self {
        Word::default()
    }

    pub fn shift(z: i64) -> Self {
        Word { shift: z, ..Word::default() }
    }

    pub fn generator(g: usize) -> Self {
        let mut w = Word::default();
        w.factors.insert(Factor { generator: g, adjoint: false }, 1);
        w
    }

    /// Total number of generator factors.
    pub fn degree(&self) -> u32 {
        self.factors.values().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// The operator this word names; `None` if it mentions a missing generator.
    pub fn evaluate(&self, generators: &[AdmissibleSeries]) -> Option<FormalElement> {
        if self.zero {
            return Some(FormalElement::zero());
        }
        let mut e = FormalElement::shift(self.shift);
        for (f, &n) in &self.factors {
            let g = generators.get(f.generator)?.element(f.generator);
            let g = if f.adjoint { adjoint(&g) } else { g };
            e = convolve(&e, &power(&g, n));
        }
        Some(e)
    }

    fn product(&self, other: &Word) -> Word {
        if self.zero || other.zero {
            return Word::zero();
        }
        let mut factors = self.factors.clone();
        for (f, e) in &other.factors {
            *factors.entry(*f).or_insert(0) += e;
        }
        Word { zero: false, shift: self.shift + other.shift, factors }
    }

    fn adjoint(&self) -> Word {
        if self.zero {
            return Word::zero();
        }
        Word {
            zero: false,
            shift: -self.shift,
            factors: self
                .factors
                .iter()
                .map(|(f, &e)| (Factor { generator: f.generator, adjoint: !f.adjoint }, e))
                .collect(),
        }
    }

    fn pow(&self, n: u32) -> Word {
        if n == 0 {
            return Word::identity();
        }
        if self.zero {
            return Word::zero();
        }
        Word {
            zero: false,
            shift: self.shift * n as i64,
            factors: self.factors.iter().map(|(f, &e)| (*f, e * n)).collect(),
        }
    }
}

/// `0`, `I`, or factors joined by `.`: `T^-1.P1^2.P2*`.
impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.zero {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        match self.shift {
            0 => {}
            1 => parts.push("T".to_string()),
            z => parts.push(format!("T^{z}")),
        }
        for (factor, &e) in &self.factors {
            let star = if factor.adjoint { "*" } else { "" };
            let base = format!("P{}{}", factor.generator + 1, star);
            parts.push(if e == 1 { base } else { format!("{base}^{e}") });
        }
        if parts.is_empty() {
            write!(f, "I")
        } else {
            write!(f, "{}", parts.join("."))
        }
    }
}

impl FromStr for Word {
    type Err = SeriesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SeriesError::Parse(s.to_string());
        match s {
            "0" => return Ok(Word::zero()),
            "I" => return Ok(Word::identity()),
            _ => {}
        }
        let mut word = Word::identity();
        for part in s.split('.') {
            let (base, exp) = match part.split_once('^') {
                Some((b, e)) => (b, e.parse::<i64>().map_err(|_| bad())?),
                None => (part, 1),
            };
            if base == "T" {
                word.shift += exp;
                continue;
            }
            let (body, adjoint) = match base.strip_suffix('*') {
                Some(b) => (b, true),
                None => (base, false),
            };
            let index: usize = body.strip_prefix('P').ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if index == 0 || exp < 1 {
                return Err(bad());
            }
            let f = Factor { generator: index - 1, adjoint };
            *word.factors.entry(f).or_insert(0) += exp as u32;
        }
        Ok(word)
    }
}

/// A semigroup element: nonnegative Laurent coefficients plus the word that
/// produced it. Equality of operators is equality of `coeffs`; the word is
/// informational.
#[derive(Debug, Clone)]
pub struct FormalElement {
    coeffs: BTreeMap<i64, BigRational>,
    word: Word,
}

impl FormalElement {
    pub fn zero() -> Self {
        FormalElement { coeffs: BTreeMap::new(), word: Word::zero() }
    }

    pub fn identity() -> Self {
        Self::shift(0)
    }

    /// `T^z` (a point mass at `z`).
    pub fn shift(z: i64) -> Self {
        FormalElement {
            coeffs: BTreeMap::from([(z, BigRational::one())]),
            word: Word::shift(z),
        }
    }

    /// Builds an element from raw coefficients; zero entries are dropped.
    pub fn from_coeffs(
        coeffs: impl IntoIterator<Item = (i64, BigRational)>,
        word: Word,
    ) -> Result<Self, SeriesError> {
        let mut map = BTreeMap::new();
        for (z, c) in coeffs {
            if c.is_negative() {
                return Err(SeriesError::NegativeElementCoefficient(z));
            }
            if !c.is_zero() {
                *map.entry(z).or_insert_with(BigRational::zero) += c;
            }
        }
        let word = if map.is_empty() { Word::zero() } else { word };
        Ok(FormalElement { coeffs: map, word })
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, BigRational> {
        &self.coeffs
    }

    pub fn coeff(&self, z: i64) -> BigRational {
        self.coeffs.get(&z).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn mass(&self) -> BigRational {
        self.coeffs.values().sum()
    }

    /// Largest `|z|` in the support, 0 for the zero element.
    pub fn support_radius(&self) -> u64 {
        self.coeffs.keys().map(|z| z.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn max_coeff(&self) -> BigRational {
        self.coeffs.values().max().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn same_operator(&self, other: &FormalElement) -> bool {
        self.coeffs == other.coeffs
    }

    /// Canonical JSON: `{"word": "...", "coeffs": [[z, num, den], ...]}`.
    pub fn to_json(&self) -> Value {
        let coeffs: Vec<Value> = self
            .coeffs
            .iter()
            .map(|(z, c)| json!([z, big_to_json(c.numer()), big_to_json(c.denom())]))
            .collect();
        json!({ "word": self.word.to_string(), "coeffs": coeffs })
    }

    pub fn from_json(v: &Value) -> Result<Self, SeriesError> {
        let bad = || SeriesError::Parse(v.to_string());
        let word: Word = v.get("word").and_then(Value::as_str).ok_or_else(bad)?.parse()?;
        let rows = v.get("coeffs").and_then(Value::as_array).ok_or_else(bad)?;
        let mut coeffs = Vec::with_capacity(rows.len());
        for row in rows {
            let row = row.as_array().filter(|r| r.len() == 3).ok_or_else(bad)?;
            let z = row[0].as_i64().ok_or_else(bad)?;
            let n = big_from_json(&row[1]).ok_or_else(bad)?;
            let d = big_from_json(&row[2]).ok_or_else(bad)?;
            if d.is_zero() {
                return Err(bad());
            }
            coeffs.push((z, BigRational::new(n, d)));
        }
        Self::from_coeffs(coeffs, word)
    }
}

impl PartialEq for FormalElement {
    fn eq(&self, other: &Self) -> bool {
        self.same_operator(other)
    }
}

impl Eq for FormalElement {}

/// Semigroup product: `(a*b)(z) = sum_{u+v=z} a(u) b(v)`.
pub fn convolve(a: &FormalElement, b: &FormalElement) -> FormalElement {
    if a.is_zero() || b.is_zero() {
        return FormalElement::zero();
    }
    let mut coeffs: BTreeMap<i64, BigRational> = BTreeMap::new();
    for (u, x) in &a.coeffs {
        for (v, y) in &b.coeffs {
            *coeffs.entry(u + v).or_insert_with(BigRational::zero) += x * y;
        }
    }
    FormalElement { coeffs, word: a.word.product(&b.word) }
}

/// `a(T)* = a(T*)`: reflects exponents.
pub fn adjoint(a: &FormalElement) -> FormalElement {
    FormalElement {
        coeffs: a.coeffs.iter().map(|(z, c)| (-z, c.clone())).collect(),
        word: a.word.adjoint(),
    }
}

/// `a^n`; `a^0` is the identity.
pub fn power(a: &FormalElement, n: u32) -> FormalElement {
    let mut result = FormalElement::identity();
    let mut base = a.clone();
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = convolve(&result, &base);
        }
        e >>= 1;
        if e > 0 {
            base = convolve(&base, &base);
        }
    }
    result.word = a.word.pow(n);
    if result.is_zero() {
        result.word = Word::zero();
    }
    result
}

/// All `T^z * prod P_i(T)^{b_i} * prod P_i(T*)^{c_i}` with
/// `sum (b_i + c_i) <= max_total_degree` and `|z| <= z_range`, plus `0`,
/// deduplicated by coefficient map. The first word reaching an operator is
/// kept: lower degree first, then smaller `|z|`.
pub fn enumerate_semigroup(
    generators: &[AdmissibleSeries],
    max_total_degree: u32,
    z_range: u32,
) -> Vec<FormalElement> {
    let mut letters = Vec::with_capacity(2 * generators.len());
    for (g, p) in generators.iter().enumerate() {
        let e = p.element(g);
        letters.push(adjoint(&e));
        letters.push(e);
    }
    letters.sort_by_key(|e| e.word.factors.keys().next().map(|f| (f.generator, f.adjoint)));

    // Products of exactly `d` letters, as multisets (nondecreasing letter index).
    let mut layers: Vec<Vec<(usize, FormalElement)>> = vec![vec![(0, FormalElement::identity())]];
    for _ in 0..max_total_degree {
        let prev = layers.last().expect("nonempty");
        let mut next = Vec::new();
        for (start, e) in prev {
            for (i, letter) in letters.iter().enumerate().skip(*start) {
                next.push((i, convolve(e, letter)));
            }
        }
        layers.push(next);
    }

    let mut shifts: Vec<i64> = vec![0];
    for z in 1..=z_range as i64 {
        shifts.push(-z);
        shifts.push(z);
    }
    shifts.sort_by_key(|z| (z.unsigned_abs(), *z));

    let mut out = vec![FormalElement::zero()];
    let mut seen: HashMap<Vec<(i64, BigRational)>, ()> = HashMap::new();
    for layer in &layers {
        for &z in &shifts {
            for (_, e) in layer {
                let shifted = convolve(&FormalElement::shift(z), e);
                let key: Vec<(i64, BigRational)> =
                    shifted.coeffs.iter().map(|(k, c)| (*k, c.clone())).collect();
                if seen.insert(key, ()).is_none() {
                    out.push(shifted);
                }
            }
        }
    }
    out
}

/// Lossy view of a rational for reporting.
pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_evaluate_to_their_operator() {
        let p: AdmissibleSeries = "1/2,1/2".parse().unwrap();
        let w: Word = "T^-1.P1^2.P1*".parse().unwrap();
        let e = w.evaluate(std::slice::from_ref(&p)).unwrap();
        let g = p.element(0);
        let want = convolve(
            &FormalElement::shift(-1),
            &convolve(&power(&g, 2), &adjoint(&g)),
        );
        assert!(e.same_operator(&want));
        assert!("P2".parse::<Word>().unwrap().evaluate(&[p]).is_none());
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn half() -> AdmissibleSeries {
        "1/2,1/2".parse().unwrap()
    }

    fn dense(e: &FormalElement) -> Vec<(i64, BigRational)> {
        e.coeffs().iter().map(|(z, c)| (*z, c.clone())).collect()
    }

    #[test]
    fn admissible_examples() {
        assert!(make_admissible([(0, q(1, 2)), (1, q(1, 2))]).is_ok());
        match make_admissible([(1, q(1, 1))]) {
            Err(SeriesError::NotAdmissible(v)) => assert_eq!(v, vec![Violation::ZeroConstantTerm]),
            other => panic!("{other:?}"),
        }
        match make_admissible([(0, q(7, 10)), (1, q(7, 10))]) {
            Err(SeriesError::NotAdmissible(v)) => {
                assert_eq!(v, vec![Violation::MassExceedsOne { mass: q(7, 5) }])
            }
            other => panic!("{other:?}"),
        }
        match make_admissible([(0, q(1, 2)), (2, q(-1, 4))]) {
            Err(SeriesError::NotAdmissible(v)) => {
                assert!(v.contains(&Violation::NegativeCoefficient { exponent: 2 }));
                assert!(v.contains(&Violation::NoPositiveTerm));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_forms() {
        let p: AdmissibleSeries = "0.25, 1/4".parse().unwrap();
        assert_eq!(p.mass(), q(1, 2));
        assert_eq!(p.normalized(), half());
        assert!("1/2,x".parse::<AdmissibleSeries>().is_err());
        assert!("1/0,1".parse::<AdmissibleSeries>().is_err());
    }

    #[test]
    fn truncation_moves_tail_to_largest() {
        // geometric 2^-(k+1) sums to 1
        let p = AdmissibleSeries::from_infinite(
            |k| BigRational::new(1.into(), num_traits::pow(BigInt::from(2), k as usize + 1)),
            &q(1, 1),
            100,
        )
        .unwrap();
        assert_eq!(p.mass(), q(1, 1));
        // 2^-K < 1e-6 first at K = 20
        assert_eq!(p.degree(), 19);
        assert!(p.coeff(0) > q(1, 2));
    }

    #[test]
    fn convolve_examples() {
        let p = half().element(0);
        let p2 = convolve(&p, &p);
        assert_eq!(dense(&p2), vec![(0, q(1, 4)), (1, q(1, 2)), (2, q(1, 4))]);
        assert!(convolve(&p, &FormalElement::zero()).is_zero());
        assert!(convolve(&FormalElement::zero(), &p).word().is_zero());
        let pp = convolve(&adjoint(&p), &p);
        assert_eq!(dense(&pp), vec![(-1, q(1, 4)), (0, q(1, 2)), (1, q(1, 4))]);
        assert_eq!(adjoint(&pp), pp);
        assert_eq!(pp.word().to_string(), "P1.P1*");
    }

    #[test]
    fn adjoint_examples() {
        let t3 = FormalElement::shift(3);
        assert_eq!(adjoint(&t3), FormalElement::shift(-3));
        assert_eq!(adjoint(&t3).word().to_string(), "T^-3");
        let p = half().element(0);
        assert_eq!(adjoint(&adjoint(&p)), p);
        assert_eq!(adjoint(&adjoint(&p)).word(), p.word());
    }

    #[test]
    fn power_examples() {
        let p = half().element(0);
        assert_eq!(dense(&power(&p, 2)), vec![(0, q(1, 4)), (1, q(1, 2)), (2, q(1, 4))]);
        // repeated convolution oracle
        let mut naive = FormalElement::identity();
        for _ in 0..4 {
            naive = convolve(&naive, &p);
        }
        let p4 = power(&p, 4);
        assert_eq!(p4, naive);
        assert_eq!(
            dense(&p4),
            vec![(0, q(1, 16)), (1, q(4, 16)), (2, q(6, 16)), (3, q(4, 16)), (4, q(1, 16))]
        );
        assert_eq!(p4.word().to_string(), "P1^4");
        assert_eq!(power(&p, 1), p);
        assert_eq!(power(&p, 0), FormalElement::identity());
        assert_eq!(power(&p, 0).word().to_string(), "I");
    }

    /// Independent brute force: enumerate all (z, b, c) triples for one
    /// generator and dedup by coefficient vectors built with explicit
    /// binomial sums.
    fn brute_force_count(max_degree: u32, z_range: i64) -> usize {
        use std::collections::BTreeSet;
        let mut set: BTreeSet<Vec<(i64, (BigInt, BigInt))>> = BTreeSet::new();
        for z in -z_range..=z_range {
            for b in 0..=max_degree {
                for c in 0..=(max_degree - b) {
                    // T^z ((1+T)/2)^b ((1+T*)/2)^c = T^(z-c) (1+T)^(b+c) / 2^(b+c)
                    let n = b + c;
                    let mut v = Vec::new();
                    for k in 0..=n {
                        let num = binomial(n, k);
                        let r = BigRational::new(num, num_traits::pow(BigInt::from(2), n as usize));
                        v.push((z - c as i64 + k as i64, (r.numer().clone(), r.denom().clone())));
                    }
                    set.insert(v);
                }
            }
        }
        set.len() + 1
    }

    fn binomial(n: u32, k: u32) -> BigInt {
        let mut r = BigInt::one();
        for i in 0..k {
            r = r * BigInt::from(n - i) / BigInt::from(i + 1);
        }
        r
    }

    #[test]
    fn enumerate_small() {
        let g = [half()];
        let els = enumerate_semigroup(&g, 1, 0);
        let words: Vec<String> = els.iter().map(|e| e.word().to_string()).collect();
        assert_eq!(words.len(), 4);
        for w in ["0", "I", "P1", "P1*"] {
            assert!(words.contains(&w.to_string()), "{words:?}");
        }
        let els = enumerate_semigroup(&g, 2, 1);
        assert_eq!(els.len(), brute_force_count(2, 1));
        assert_eq!(els.len(), 13);
        for e in &els {
            assert!(e.mass() <= BigRational::one());
        }
    }

    #[test]
    fn duplicate_generators_collapse() {
        let one = enumerate_semigroup(&[half()], 2, 1);
        let two = enumerate_semigroup(&[half(), half()], 2, 1);
        assert_eq!(one.len(), two.len());
        for e in &two {
            assert!(one.contains(e));
        }
    }

    #[test]
    fn json_roundtrip() {
        let p = power(&adjoint(&half().element(1)), 3);
        let v = p.to_json();
        assert_eq!(v["word"], "P2*^3");
        let back = FormalElement::from_json(&v).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.word(), p.word());
        let w: Word = "T^-2.P1^2.P3*".parse().unwrap();
        assert_eq!(w.to_string(), "T^-2.P1^2.P3*");
    }

    #[test]
    fn central_binomial_max() {
        let p = half().element(0);
        assert_eq!(power(&p, 16).max_coeff(), q(12870, 65536));
        let p32 = power(&p, 32);
        assert_eq!(
            p32.max_coeff(),
            BigRational::new(601080390.into(), num_traits::pow(BigInt::from(2), 32))
        );
    }
}
