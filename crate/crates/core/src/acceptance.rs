//! The acceptance suite: nine checks with fixed inputs, tolerances and time
//! limits, runnable one at a time or all together.

use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::construction::{
    expand_occupancy, gen_example, gen_p_construction, heights, verify_frequencies,
    ConstructionParams, EpsSchedule, ExampleKind, PConstructionSpec, SidonPolicy, StageParams,
};
use crate::oracle::LabelArray;
use crate::series::{
    adjoint, convolve, enumerate_semigroup, power, AdmissibleSeries, FormalElement, Word,
};
use crate::weaktop::{
    corr, sample_gap_shifts, scan_limits, strong_norm_sq, weak_discrepancy, CorrelationPanel,
    ScanOptions,
};

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Towers `J` of the randomized builds.
    pub towers: usize,
    /// Singleton levels `0..panel` used as test sets.
    pub panel: u64,
    /// Sidon values are clamped to `2^cap_bits`.
    pub cap_bits: u32,
    /// Threshold for gap shifts.
    pub gap_tol: f64,
    /// Gap shifts start at `gap_lower * h_j`.
    pub gap_lower: u64,
    pub gap_samples: usize,
    /// Criterion keys or numbers; empty runs everything.
    pub only: Vec<String>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: DEFAULT_SEED,
            towers: 7,
            panel: 12,
            cap_bits: 48,
            gap_tol: 0.1,
            gap_lower: 4,
            gap_samples: 32,
            only: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Criterion {
    pub id: u8,
    pub key: &'static str,
    pub title: &'static str,
    pub limit: Duration,
}

const fn crit(id: u8, key: &'static str, title: &'static str, secs: u64) -> Criterion {
    Criterion { id, key, title, limit: Duration::from_secs(secs) }
}

pub const CRITERIA: [Criterion; 9] = [
    crit(1, "heights", "height recurrence", 1),
    crit(2, "example1", "mix-identity correlations", 10),
    crit(3, "frequencies", "window frequencies", 60),
    crit(4, "weak-limits", "T^{-+m h_j} against P^m and P*^m", 120),
    crit(5, "gaps", "gap shifts match zero", 120),
    crit(6, "strong", "strong norms of P^n", 120),
    crit(7, "algebra", "semigroup algebra", 5),
    crit(8, "oracle", "factorized vs naive correlations", 10),
    crit(9, "form", "two-generator products", 300),
];

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub criterion: Criterion,
    pub passed: bool,
    pub elapsed: Duration,
    pub detail: String,
    /// One line per individual check.
    pub rows: Vec<String>,
}

impl CriterionResult {
    pub fn within_time(&self) -> bool {
        self.elapsed <= self.criterion.limit
    }
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {} {}: {} ({:.2}s, limit {}s) {}",
            self.criterion.id,
            self.criterion.key,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            self.criterion.limit.as_secs(),
            self.detail
        )
    }
}

/// Criteria named in `only`, in suite order.
pub fn select(only: &[String]) -> Result<Vec<Criterion>, String> {
    if only.is_empty() {
        return Ok(CRITERIA.to_vec());
    }
    for name in only {
        if !CRITERIA.iter().any(|c| c.key == name || c.id.to_string() == *name) {
            return Err(format!("unknown criterion {name}"));
        }
    }
    Ok(CRITERIA
        .iter()
        .filter(|c| only.iter().any(|n| c.key == n || c.id.to_string() == *n))
        .copied()
        .collect())
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<CriterionResult>, String> {
    Ok(select(&cfg.only)?.into_iter().map(|c| run_criterion(c, cfg)).collect())
}

struct Outcome {
    passed: bool,
    detail: String,
    rows: Vec<String>,
}

pub fn run_criterion(c: Criterion, cfg: &SuiteConfig) -> CriterionResult {
    let start = Instant::now();
    let outcome = match c.id {
        1 => heights_check(cfg),
        2 => example1_check(),
        3 => frequencies_check(cfg),
        4 => weak_limits_check(cfg),
        5 => gaps_check(cfg),
        6 => strong_check(cfg),
        7 => algebra_check(cfg),
        8 => oracle_check(cfg),
        _ => form_check(cfg),
    };
    let elapsed = start.elapsed();
    let outcome = outcome.unwrap_or_else(|e| Outcome {
        passed: false,
        detail: format!("error: {e}"),
        rows: Vec::new(),
    });
    let mut result = CriterionResult {
        criterion: c,
        passed: outcome.passed,
        elapsed,
        detail: outcome.detail,
        rows: outcome.rows,
    };
    if !result.within_time() {
        result.passed = false;
        result.detail.push_str("; over time limit");
    }
    result
}

type Check = Result<Outcome, String>;

fn err(e: impl fmt::Display) -> String {
    e.to_string()
}

fn half() -> AdmissibleSeries {
    "1/2,1/2".parse().expect("valid series")
}

fn third() -> AdmissibleSeries {
    "1/3,1/3,1/3".parse().expect("valid series")
}

fn eps(j: usize) -> f64 {
    EpsSchedule::InverseStage.at(j)
}

/// The randomized build shared by the P-construction criteria.
fn capped_build(
    generators: Vec<AdmissibleSeries>,
    cfg: &SuiteConfig,
) -> Result<(ConstructionParams, Vec<BigUint>), String> {
    let mut spec = PConstructionSpec::new(generators, cfg.towers, cfg.seed);
    spec.sidon = SidonPolicy::capped(BigUint::one() << cfg.cap_bits);
    let params = gen_p_construction(&spec).map_err(err)?.params;
    let hs = heights(&params).map_err(err)?;
    Ok((params, hs))
}

fn random_params(rng: &mut ChaCha20Rng, max_height: u64) -> ConstructionParams {
    loop {
        let mut p = ConstructionParams::new(rng.gen_range(1..=4), Vec::new());
        let mut h = p.h1;
        while h <= max_height {
            let r = rng.gen_range(2..=5);
            let spacers: Vec<u64> = (0..r).map(|_| rng.gen_range(0..=6)).collect();
            let next = h * r as u64 + spacers.iter().sum::<u64>();
            if next > max_height {
                break;
            }
            p.push_stage(StageParams::from_u64(&spacers));
            h = next;
        }
        if p.stages.len() >= 2 {
            return p;
        }
    }
}

fn heights_check(cfg: &SuiteConfig) -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut failures = Vec::new();
    let mut materialized = 0;
    for t in 0..200 {
        let stages = rng.gen_range(1..=6);
        let mut p = ConstructionParams::new(rng.gen_range(1..=20), Vec::new());
        for _ in 0..stages {
            let r = rng.gen_range(2..=8);
            let spacers: Vec<BigUint> = (0..r)
                .map(|_| {
                    if rng.gen_ratio(1, 10) {
                        BigUint::from(rng.gen::<u64>()) << 64u32
                    } else {
                        BigUint::from(rng.gen_range(0u64..=10))
                    }
                })
                .collect();
            p.push_stage(StageParams::new(spacers));
        }
        let hs = heights(&p).map_err(err)?;
        let mut h = BigUint::from(p.h1);
        let mut ok = hs[0] == h;
        for (j, s) in p.stages.iter().enumerate() {
            h = h * BigUint::from(s.spacers.len()) + s.spacers.iter().sum::<BigUint>();
            ok &= hs[j + 1] == h;
        }
        if let Ok(arr) = LabelArray::build(&p, 1, p.tower_count(), 1 << 20) {
            materialized += 1;
            ok &= BigUint::from(arr.len()) == hs[hs.len() - 1];
        }
        if !ok {
            failures.push(format!("set {t}"));
        }
    }
    Ok(Outcome {
        passed: failures.is_empty(),
        detail: format!("200 sets, {materialized} materialized, {} mismatches", failures.len()),
        rows: failures,
    })
}

fn example1_check() -> Check {
    let rs = [3usize, 4, 5, 6];
    let p = gen_example(ExampleKind::MixIdentity, 5, 1, Some(&rs)).map_err(err)?;
    let hs = heights(&p).map_err(err)?;
    let occ = expand_occupancy(&p, 2, 5).map_err(err)?;
    let labels = hs[1].to_u64().ok_or("base height")?;
    let mut rows = Vec::new();
    let mut passed = true;
    for j in 2..=4 {
        let h = BigInt::from(hs[j - 1].clone());
        let two_h = &h * 2;
        let bl1 = crate::weaktop::boundary_loss(&occ, &h);
        let bl2 = crate::weaktop::boundary_loss(&occ, &two_h);
        let floor = 1.0 - 1.0 / rs[j - 1] as f64 - 2.0 * bl2;
        let mut worst_cross: f64 = 0.0;
        let mut worst_return: f64 = 1.0;
        for a in 0..labels {
            for b in 0..labels {
                let c = corr(&occ, &h, &[a], &[b]).map_err(err)?;
                worst_cross = worst_cross.max(c.normalized);
            }
            let c = corr(&occ, &two_h, &[a], &[a]).map_err(err)?;
            worst_return = worst_return.min(c.normalized);
        }
        let ok = worst_cross <= 2.0 * bl1 && worst_return >= floor;
        passed &= ok;
        rows.push(format!(
            "j={j} max corr(h_j)={worst_cross:.6} <= {:.6}; min corr(2h_j)={worst_return:.6} >= {floor:.6}: {}",
            2.0 * bl1,
            pass_word(ok)
        ));
    }
    Ok(Outcome { passed, detail: format!("stages 2..4, {} labels", labels), rows })
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn frequencies_check(cfg: &SuiteConfig) -> Check {
    let p = half();
    let mut rows = Vec::new();
    let mut good = 0;
    let mut pinned = false;
    for s in 0..20u64 {
        let seed = cfg.seed.wrapping_add(s);
        let spec = PConstructionSpec::new(vec![p.clone()], 6, seed);
        let ok = match gen_p_construction(&spec) {
            Ok(g) => g.stages.iter().all(|st| {
                let sample: Vec<BigUint> = st.sample.iter().map(|&x| BigUint::from(x)).collect();
                let max_m = st.stage.min(4);
                verify_frequencies(&sample, &p, max_m, eps(st.stage)).is_ok_and(|r| r.passed)
            }),
            Err(_) => false,
        };
        good += ok as usize;
        pinned |= s == 0 && ok;
        rows.push(format!("seed {seed}: {}", pass_word(ok)));
    }
    Ok(Outcome {
        passed: pinned && good >= 18,
        detail: format!("{good}/20 seeds pass, pinned seed {}", pass_word(pinned)),
        rows,
    })
}

fn weak_limits_check(cfg: &SuiteConfig) -> Check {
    let p = half();
    let (params, hs) = capped_build(vec![p.clone()], cfg)?;
    let top = cfg.towers;
    let base = p.element(0);
    let mut rows = Vec::new();
    let mut passed = true;
    let mut worst_margin = f64::INFINITY;
    for j in [top - 2, top - 1] {
        let occ = expand_occupancy(&params, j, top).map_err(err)?;
        let panel = CorrelationPanel::singletons(0..cfg.panel);
        let h = BigInt::from(hs[j - 1].clone());
        for n in 1..=2u32 {
            for (sign, q) in [(-1, power(&base, n)), (1, power(&adjoint(&base), n))] {
                let m = &h * (sign * n as i64);
                let d = weak_discrepancy(&occ, &m, &q, &panel).map_err(err)?;
                let tol = eps(j) + 3.0 * d.boundary_loss.max(d.support_loss);
                let ok = d.delta < tol;
                passed &= ok;
                worst_margin = worst_margin.min(tol - d.delta);
                rows.push(format!(
                    "j={j} m={}{}h_j vs {}: delta={:.6} tol={tol:.6} {}",
                    if sign < 0 { "-" } else { "+" },
                    n,
                    q.word(),
                    d.delta,
                    pass_word(ok)
                ));
            }
        }
    }
    Ok(Outcome {
        passed,
        detail: format!("stages {}..{}, worst margin {worst_margin:.6}", top - 2, top - 1),
        rows,
    })
}

fn gaps_check(cfg: &SuiteConfig) -> Check {
    let p = half();
    let (params, hs) = capped_build(vec![p.clone()], cfg)?;
    let top = cfg.towers;
    let semigroup = enumerate_semigroup(std::slice::from_ref(&p), 4, 2);
    let mut rows = Vec::new();
    let mut passed = true;
    let mut worst: f64 = 0.0;
    for j in [top - 3, top - 2] {
        let occ = expand_occupancy(&params, j, top).map_err(err)?;
        let panel = CorrelationPanel::singletons(0..cfg.panel);
        let z_bound = 2 * cfg.panel;
        let a_bound = top as u64;
        let shifts = sample_gap_shifts(
            &hs,
            j,
            cfg.gap_lower,
            cfg.gap_samples,
            j,
            a_bound,
            z_bound,
            cfg.seed,
        )
        .map_err(err)?;
        let opts = ScanOptions {
            tol: cfg.gap_tol,
            a_bound,
            z_bound,
            min_stage: j,
            generators: vec![p.clone()],
        };
        let reports = scan_limits(&occ, &hs, &semigroup, &shifts, &panel, &opts).map_err(err)?;
        let mut zero = 0;
        for r in &reports {
            let best = r.closest.as_ref().ok_or("empty scan")?;
            worst = worst.max(best.delta);
            let ok = semigroup[best.index].is_zero() && best.delta < cfg.gap_tol;
            zero += ok as usize;
            if !ok {
                rows.push(format!("j={j} m={} best {} delta={:.6}", r.m, best.word, best.delta));
            }
        }
        passed &= zero == reports.len();
        rows.push(format!("j={j}: {zero}/{} gap shifts match zero", reports.len()));
    }
    Ok(Outcome { passed, detail: format!("worst delta {worst:.6}"), rows })
}

fn binomial(n: u64, k: u64) -> BigUint {
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

fn strong_check(cfg: &SuiteConfig) -> Check {
    let p = half();
    let (params, _) = capped_build(vec![p.clone()], cfg)?;
    let top = cfg.towers;
    let occ = expand_occupancy(&params, top - 1, top).map_err(err)?;
    let base = p.element(0);
    let mut rows = Vec::new();
    let mut norms = Vec::new();
    let mut q = FormalElement::identity();
    for n in 1..=32u32 {
        q = convolve(&q, &base);
        let s = strong_norm_sq(&occ, &q, &[0]).map_err(err)?;
        rows.push(format!("n={n} norm_sq={s:.6}"));
        norms.push(s);
    }
    let monotone = norms.windows(2).all(|w| w[1] <= w[0] + 0.05);
    let last = norms[31];
    let max_at = |n: u32| power(&base, n).max_coeff();
    let exact16 = max_at(16) == BigRational::new(12870.into(), 65536.into());
    let c32 = BigRational::new(binomial(32, 16).into(), (BigUint::one() << 32u32).into());
    let exact32 = max_at(32) == c32;
    let coeff32 = max_at(32).to_f64().unwrap_or(1.0);
    let passed = last < 0.3 && monotone && coeff32 < 0.15 && exact16 && exact32;
    Ok(Outcome {
        passed,
        detail: format!(
            "norm_sq(32)={last:.6}, non-increasing {}, max coeff(32)={coeff32:.6}, exact values {}",
            pass_word(monotone),
            pass_word(exact16 && exact32)
        ),
        rows,
    })
}

fn random_element(rng: &mut ChaCha20Rng) -> FormalElement {
    let lo = rng.gen_range(-3i64..=0);
    let hi = rng.gen_range(0i64..=3);
    let mut coeffs: Vec<(i64, BigRational)> = Vec::new();
    for z in lo..=hi {
        if rng.gen_ratio(3, 4) {
            let den: i64 = rng.gen_range(1..=12);
            coeffs.push((z, BigRational::new(rng.gen_range(0..=den).into(), den.into())));
        }
    }
    FormalElement::from_coeffs(coeffs, Word::identity()).expect("nonnegative coefficients")
}

fn algebra_check(cfg: &SuiteConfig) -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut failures = Vec::new();
    for t in 0..1000 {
        let a = random_element(&mut rng);
        let b = random_element(&mut rng);
        let c = random_element(&mut rng);
        let checks = [
            ("commutativity", convolve(&a, &b) == convolve(&b, &a)),
            (
                "associativity",
                convolve(&convolve(&a, &b), &c) == convolve(&a, &convolve(&b, &c)),
            ),
            ("mass", convolve(&a, &b).mass() == a.mass() * b.mass()),
            ("involution", adjoint(&adjoint(&a)) == a),
            ("anti-homomorphism", adjoint(&convolve(&a, &b)) == convolve(&adjoint(&a), &adjoint(&b))),
        ];
        for (name, ok) in checks {
            if !ok {
                failures.push(format!("element {t}: {name}"));
            }
        }
    }
    Ok(Outcome {
        passed: failures.is_empty(),
        detail: format!("1000 random triples, {} failures", failures.len()),
        rows: failures,
    })
}

fn oracle_check(cfg: &SuiteConfig) -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut builds = vec![
        gen_example(ExampleKind::TwoColumn, 6, 1, None).map_err(err)?,
        gen_example(ExampleKind::AllLimits, 5, 2, None).map_err(err)?,
    ];
    builds.extend((0..4).map(|_| random_params(&mut rng, 10_000)));
    let mut mismatches = Vec::new();
    for t in 0..100 {
        let p = builds.choose(&mut rng).expect("builds");
        let top = p.tower_count();
        let base = rng.gen_range(1..top);
        let occ = expand_occupancy(p, base, top).map_err(err)?;
        let arr = LabelArray::build(p, base, top, 10_000).map_err(err)?;
        let labels = occ.base_height().to_u64().ok_or("base height")?;
        let pick = |rng: &mut ChaCha20Rng| {
            let mut set: Vec<u64> =
                (0..labels).filter(|_| rng.gen_ratio(1, 3)).collect();
            if set.is_empty() {
                set.push(rng.gen_range(0..labels));
            }
            set
        };
        let a = pick(&mut rng);
        let b = pick(&mut rng);
        let n = arr.len() as i64;
        let m = BigInt::from(rng.gen_range(-n + 1..n));
        let fast = corr(&occ, &m, &a, &b).map_err(err)?.count;
        let slow = arr.corr_count(&m, &a, &b);
        if fast != slow {
            mismatches.push(format!("case {t}: m={m} factorized={fast} naive={slow}"));
        }
    }
    Ok(Outcome {
        passed: mismatches.is_empty(),
        detail: format!("100 cases, {} mismatches", mismatches.len()),
        rows: mismatches,
    })
}

fn form_check(cfg: &SuiteConfig) -> Check {
    let gens = vec![half(), third()];
    let (params, hs) = capped_build(gens.clone(), cfg)?;
    let top = cfg.towers;
    let k = gens.len();
    let base_stage = top - 3;
    let occ = expand_occupancy(&params, base_stage, top).map_err(err)?;
    let panel = CorrelationPanel::singletons(0..cfg.panel);
    let semigroup = enumerate_semigroup(&gens, 4, 1);
    let h = |j: usize| BigInt::from(hs[j - 1].clone());
    let letter = |j: usize, positive: bool| {
        let q = j % k;
        let e = gens[q].element(q);
        if positive {
            adjoint(&e)
        } else {
            e
        }
    };

    // (shift, expected element, stage governing the tolerance)
    let mut cases: Vec<(BigInt, FormalElement, Option<usize>)> =
        vec![(BigInt::from(0), FormalElement::identity(), None)];
    for j in [top - 2, top - 1] {
        for positive in [false, true] {
            let m = if positive { h(j) } else { -h(j) };
            cases.push((m, letter(j, positive), Some(j)));
        }
    }
    for (j1, j2) in [(top - 1, top - 2), (top - 2, top - 3)] {
        for a1 in 1..=2u32 {
            for a2 in 1..=2u32 {
                for positive in [false, true] {
                    let mag = h(j1) * a1 + h(j2) * a2;
                    let m = if positive { mag } else { -mag };
                    let e = convolve(
                        &power(&letter(j1, positive), a1),
                        &power(&letter(j2, positive), a2),
                    );
                    cases.push((m, e, Some(j2)));
                }
            }
        }
    }

    let shifts: Vec<BigInt> = cases.iter().map(|c| c.0.clone()).collect();
    let opts = ScanOptions {
        tol: f64::INFINITY,
        a_bound: 4,
        z_bound: 2 * cfg.panel,
        min_stage: base_stage,
        generators: gens.clone(),
    };
    let reports = scan_limits(&occ, &hs, &semigroup, &shifts, &panel, &opts).map_err(err)?;
    let mut rows = Vec::new();
    let mut good = 0;
    for ((m, expected, stage), r) in cases.iter().zip(&reports) {
        let best = r.closest.as_ref().ok_or("empty scan")?;
        let matched = &semigroup[best.index];
        let (ok, tol) = match stage {
            None => (matched.same_operator(expected) && best.delta == 0.0, 0.0),
            Some(j) => {
                let tol = eps(*j) + 3.0 * r.boundary_loss;
                let ok = matched.same_operator(expected)
                    && best.delta < tol
                    && r.consistent == Some(true);
                (ok, tol)
            }
        };
        good += ok as usize;
        let decomposition = r.decomposition.as_ref().map(|d| d.describe());
        let expected_delta = r
            .discrepancies
            .iter()
            .find(|(i, _)| semigroup[*i].same_operator(expected))
            .map(|(_, d)| format!("{d:.6}"))
            .unwrap_or_else(|| "n/a".into());
        rows.push(format!(
            "m={} [{}] expected {} (delta={expected_delta}) best {} delta={:.6} tol={tol:.6} {}",
            m,
            decomposition.unwrap_or_else(|| "none".into()),
            expected_word(expected, &semigroup),
            best.word,
            best.delta,
            pass_word(ok)
        ));
    }
    Ok(Outcome {
        passed: good == cases.len(),
        detail: format!("{good}/{} shifts match their product", cases.len()),
        rows,
    })
}

fn expected_word(e: &FormalElement, semigroup: &[FormalElement]) -> String {
    semigroup
        .iter()
        .find(|s| s.same_operator(e))
        .map(|s| s.word().to_string())
        .unwrap_or_else(|| "outside enumeration".into())
}
