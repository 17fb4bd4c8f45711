use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use num_bigint::{BigInt, BigUint};
use num_traits::One;
use serde_json::{json, Value};

use rankone::acceptance::{run_suite, select, SuiteConfig, DEFAULT_SEED};
use rankone::construction::{copy_count, EpsSchedule};
use rankone::series::Word;
use rankone::weaktop::{sample_gap_shifts, scan_limits, write_scan_csv, CorrelationPanel, ScanOptions};
use rankone::{
    enumerate_semigroup, expand_occupancy, gen_example, gen_p_construction, heights,
    validate_params, AdmissibleSeries, ConstructionError, ConstructionParams, ExampleKind,
    PConstructionSpec, SidonPolicy,
};

use crate::config::{timestamp_line, RunConfig};
use crate::error::{CliError, CliResult};
use crate::shift::{parse_shift, parse_shifts};

const DEFAULT_TOWERS: usize = 5;
const DEFAULT_TOL: f64 = 0.1;
const DEFAULT_PANEL: u64 = 12;

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn parse_generators(list: &[String]) -> CliResult<Vec<AdmissibleSeries>> {
    list.iter()
        .map(|s| {
            s.parse::<AdmissibleSeries>()
                .map_err(|e| CliError::Usage(format!("coefficient list '{s}': {e}")))
        })
        .collect()
}

pub fn load_params(path: &Path) -> CliResult<ConstructionParams> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let params = ConstructionParams::from_json_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let violations = validate_params(&params);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(CliError::Config(format!("{}: {}", path.display(), list.join("; "))));
    }
    Ok(params)
}

/// Generators recorded by the generator, if any.
fn recorded_generators(params: &ConstructionParams) -> CliResult<Vec<AdmissibleSeries>> {
    let Some(list) = params.meta.policies.get("generators").and_then(Value::as_array) else {
        return Ok(Vec::new());
    };
    list.iter()
        .map(|v| {
            v.as_str()
                .ok_or_else(|| CliError::Config("meta.policies.generators".into()))?
                .parse::<AdmissibleSeries>()
                .map_err(|e| CliError::Config(format!("meta.policies.generators: {e}")))
        })
        .collect()
}

fn generators(cfg: &RunConfig, params: Option<&ConstructionParams>) -> CliResult<Vec<AdmissibleSeries>> {
    if !cfg.p.is_empty() {
        return parse_generators(&cfg.p);
    }
    params.map(recorded_generators).unwrap_or(Ok(Vec::new()))
}

fn generate(cfg: &RunConfig) -> CliResult<ConstructionParams> {
    let towers = cfg.stages.unwrap_or(DEFAULT_TOWERS);
    let h1 = cfg.h1.unwrap_or(1);
    match (&cfg.example, cfg.p.is_empty()) {
        (Some(_), false) => Err(CliError::Usage("give either --example or --p, not both".into())),
        (None, true) => Err(CliError::Usage("build needs --example or --p".into())),
        (Some(name), true) => {
            let kind: ExampleKind =
                name.parse().map_err(|e: ConstructionError| CliError::Usage(e.to_string()))?;
            gen_example(kind, towers, h1, cfg.r_schedule.as_deref())
                .map_err(|e| CliError::Usage(e.to_string()))
        }
        (None, false) => {
            let mut spec = PConstructionSpec::new(
                parse_generators(&cfg.p)?,
                towers,
                cfg.seed.unwrap_or(DEFAULT_SEED),
            );
            spec.h1 = h1;
            if let Some(bits) = cfg.sidon_cap_bits {
                spec.sidon = SidonPolicy::capped(BigUint::one() << bits);
            }
            if let Some(e) = cfg.eps {
                spec.eps = EpsSchedule::Constant(e);
            }
            if let Some(r) = cfg.max_r {
                spec.r_policy.max_r = r;
            }
            match gen_p_construction(&spec) {
                Ok(g) => Ok(g.params),
                Err(ConstructionError::Generation { stage, r, report }) => {
                    eprint!("{report}");
                    Err(CliError::Generation(format!(
                        "stage {stage}: frequency check still failing at r = {r}"
                    )))
                }
                Err(e) => Err(CliError::Usage(e.to_string())),
            }
        }
    }
}

fn heights_csv(cfg: &RunConfig, params: &ConstructionParams, hs: &[BigUint]) -> String {
    let mut out = String::new();
    if let Some(t) = timestamp_line(cfg) {
        out.push_str(&t);
        out.push('\n');
    }
    out.push_str("stage,height,r,spacer_total\n");
    for (idx, h) in hs.iter().enumerate() {
        match params.stages.get(idx) {
            Some(s) => out.push_str(&format!("{},{h},{},{}\n", idx + 1, s.r, s.spacer_total())),
            None => out.push_str(&format!("{},{h},,\n", idx + 1)),
        }
    }
    out
}

fn default_heights_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.heights.csv"))
}

pub fn build(cfg: &RunConfig) -> CliResult<()> {
    let params = generate(cfg)?;
    let hs = heights(&params).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut doc = params.to_json();
    if let Some(t) = timestamp_line(cfg) {
        doc["generated_at"] = json!(t.trim_start_matches("# generated: "));
    }
    let text = serde_json::to_string_pretty(&doc).expect("json values serialize") + "\n";
    write_output(cfg.out.as_deref(), &text)?;

    let heights_path = cfg.heights.clone().or_else(|| cfg.out.as_deref().map(default_heights_path));
    if let Some(p) = &heights_path {
        write_output(Some(p), &heights_csv(cfg, &params, &hs))?;
    }

    let top = hs.len();
    let mut summary = format!("window h_{top} = {}\n", hs[top - 1]);
    for base in 1..top {
        summary.push_str(&format!(
            "base stage {base}: h_{base} = {}, copies per label = {}\n",
            hs[base - 1],
            copy_count(&params, base, top)
        ));
    }
    if !params.meta.sidon_conforming {
        summary.push_str("sidon cap clamped some values (non-conforming)\n");
    }
    if cfg.out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(())
}

pub fn scan(cfg: &RunConfig) -> CliResult<()> {
    let path = cfg.params.as_deref().ok_or_else(|| CliError::Usage("scan needs --params".into()))?;
    let params = load_params(path)?;
    let hs = heights(&params).map_err(|e| CliError::Config(e.to_string()))?;
    let top = cfg.stages.unwrap_or(params.tower_count());
    let base = cfg.base_stage.unwrap_or(top.saturating_sub(2).max(1));
    let occ = expand_occupancy(&params, base, top).map_err(|e| CliError::Config(e.to_string()))?;
    let gens = generators(cfg, Some(&params))?;
    let degree = cfg.degree.unwrap_or(2);
    let z_range = cfg.z_range.unwrap_or(1);
    let semigroup = enumerate_semigroup(&gens, degree, z_range);
    let panel_n = cfg.panel.unwrap_or(DEFAULT_PANEL);
    let panel_n = occ.base_height().try_into().map_or(panel_n, |h: u64| panel_n.min(h));
    let panel = CorrelationPanel::singletons(0..panel_n);
    let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
    let a_bound = (top as u64).max(4);
    let z_bound = 2 * panel_n;

    let mut shifts: Vec<BigInt> = Vec::new();
    for e in &cfg.shifts {
        shifts.extend(parse_shifts(e, &hs)?);
    }
    let mut expectations = Vec::new();
    for (e, word) in &cfg.expect {
        let m = parse_shift(e, &hs)?;
        expectations.push((e.clone(), m.clone(), word.clone()));
        shifts.push(m);
    }
    if let Some(n) = cfg.gaps {
        let stage = cfg.gap_stage.unwrap_or(base);
        if stage < 1 || stage >= hs.len() {
            return Err(CliError::Config(format!("gap stage {stage} has no next stage")));
        }
        let lower = cfg.gap_lower.unwrap_or(4);
        let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
        shifts.extend(
            sample_gap_shifts(&hs, stage, lower, n, base, a_bound, z_bound, seed)
                .map_err(|e| CliError::Config(e.to_string()))?,
        );
    }
    let mut seen = std::collections::HashSet::new();
    shifts.retain(|m| seen.insert(m.clone()));
    if shifts.is_empty() {
        return Err(CliError::Usage("no shifts: give --m, --gaps or expectations".into()));
    }

    let opts = ScanOptions { tol, a_bound, z_bound, min_stage: base, generators: gens.clone() };
    let reports = scan_limits(&occ, &hs, &semigroup, &shifts, &panel, &opts)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let excluded = semigroup
        .iter()
        .filter(|e| BigUint::from(e.support_radius()) * 4u32 >= *occ.window())
        .count();
    let skipped = reports.iter().filter(|r| r.skipped.is_some()).count();
    let matched = reports.iter().filter(|r| r.best_match.is_some()).count();

    let mut meta: Vec<(String, String)> = Vec::new();
    if let Some(t) = timestamp_line(cfg) {
        meta.push(("generated".into(), t.trim_start_matches("# generated: ").into()));
    }
    meta.extend([
        ("params".into(), path.display().to_string()),
        ("construction".into(), params.meta.generator.clone()),
        ("seed".into(), params.meta.seed.map_or("none".into(), |s| s.to_string())),
        ("base_stage".into(), base.to_string()),
        ("top_stage".into(), top.to_string()),
        ("window".into(), occ.window().to_string()),
        ("panel".into(), format!("singletons 0..{panel_n}")),
        ("tol".into(), tol.to_string()),
        ("semigroup".into(), format!("degree {degree}, z_range {z_range}, {} elements", semigroup.len())),
        ("support_too_wide".into(), excluded.to_string()),
        ("shifts".into(), shifts.len().to_string()),
        ("skipped".into(), skipped.to_string()),
    ]);
    let mut buf = Vec::new();
    write_scan_csv(&mut buf, &meta, &reports, &semigroup)?;
    write_output(cfg.out.as_deref(), &String::from_utf8_lossy(&buf))?;
    eprintln!(
        "scanned {} shifts: {matched} matched, {} no match, {skipped} skipped",
        reports.len(),
        reports.len() - matched - skipped
    );

    let mut failures = Vec::new();
    for (expr, m, word) in &expectations {
        let report = reports.iter().find(|r| &r.m == m).expect("expectation shifts are scanned");
        let ok = if word == "none" {
            report.best_match.is_none()
        } else {
            let w: Word = word
                .parse()
                .map_err(|e| CliError::Usage(format!("expected word '{word}': {e}")))?;
            let target = w
                .evaluate(&gens)
                .ok_or_else(|| CliError::Usage(format!("word '{word}' names a missing generator")))?;
            report.best_match.as_ref().is_some_and(|b| semigroup[b.index].same_operator(&target))
        };
        if !ok {
            let got = report.best_match.as_ref().map_or("none", |b| b.word.as_str());
            eprintln!("expectation failed: {expr} expected {word}, got {got}");
            failures.push(expr.clone());
        }
    }
    if !failures.is_empty() {
        return Err(CliError::Assertion(format!(
            "{} of {} expectations failed",
            failures.len(),
            expectations.len()
        )));
    }
    Ok(())
}

pub fn verify(cfg: &RunConfig) -> CliResult<()> {
    if let Some(p) = &cfg.params {
        let params = load_params(p)?;
        heights(&params).map_err(|e| CliError::Config(e.to_string()))?;
    }
    let mut suite = SuiteConfig { only: cfg.only.clone(), ..SuiteConfig::default() };
    if let Some(s) = cfg.seed {
        suite.seed = s;
    }
    if let Some(j) = cfg.stages {
        if j < 4 {
            return Err(CliError::Usage("verify needs at least 4 stages".into()));
        }
        suite.towers = j;
    }
    if let Some(t) = cfg.tol {
        suite.gap_tol = t;
    }
    select(&suite.only).map_err(CliError::Usage)?;
    let results = run_suite(&suite).map_err(CliError::Usage)?;
    for r in &results {
        println!("{r}");
    }
    if let Some(out) = &cfg.out {
        let doc = json!({
            "seed": suite.seed,
            "towers": suite.towers,
            "criteria": results.iter().map(|r| json!({
                "id": r.criterion.id,
                "key": r.criterion.key,
                "title": r.criterion.title,
                "passed": r.passed,
                "elapsed_s": r.elapsed.as_secs_f64(),
                "limit_s": r.criterion.limit.as_secs(),
                "detail": r.detail,
                "rows": r.rows,
            })).collect::<Vec<_>>(),
        });
        let text = serde_json::to_string_pretty(&doc).expect("json values serialize") + "\n";
        write_output(Some(out), &text)?;
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::Assertion(format!("{failed} of {} criteria failed", results.len())));
    }
    Ok(())
}

pub fn semigroup(cfg: &RunConfig) -> CliResult<()> {
    let params = cfg.params.as_deref().map(load_params).transpose()?;
    let gens = generators(cfg, params.as_ref())?;
    if gens.is_empty() {
        return Err(CliError::Usage("semigroup needs --p or a params file with generators".into()));
    }
    let elements = enumerate_semigroup(&gens, cfg.degree.unwrap_or(2), cfg.z_range.unwrap_or(1));
    let mut out = String::new();
    if let Some(t) = timestamp_line(cfg) {
        out.push_str(&t);
        out.push('\n');
    }
    out.push_str("index,word,mass,support_min,support_max,coefficients\n");
    for (i, e) in elements.iter().enumerate() {
        let lo = e.coeffs().keys().next().map_or(String::new(), |z| z.to_string());
        let hi = e.coeffs().keys().next_back().map_or(String::new(), |z| z.to_string());
        let coeffs: Vec<String> = e.coeffs().iter().map(|(z, c)| format!("{z}:{c}")).collect();
        out.push_str(&format!("{i},{},{},{lo},{hi},{}\n", e.word(), e.mass(), coeffs.join(";")));
    }
    write_output(cfg.out.as_deref(), &out)
}
