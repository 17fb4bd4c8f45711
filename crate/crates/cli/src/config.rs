//! Run configuration: a JSON file passed with `--config`, overridden by flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Named example: `mix-identity`, `two-column` or `all-limits`.
    pub example: Option<String>,
    /// Generator coefficient lists, one per generator.
    pub p: Vec<String>,
    pub h1: Option<u64>,
    pub r_schedule: Option<Vec<usize>>,
    pub sidon_cap_bits: Option<u32>,
    pub eps: Option<f64>,
    pub max_r: Option<usize>,
    pub params: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Number of towers `J`.
    pub stages: Option<usize>,
    pub base_stage: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub heights: Option<PathBuf>,
    pub no_timestamp: Option<bool>,
    /// Shift expressions or ranges.
    pub shifts: Vec<String>,
    pub gaps: Option<usize>,
    pub gap_stage: Option<usize>,
    pub gap_lower: Option<u64>,
    pub degree: Option<u32>,
    pub z_range: Option<u32>,
    pub panel: Option<u64>,
    /// Shift expression to expected best word, or `none`.
    pub expect: BTreeMap<String, String>,
    pub only: Vec<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    #[cfg(test)]
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Values set in `over` win.
    pub fn overlay(self, over: RunConfig) -> RunConfig {
        fn pick<T>(base: Option<T>, over: Option<T>) -> Option<T> {
            over.or(base)
        }
        fn list<T>(base: Vec<T>, over: Vec<T>) -> Vec<T> {
            if over.is_empty() {
                base
            } else {
                over
            }
        }
        let mut expect = self.expect;
        expect.extend(over.expect);
        RunConfig {
            example: pick(self.example, over.example),
            p: list(self.p, over.p),
            h1: pick(self.h1, over.h1),
            r_schedule: pick(self.r_schedule, over.r_schedule),
            sidon_cap_bits: pick(self.sidon_cap_bits, over.sidon_cap_bits),
            eps: pick(self.eps, over.eps),
            max_r: pick(self.max_r, over.max_r),
            params: pick(self.params, over.params),
            seed: pick(self.seed, over.seed),
            stages: pick(self.stages, over.stages),
            base_stage: pick(self.base_stage, over.base_stage),
            tol: pick(self.tol, over.tol),
            out: pick(self.out, over.out),
            heights: pick(self.heights, over.heights),
            no_timestamp: pick(self.no_timestamp, over.no_timestamp),
            shifts: list(self.shifts, over.shifts),
            gaps: pick(self.gaps, over.gaps),
            gap_stage: pick(self.gap_stage, over.gap_stage),
            gap_lower: pick(self.gap_lower, over.gap_lower),
            degree: pick(self.degree, over.degree),
            z_range: pick(self.z_range, over.z_range),
            panel: pick(self.panel, over.panel),
            expect,
            only: list(self.only, over.only),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if let Some(p) = &self.params {
            if !p.is_file() {
                return bad(format!("params file {} does not exist", p.display()));
            }
        }
        let positive = [
            ("h1", self.h1.map(|v| v as f64)),
            ("stages", self.stages.map(|v| v as f64)),
            ("base_stage", self.base_stage.map(|v| v as f64)),
            ("gaps", self.gaps.map(|v| v as f64)),
            ("gap_stage", self.gap_stage.map(|v| v as f64)),
            ("gap_lower", self.gap_lower.map(|v| v as f64)),
            ("panel", self.panel.map(|v| v as f64)),
            ("max_r", self.max_r.map(|v| v as f64)),
            ("tol", self.tol),
            ("eps", self.eps),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if v <= 0.0 || !v.is_finite() {
                    return bad(format!("{name} must be positive"));
                }
            }
        }
        if self.stages.is_some_and(|j| j < 2) {
            return bad("stages must be at least 2".into());
        }
        Ok(())
    }

    pub fn timestamp(&self) -> bool {
        !self.no_timestamp.unwrap_or(false)
    }
}

/// `# generated: <time>` unless disabled.
pub fn timestamp_line(cfg: &RunConfig) -> Option<String> {
    cfg.timestamp().then(|| format!("# generated: {}", chrono::Utc::now().to_rfc3339()))
}
