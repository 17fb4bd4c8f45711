//! `rankone`: build rank-one constructions, scan shifts for weak limits,
//! run the acceptance suite and tabulate semigroups.

mod commands;
mod config;
mod error;
mod shift;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "rankone", version, about = "Rank-one constructions and weak-limit scans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a parameter set and its heights table.
    Build(BuildArgs),
    /// Match shifts T^m against semigroup elements.
    Scan(ScanArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
    /// Tabulate the semigroup generated by P_1, ..., P_k and adjoints.
    Semigroup(SemigroupArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter file written by `build`.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of towers J.
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long = "base-stage")]
    base_stage: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit timestamp lines so identical runs give identical files.
    #[arg(long = "no-timestamp")]
    no_timestamp: bool,
}

impl Common {
    fn into_config(self) -> (Option<PathBuf>, RunConfig) {
        let cfg = RunConfig {
            params: self.params,
            seed: self.seed,
            stages: self.stages,
            base_stage: self.base_stage,
            tol: self.tol,
            out: self.out,
            no_timestamp: self.no_timestamp.then_some(true),
            ..RunConfig::default()
        };
        (self.config, cfg)
    }
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    common: Common,
    /// mix-identity, two-column or all-limits.
    #[arg(long)]
    example: Option<String>,
    /// Generator coefficients, e.g. "1/2,1/2"; repeat for several generators.
    #[arg(long)]
    p: Vec<String>,
    #[arg(long)]
    h1: Option<u64>,
    /// Column counts for examples, e.g. "3,4,5".
    #[arg(long = "r-schedule", value_delimiter = ',')]
    r_schedule: Option<Vec<usize>>,
    /// Clamp Sidon values to 2^bits.
    #[arg(long = "sidon-cap-bits")]
    sidon_cap_bits: Option<u32>,
    /// Constant frequency tolerance instead of 1/(j+1).
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long = "max-r")]
    max_r: Option<usize>,
    /// Heights CSV path; defaults to <out>.heights.csv.
    #[arg(long)]
    heights: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
    /// Shift expressions or ranges, e.g. "-2h4", "h3-2..h3+2".
    #[arg(long, allow_hyphen_values = true)]
    m: Vec<String>,
    /// Number of sampled gap shifts.
    #[arg(long)]
    gaps: Option<usize>,
    #[arg(long = "gap-stage")]
    gap_stage: Option<usize>,
    /// Gap shifts start at this multiple of h_j.
    #[arg(long = "gap-lower")]
    gap_lower: Option<u64>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long = "z-range")]
    z_range: Option<u32>,
    /// Singleton test levels 0..panel.
    #[arg(long)]
    panel: Option<u64>,
    /// Generators, overriding those recorded in the params file.
    #[arg(long)]
    p: Vec<String>,
    /// Expected best match, "EXPR=WORD" or "EXPR=none".
    #[arg(long, allow_hyphen_values = true)]
    expect: Vec<String>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Criterion keys or numbers.
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
}

#[derive(Args, Debug)]
struct SemigroupArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    p: Vec<String>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long = "z-range")]
    z_range: Option<u32>,
}

fn parse_expectations(list: Vec<String>) -> CliResult<BTreeMap<String, String>> {
    list.into_iter()
        .map(|e| {
            e.rsplit_once('=')
                .map(|(m, w)| (m.trim().to_string(), w.trim().to_string()))
                .ok_or_else(|| CliError::Usage(format!("expectation '{e}' is not EXPR=WORD")))
        })
        .collect()
}

fn resolve(file: Option<PathBuf>, flags: RunConfig) -> CliResult<RunConfig> {
    let base = match file {
        Some(p) => RunConfig::load(&p)?,
        None => RunConfig::default(),
    };
    let cfg = base.overlay(flags);
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Build(a) => {
            let (file, mut cfg) = a.common.into_config();
            cfg.example = a.example;
            cfg.p = a.p;
            cfg.h1 = a.h1;
            cfg.r_schedule = a.r_schedule;
            cfg.sidon_cap_bits = a.sidon_cap_bits;
            cfg.eps = a.eps;
            cfg.max_r = a.max_r;
            cfg.heights = a.heights;
            commands::build(&resolve(file, cfg)?)
        }
        Command::Scan(a) => {
            let (file, mut cfg) = a.common.into_config();
            cfg.shifts = a.m;
            cfg.gaps = a.gaps;
            cfg.gap_stage = a.gap_stage;
            cfg.gap_lower = a.gap_lower;
            cfg.degree = a.degree;
            cfg.z_range = a.z_range;
            cfg.panel = a.panel;
            cfg.p = a.p;
            cfg.expect = parse_expectations(a.expect)?;
            commands::scan(&resolve(file, cfg)?)
        }
        Command::Verify(a) => {
            let (file, mut cfg) = a.common.into_config();
            cfg.only = a.only;
            commands::verify(&resolve(file, cfg)?)
        }
        Command::Semigroup(a) => {
            let (file, mut cfg) = a.common.into_config();
            cfg.p = a.p;
            cfg.degree = a.degree;
            cfg.z_range = a.z_range;
            commands::semigroup(&resolve(file, cfg)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("bad arguments").trim_start_matches("error: ");
            eprintln!("{}", CliError::Usage(first.to_string()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_status())
        }
    }
}
