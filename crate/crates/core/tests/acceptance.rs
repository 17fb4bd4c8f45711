//! Runs every acceptance criterion and prints one line per criterion.

use std::process::ExitCode;

use rankone::acceptance::{run_suite, SuiteConfig};

fn main() -> ExitCode {
    let cfg = SuiteConfig {
        only: std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect(),
        ..SuiteConfig::default()
    };
    let results = match run_suite(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    for r in &results {
        println!("{r}");
        if std::env::var_os("ACCEPTANCE_VERBOSE").is_some() || !r.passed {
            for row in &r.rows {
                println!("    {row}");
            }
        }
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
