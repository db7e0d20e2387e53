//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Sample count and seed can be changed through `DYNIT_ACCEPT_SAMPLES` and
//! `DYNIT_SEED`; the defaults are the values the tolerances were pinned for.

use std::process::ExitCode;

use dynit::acceptance::{acceptance_report, AcceptanceConfig};
use dynit::experiments::default_specs;

fn env_parse<T: std::str::FromStr>(key: &str) -> Option<T> {
    std::env::var(key).ok().and_then(|v| v.parse().ok())
}

fn main() -> ExitCode {
    let defaults = AcceptanceConfig::default();
    let cfg = AcceptanceConfig {
        samples: env_parse("DYNIT_ACCEPT_SAMPLES").unwrap_or(defaults.samples),
        seed: env_parse("DYNIT_SEED").unwrap_or(defaults.seed),
        ..defaults
    };
    let started = std::time::Instant::now();
    let report = acceptance_report(&default_specs(), cfg, None);
    print!("{report}");
    println!("elapsed {:.1}s", started.elapsed().as_secs_f64());
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
