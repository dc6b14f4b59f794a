//! Parses and runs a scenario file, printing the step-by-step report.
//!
//! cargo run --example run_scenario -- crates/core/scenarios/revocation.wgs

use std::process::ExitCode;

use wgsim::scenario::{parse_scenario, run_scenario};

fn main() -> ExitCode {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/init_flow.wgs").to_string());
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{path}: {e}");
            return ExitCode::from(2);
        }
    };
    let program = match parse_scenario(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{path}:{e}");
            return ExitCode::from(2);
        }
    };
    let report = run_scenario(&program);
    print!("{}", report.render_text());
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
