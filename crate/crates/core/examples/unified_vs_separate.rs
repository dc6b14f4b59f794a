//! Runs the nine-region guest scenario under both hypervisor SPMP layouts
//! and shows where they disagree and how full each partition is.
//!
//! cargo run --example unified_vs_separate

use wgsim::scenario::{compare_models, parse_scenario};

const SCRIPT: &str = include_str!("../scenarios/unified_vs_separate.wgs");

fn main() {
    let program = parse_scenario(SCRIPT).expect("bundled scenario parses");
    let cmp = compare_models(&program).expect("hart declares both models");
    print!("{}", cmp.render_text());
}
