//! WID budgets for the reference platforms, plus a custom configuration.
//!
//! cargo run --example wid_budget

use wgsim::budget::{self, BudgetConfig, HartSpec};

fn main() -> Result<(), budget::BudgetError> {
    println!("{}", budget::render_table(&budget::sweep(&budget::table2())?));
    print!("{}", budget::render_table(&budget::sweep(&budget::fig2())?));

    let custom = BudgetConfig {
        label: "two guests per core".into(),
        harts: vec![HartSpec::virtualized(2); 4],
        anms: 24,
        note: None,
    };
    let b = budget::estimate_wids(&custom)?;
    println!("\n{}: {} WIDs, over {:?}", custom.label, b.total, budget::exceeded_thresholds(b.total));
    Ok(())
}
