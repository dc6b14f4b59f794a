//! Scenario DSL: a platform declaration followed by a line-oriented script.
//!
//! ```text
//! platform {
//!   nworlds = 8;
//!   hart h0 { mwid = 0; ext = [smwg, smwgd, sswg]; spmp = unified; entries = 16; }
//!   anm dma0 { wid = 7; }
//!   memory sram { base = 0x2000_0000; size = 0x1_0000; slots = 4; }
//!   peripheral uart { base = 0x4000_0000; size = 0x1000; }
//!   vm guest { wids = [4, 5]; hslwid = 4; hswitch = 0xff00; prestaged = true; }
//! }
//! on h0: mode HS
//! on h0: csrw slwid 4 => accepted
//! on h0: access r 0x2000_0000 4 => deny:checker
//! anm dma0: access w 0x4000_0000 => allow
//! checker sram slot 0 range 0 0x1000 wid 4 rw lock
//! expect stat denials.checker == 1
//! ```

mod ast;
mod lexer;
mod parser;
mod printer;
mod runner;

use thiserror::Error;

pub use ast::*;
pub use parser::parse_scenario;
pub use printer::{print_scenario, print_statement};
pub use runner::{
    build_platform, compare_models, render_utilization, run_scenario, run_with_models, Divergence,
    ModelChoice, ModelComparison, RunReport, StepOutcome, StepStatus,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}
