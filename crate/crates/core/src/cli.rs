//! Command-line front end. Every entry point writes to caller-supplied
//! streams and returns the process exit code, so the CLI is testable
//! in-process.
//!
//! Exit codes: 0 on success, 1 when a scenario expectation fails, 2 on
//! parse, configuration or I/O errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::budget::{self, BudgetConfig};
use crate::scenario::{self, ScenarioProgram};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "wgsim", version, about = "WorldGuard / SPMP isolation simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute a scenario and check every expectation.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        report: ReportFormat,
        /// Shorthand for `--report json`.
        #[arg(long)]
        json: bool,
    },
    /// Parse and validate a scenario without running it.
    Check { file: PathBuf },
    /// Estimate the WID budget of one or more platform configurations.
    Budget(BudgetArgs),
    /// Tabulate WID totals over a family of configurations and flag caps.
    Sweep(BudgetArgs),
    /// Run a scenario under the unified and the separate SPMP model.
    CompareModels {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Built-in configuration set: table2 or fig2.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// Key-value configuration file; may be repeated.
    #[arg(long)]
    pub config: Vec<PathBuf>,
    #[arg(long)]
    pub csv: bool,
}

/// Parses `args` (including the program name) and dispatches.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(&cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            code
        }
    }
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Run { file, report, json } => {
            let format = if *json { ReportFormat::Json } else { *report };
            cmd_run(file, format, out)
        }
        Command::Check { file } => cmd_check(file, out),
        Command::Budget(args) => cmd_budget(args, "table2", out),
        Command::Sweep(args) => cmd_budget(args, "fig2", out),
        Command::CompareModels { file, json } => cmd_compare(file, *json, out),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

type CmdResult = Result<i32, String>;

fn load_scenario(path: &Path) -> Result<ScenarioProgram, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    scenario::parse_scenario(&text).map_err(|e| format!("{}:{e}", path.display()))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), String> {
    out.write_all(text.as_bytes()).map_err(|e| e.to_string())
}

fn cmd_run(path: &Path, format: ReportFormat, out: &mut dyn Write) -> CmdResult {
    let program = load_scenario(path)?;
    let report = scenario::run_scenario(&program);
    match format {
        ReportFormat::Text => emit(out, &report.render_text())?,
        ReportFormat::Json => emit(out, &report.render_json())?,
    }
    if let Some(e) = &report.setup_error {
        return Err(e.clone());
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_check(path: &Path, out: &mut dyn Write) -> CmdResult {
    let program = load_scenario(path)?;
    scenario::build_platform(&program.platform, scenario::ModelChoice::Declared).map_err(|e| e.to_string())?;
    emit(out, &format!("{}: ok ({} steps)\n", path.display(), program.steps.len()))?;
    Ok(EXIT_OK)
}

fn budget_configs(args: &BudgetArgs, default_preset: &str) -> Result<Vec<BudgetConfig>, String> {
    if !args.config.is_empty() {
        return args
            .config
            .iter()
            .map(|p| {
                let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
                budget::parse_config(&text).map_err(|e| format!("{}: {e}", p.display()))
            })
            .collect();
    }
    budget::preset(args.preset.as_deref().unwrap_or(default_preset)).map_err(|e| e.to_string())
}

fn cmd_budget(args: &BudgetArgs, default_preset: &str, out: &mut dyn Write) -> CmdResult {
    let configs = budget_configs(args, default_preset)?;
    let rows = budget::sweep(&configs).map_err(|e| e.to_string())?;
    let text = if args.csv { budget::render_csv(&rows) } else { budget::render_table(&rows) };
    emit(out, &text)?;
    Ok(EXIT_OK)
}

fn cmd_compare(path: &Path, json: bool, out: &mut dyn Write) -> CmdResult {
    let program = load_scenario(path)?;
    let cmp = scenario::compare_models(&program)
        .ok_or_else(|| "no hart declares both a unified and a separate SPMP model".to_string())?;
    if json {
        let value = serde_json::to_value(&cmp).map_err(|e| e.to_string())?;
        let mut s = serde_json::to_string_pretty(&value).map_err(|e| e.to_string())?;
        s.push('\n');
        emit(out, &s)?;
    } else {
        emit(out, &cmp.render_text())?;
    }
    Ok(EXIT_OK)
}
