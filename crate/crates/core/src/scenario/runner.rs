use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::ast::*;
use super::printer::print_statement;
use crate::fabric::{BusPerms, Platform, ResourceChecker};
use crate::hart::{ConfigError, HartConfig, PrivilegeMode, Wid, WriteOutcome};
use crate::spmp::{self, CheckVerdict, HypervisorModel, Stage, Utilization, VmImage};

/// Which SPMP model variant each hart runs with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    /// The first model listed for each hart.
    Declared,
    Unified,
    Separate,
}

fn pick_model(models: &[HypervisorModel], choice: ModelChoice) -> HypervisorModel {
    let want = |m: &&HypervisorModel| match choice {
        ModelChoice::Declared => true,
        ModelChoice::Unified => matches!(m, HypervisorModel::Unified),
        ModelChoice::Separate => matches!(m, HypervisorModel::Separate { .. }),
    };
    models.iter().find(want).or(models.first()).copied().unwrap_or(HypervisorModel::Unified)
}

pub fn build_platform(decl: &PlatformDecl, choice: ModelChoice) -> Result<Platform, ConfigError> {
    let mut p = Platform::new(decl.nworlds)?;
    for h in &decl.harts {
        let mut cfg = HartConfig::new(0, h.mwid, h.ext, decl.nworlds);
        cfg.spmp_entries = h.entries;
        cfg.pmp_entries = h.pmp_entries;
        cfg.model = pick_model(&h.models, choice);
        p.add_hart(h.name.clone(), cfg)?;
    }
    for a in &decl.anms {
        p.add_anm(a.name.clone(), a.wid)?;
    }
    for r in &decl.resources {
        let c = match r.kind {
            ResourceKind::Memory => ResourceChecker::memory(r.name.clone(), r.base, r.size, r.slots),
            ResourceKind::Peripheral => ResourceChecker::peripheral(r.name.clone(), r.base, r.size),
        };
        p.add_checker(c)?;
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepStatus {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepOutcome {
    pub index: usize,
    pub line: usize,
    pub message: Option<String>,
    pub observed: String,
    pub statement: String,
    pub status: StepStatus,
    /// Set for access steps.
    pub verdict: Option<CheckVerdict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub counters: BTreeMap<String, u64>,
    pub pass: bool,
    pub setup_error: Option<String>,
    pub steps: Vec<StepOutcome>,
    pub utilization: BTreeMap<String, Utilization>,
}

impl RunReport {
    pub fn failed_steps(&self) -> impl Iterator<Item = &StepOutcome> {
        self.steps.iter().filter(|s| s.status == StepStatus::Fail)
    }

    /// Human-readable rendering: one line per step, then counters,
    /// utilization and the overall status.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        if let Some(e) = &self.setup_error {
            let _ = writeln!(out, "setup error: {e}");
        }
        for s in &self.steps {
            let status = match s.status {
                StepStatus::Pass => "PASS",
                StepStatus::Fail => "FAIL",
            };
            let _ = write!(out, "step {} line {} {status}: {} -> {}", s.index, s.line, s.statement, s.observed);
            if let Some(m) = &s.message {
                let _ = write!(out, " ({m})");
            }
            out.push('\n');
        }
        out.push_str("counters:\n");
        for (k, v) in &self.counters {
            let _ = writeln!(out, "  {k} = {v}");
        }
        if !self.utilization.is_empty() {
            out.push_str("utilization:\n");
            for (hart, u) in &self.utilization {
                let _ = writeln!(out, "  {hart}: {}", render_utilization(u));
            }
        }
        let _ = writeln!(out, "overall: {}", if self.pass { "PASS" } else { "FAIL" });
        out
    }

    /// Stable machine format: pretty JSON with sorted keys.
    pub fn render_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report is serializable");
        let mut s = serde_json::to_string_pretty(&value).expect("report is serializable");
        s.push('\n');
        s
    }
}

pub fn render_utilization(u: &Utilization) -> String {
    format!(
        "host {}/{} used, guest {}/{} used",
        u.host_used, u.host_available, u.guest_used, u.guest_available
    )
}

fn initial_counters(decl: &PlatformDecl) -> BTreeMap<String, u64> {
    let mut c = BTreeMap::new();
    for k in ["csr_writes", "entry_writes", "accesses"] {
        c.insert(k.to_string(), 0);
    }
    for h in &decl.harts {
        c.insert(format!("csr_writes.{}", h.name), 0);
        c.insert(format!("entry_writes.{}", h.name), 0);
    }
    for s in Stage::ALL {
        c.insert(format!("denials.{s}"), 0);
    }
    c
}

struct Runner<'a> {
    decl: &'a PlatformDecl,
    platform: Platform,
    counters: BTreeMap<String, u64>,
}

type StepResult = (bool, String, Option<String>, Option<CheckVerdict>);

fn matches_expectation(v: &CheckVerdict, e: &Expectation) -> bool {
    match e {
        Expectation::Allow => v.allow,
        Expectation::Deny(None) => !v.allow,
        Expectation::Deny(Some(stage)) => v.deny_stage == Some(*stage),
    }
}

fn write_outcome_str(o: &WriteOutcome) -> String {
    match o {
        WriteOutcome::Accepted => "accepted".into(),
        WriteOutcome::IgnoredIllegalValue => "ignored".into(),
        WriteOutcome::AccessViolation(v) => format!("violation ({v})"),
    }
}

impl Runner<'_> {
    fn bump(&mut self, key: &str, by: u64) {
        *self.counters.entry(key.to_string()).or_insert(0) += by;
    }

    fn record_verdict(&mut self, v: &CheckVerdict) {
        self.bump("accesses", 1);
        if let Some(stage) = v.deny_stage {
            self.bump(&format!("denials.{stage}"), 1);
        }
    }

    fn hart_entry_writes(&mut self, hart: &str, n: u64) {
        self.bump("entry_writes", n);
        self.bump(&format!("entry_writes.{hart}"), n);
    }

    fn step(&mut self, stmt: &Statement) -> StepResult {
        let fail = |observed: String, msg: String| (false, observed, Some(msg), None);
        match stmt {
            Statement::Mode { hart, mode } => {
                let h = self.platform.hart_mut(hart).expect("validated hart");
                match h.set_mode(*mode) {
                    Ok(()) => (true, "ok".into(), None, None),
                    Err(e) => fail("error".into(), e.to_string()),
                }
            }
            Statement::Csrw { hart, csr, value, expect } => {
                let h = self.platform.hart_mut(hart).expect("validated hart");
                let out = h.csr_write(*csr, *value);
                if !matches!(out, WriteOutcome::AccessViolation(_)) {
                    self.bump("csr_writes", 1);
                    self.bump(&format!("csr_writes.{hart}"), 1);
                }
                let ok = match expect {
                    None => !matches!(out, WriteOutcome::AccessViolation(_)),
                    Some(WriteExpect::Accepted) => out == WriteOutcome::Accepted,
                    Some(WriteExpect::Ignored) => out == WriteOutcome::IgnoredIllegalValue,
                    Some(WriteExpect::Violation) => matches!(out, WriteOutcome::AccessViolation(_)),
                };
                (ok, write_outcome_str(&out), None, None)
            }
            Statement::ExpectCsrr { hart, csr, value } => {
                let h = self.platform.hart(hart).expect("validated hart");
                match h.csr_read(*csr) {
                    Ok(v) if v == *value => (true, format!("{v:#x}"), None, None),
                    Ok(v) => fail(format!("{v:#x}"), format!("expected {value:#x}")),
                    Err(e) => fail(format!("violation ({e})"), format!("expected {value:#x}")),
                }
            }
            Statement::Spmp { hart, index, entry } => {
                let h = self.platform.hart_mut(hart).expect("validated hart");
                let mode = h.mode();
                let unit = match mode {
                    PrivilegeMode::M | PrivilegeMode::HS => h.hspmp_mut(),
                    PrivilegeMode::VS => h.vspmp_mut(),
                    PrivilegeMode::U | PrivilegeMode::VU => {
                        return fail("violation".into(), format!("{mode} cannot program SPMP entries"));
                    }
                };
                match unit.map(|u| u.write_entry(*index, *entry)) {
                    Some(Ok(())) => {
                        self.hart_entry_writes(hart, 2);
                        (true, "ok".into(), None, None)
                    }
                    Some(Err(e)) => fail("error".into(), e.to_string()),
                    None => fail("error".into(), format!("no SPMP unit reachable from {mode}")),
                }
            }
            Statement::Pmp { hart, index, entry } => {
                let h = self.platform.hart_mut(hart).expect("validated hart");
                if h.mode() != PrivilegeMode::M {
                    return fail("violation".into(), "only M-mode programs the PMP".into());
                }
                match h.mpmp_mut().write_entry(*index, *entry) {
                    Ok(()) => {
                        self.hart_entry_writes(hart, 2);
                        (true, "ok".into(), None, None)
                    }
                    Err(e) => fail("error".into(), e.to_string()),
                }
            }
            Statement::Access { hart, kind, addr, size, expect } => {
                match self.platform.hart_access(hart, *addr, *size, *kind).expect("validated hart") {
                    Ok(v) => {
                        self.record_verdict(&v);
                        (matches_expectation(&v, expect), v.to_string(), None, Some(v))
                    }
                    Err(e) => fail("error".into(), e.to_string()),
                }
            }
            Statement::AnmAccess { anm, kind, addr, size, expect } => {
                match self.platform.anm_access(anm, *addr, *size, *kind).expect("validated ANM") {
                    Ok(v) => {
                        self.record_verdict(&v);
                        (matches_expectation(&v, expect), v.to_string(), None, Some(v))
                    }
                    Err(e) => fail("error".into(), e.to_string()),
                }
            }
            Statement::VmSwitch { hart, vm } => {
                let d = self.decl.vms.iter().find(|v| &v.name == vm).expect("validated VM");
                let image = VmImage {
                    name: d.name.clone(),
                    wids: d.wids.clone(),
                    hslwid: d.hslwid,
                    entries: d.entries.clone(),
                    hswitch_mask: d.hswitch,
                    prestaged: d.prestaged,
                };
                let h = self.platform.hart_mut(hart).expect("validated hart");
                match spmp::vm_switch(h, &image) {
                    Ok(stats) => {
                        self.bump("csr_writes", stats.csr_writes as u64);
                        self.bump(&format!("csr_writes.{hart}"), stats.csr_writes as u64);
                        self.hart_entry_writes(hart, stats.entry_writes as u64);
                        let obs = format!("csr_writes={} entry_writes={}", stats.csr_writes, stats.entry_writes);
                        (true, obs, None, None)
                    }
                    Err(e) => fail("error".into(), e.to_string()),
                }
            }
            Statement::Checker { resource, slot, offset, len, wid, perms, lock } => {
                let c = self.platform.checker_mut(resource).expect("validated resource");
                let grant: [(Wid, BusPerms); 1] = [(Wid(*wid), *perms)];
                match c.configure(*slot, Some((*offset, *len)), &grant, *lock) {
                    Ok(()) => (true, "ok".into(), None, None),
                    Err(e) => fail("error".into(), e.to_string()),
                }
            }
            Statement::ExpectStat { counter, op, value } => {
                let actual = self.counters.get(counter).copied().unwrap_or(0);
                let ok = op.eval(actual, *value);
                let msg = (!ok).then(|| format!("expected {counter} {} {value}", op.as_str()));
                (ok, format!("{counter}={actual}"), msg, None)
            }
        }
    }
}

pub fn run_scenario(program: &ScenarioProgram) -> RunReport {
    run_with_models(program, ModelChoice::Declared)
}

pub fn run_with_models(program: &ScenarioProgram, choice: ModelChoice) -> RunReport {
    let decl = &program.platform;
    let platform = match build_platform(decl, choice) {
        Ok(p) => p,
        Err(e) => {
            return RunReport {
                counters: initial_counters(decl),
                pass: false,
                setup_error: Some(e.to_string()),
                steps: Vec::new(),
                utilization: BTreeMap::new(),
            }
        }
    };
    let mut runner = Runner { decl, platform, counters: initial_counters(decl) };
    let mut steps = Vec::with_capacity(program.steps.len());
    for (i, stmt) in program.steps.iter().enumerate() {
        let (ok, observed, message, verdict) = runner.step(stmt);
        steps.push(StepOutcome {
            index: i + 1,
            line: program.spans.get(i).map_or(0, |s| s.line),
            message,
            observed,
            statement: print_statement(stmt),
            status: if ok { StepStatus::Pass } else { StepStatus::Fail },
            verdict,
        });
    }
    let utilization = runner
        .platform
        .harts()
        .filter_map(|(n, h)| h.hspmp().map(|u| (n.to_string(), u.utilization())))
        .collect();
    let pass = steps.iter().all(|s| s.status == StepStatus::Pass);
    RunReport { counters: runner.counters, pass, setup_error: None, steps, utilization }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub index: usize,
    pub line: usize,
    pub statement: String,
    pub unified: String,
    pub separate: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelComparison {
    pub divergences: Vec<Divergence>,
    pub unified: RunReport,
    pub separate: RunReport,
}

impl ModelComparison {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for d in &self.divergences {
            let _ = writeln!(
                out,
                "divergence step {} line {}: {} -> unified {}, separate {}",
                d.index, d.line, d.statement, d.unified, d.separate
            );
        }
        let _ = writeln!(out, "divergences: {}", self.divergences.len());
        for (label, report) in [("unified", &self.unified), ("separate", &self.separate)] {
            for (hart, u) in &report.utilization {
                let _ = writeln!(out, "utilization {label} {hart}: {}", render_utilization(u));
            }
        }
        out
    }
}

/// Runs the program once with every hart on its unified variant and once
/// on its separate variant. `None` if no hart declares both.
pub fn compare_models(program: &ScenarioProgram) -> Option<ModelComparison> {
    let both = program.platform.harts.iter().any(|h| {
        h.models.iter().any(|m| matches!(m, HypervisorModel::Unified))
            && h.models.iter().any(|m| matches!(m, HypervisorModel::Separate { .. }))
    });
    if !both {
        return None;
    }
    let unified = run_with_models(program, ModelChoice::Unified);
    let separate = run_with_models(program, ModelChoice::Separate);
    let divergences = unified
        .steps
        .iter()
        .zip(&separate.steps)
        .filter(|(u, s)| u.verdict.is_some() && u.verdict != s.verdict)
        .map(|(u, s)| Divergence {
            index: u.index,
            line: u.line,
            statement: u.statement.clone(),
            unified: u.observed.clone(),
            separate: s.observed.clone(),
        })
        .collect();
    Some(ModelComparison { divergences, unified, separate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    #[test]
    fn empty_program_passes() {
        let p = parse_scenario("platform { nworlds = 2 }\n").unwrap();
        let r = run_scenario(&p);
        assert!(r.pass);
        assert!(r.steps.is_empty());
    }

    #[test]
    fn u_mode_mlwid_write_fails_at_run_time() {
        let text = "platform { nworlds=4\n hart h0 { ext=[smwg]; } }\non h0: mode U\non h0: csrw mlwid 3\n";
        let r = run_scenario(&parse_scenario(text).unwrap());
        assert!(!r.pass);
        assert_eq!(r.steps[1].status, StepStatus::Fail);
        assert!(r.steps[1].observed.starts_with("violation"));
    }

    #[test]
    fn stat_expectations() {
        let text = "platform { nworlds=4\n hart h0 { ext=[smwg]; } }\non h0: csrw mlwid 3\nexpect stat csr_writes.h0 == 1\nexpect stat denials.checker == 0\n";
        let r = run_scenario(&parse_scenario(text).unwrap());
        assert!(r.pass, "{}", r.render_text());
    }

    #[test]
    fn json_is_deterministic() {
        let text = "platform { nworlds=4\n hart h0 { ext=[smwg]; } }\non h0: csrw mlwid 3\n";
        let p = parse_scenario(text).unwrap();
        assert_eq!(run_scenario(&p).render_json(), run_scenario(&p).render_json());
    }
}
