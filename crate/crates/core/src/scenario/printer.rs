use std::fmt::Write as _;

use super::ast::*;
use crate::fabric::BusKind;
use crate::spmp::{HypervisorModel, SpmpEntry};

fn model(m: &HypervisorModel) -> String {
    match m {
        HypervisorModel::Unified => "unified".into(),
        HypervisorModel::Separate { split_index } => format!("separate:{split_index}"),
    }
}

fn entry(e: &SpmpEntry) -> String {
    let mut s = format!("{} {:#x} {}", e.cfg.mode.as_str(), e.addr, e.cfg.perms);
    if e.cfg.s_bit {
        s.push_str(" s");
    }
    if e.cfg.lock {
        s.push_str(" l");
    }
    s
}

fn expectation(e: &Expectation) -> String {
    match e {
        Expectation::Allow => "allow".into(),
        Expectation::Deny(None) => "deny".into(),
        Expectation::Deny(Some(stage)) => format!("deny:{stage}"),
    }
}

pub fn print_statement(stmt: &Statement) -> String {
    match stmt {
        Statement::Mode { hart, mode } => format!("on {hart}: mode {mode}"),
        Statement::Csrw { hart, csr, value, expect } => {
            let mut s = format!("on {hart}: csrw {csr} {value:#x}");
            if let Some(e) = expect {
                s.push_str(match e {
                    WriteExpect::Accepted => " => accepted",
                    WriteExpect::Ignored => " => ignored",
                    WriteExpect::Violation => " => violation",
                });
            }
            s
        }
        Statement::ExpectCsrr { hart, csr, value } => format!("on {hart}: expect csrr {csr} == {value:#x}"),
        Statement::Spmp { hart, index, entry: e } => format!("on {hart}: spmp {index} {}", entry(e)),
        Statement::Pmp { hart, index, entry: e } => format!("on {hart}: pmp {index} {}", entry(e)),
        Statement::Access { hart, kind, addr, size, expect } => {
            format!("on {hart}: access {} {addr:#x} {size} => {}", kind.letter(), expectation(expect))
        }
        Statement::VmSwitch { hart, vm } => format!("on {hart}: vmswitch {vm}"),
        Statement::AnmAccess { anm, kind, addr, size, expect } => {
            let k = match kind {
                BusKind::Read => 'r',
                BusKind::Write => 'w',
            };
            format!("anm {anm}: access {k} {addr:#x} {size} => {}", expectation(expect))
        }
        Statement::Checker { resource, slot, offset, len, wid, perms, lock } => {
            let mut s = format!("checker {resource} slot {slot} range {offset:#x} {len:#x} wid {wid} {perms}");
            if *lock {
                s.push_str(" lock");
            }
            s
        }
        Statement::ExpectStat { counter, op, value } => format!("expect stat {counter} {} {value}", op.as_str()),
    }
}

/// Renders a program in canonical form; parsing the result yields a
/// structurally equal program.
pub fn print_scenario(p: &ScenarioProgram) -> String {
    let d = &p.platform;
    let mut out = String::from("platform {\n");
    let _ = writeln!(out, "  nworlds = {};", d.nworlds);
    for h in &d.harts {
        let models: Vec<String> = h.models.iter().map(model).collect();
        let spmp = if models.len() == 1 { models[0].clone() } else { format!("[{}]", models.join(", ")) };
        let _ = writeln!(
            out,
            "  hart {} {{ mwid = {}; ext = [{}]; spmp = {}; entries = {}; pmp = {}; }}",
            h.name,
            h.mwid,
            h.ext.names().join(", "),
            spmp,
            h.entries,
            h.pmp_entries
        );
    }
    for a in &d.anms {
        let _ = writeln!(out, "  anm {} {{ wid = {}; }}", a.name, a.wid);
    }
    for r in &d.resources {
        let kind = match r.kind {
            ResourceKind::Memory => "memory",
            ResourceKind::Peripheral => "peripheral",
        };
        let _ = writeln!(
            out,
            "  {kind} {} {{ base = {:#x}; size = {:#x}; slots = {}; }}",
            r.name, r.base, r.size, r.slots
        );
    }
    for vm in &d.vms {
        let wids: Vec<String> = vm.wids.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "  vm {} {{", vm.name);
        let _ = writeln!(out, "    wids = [{}];", wids.join(", "));
        let _ = writeln!(out, "    hslwid = {};", vm.hslwid);
        let _ = writeln!(out, "    hswitch = {:#x};", vm.hswitch);
        let _ = writeln!(out, "    prestaged = {};", vm.prestaged);
        for (idx, e) in &vm.entries {
            let _ = writeln!(out, "    entry {idx} {};", entry(e));
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    for s in &p.steps {
        out.push_str(&print_statement(s));
        out.push('\n');
    }
    out
}
