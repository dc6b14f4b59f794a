//! Guest accesses pass the vSPMP, then the hypervisor's guest stage, then
//! the M-mode PMP. The first stage that refuses is reported.
//!
//! cargo run --example two_stage_check

use wgsim::hart::{ExtensionSet, HartConfig, HartContext, PrivilegeMode};
use wgsim::spmp::{two_stage_check, AccessKind, Perms, SpmpEntry};

fn main() {
    let mut cfg = HartConfig::new(0, 0, ExtensionSet::full(), 8);
    cfg.pmp_entries = 4;
    let mut hart = HartContext::new(&cfg).unwrap();

    // M-mode PMP: everything below 2 GiB + 64 KiB is reachable from lower modes
    hart.mpmp_mut().write_entry(0, SpmpEntry::tor(0x8001_0000, Perms::RWX, false)).unwrap();

    // hypervisor guest stage: only the first 32 KiB of guest RAM, read/write
    let hyp = hart.hspmp_mut().unwrap();
    hyp.write_entry(8, SpmpEntry::napot(0x8000_0000, 0x8000, Perms { r: true, w: true, x: false }, false)).unwrap();

    // guest kernel's own view: 64 KiB, all permissions
    let vs = hart.vspmp_mut().unwrap();
    vs.write_entry(0, SpmpEntry::napot(0x8000_0000, 0x1_0000, Perms::RWX, true)).unwrap();

    hart.set_mode(PrivilegeMode::VS).unwrap();
    let probes = [
        (0x8000_0100, AccessKind::Read),
        (0x8000_0100, AccessKind::Execute),
        (0x8000_9000, AccessKind::Write),
        (0x9000_0000, AccessKind::Read),
    ];
    for (addr, kind) in probes {
        let v = two_stage_check(&hart, addr, 4, kind).unwrap();
        println!("VS {} {addr:#010x}: {v}", kind.letter());
    }
}
