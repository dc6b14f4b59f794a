//! CSR writes per VM switch as the guest's entry count grows: pre-staged
//! entries cost a fixed handful of writes, reprogramming grows linearly.
//!
//! cargo run --example vm_switch_cost

use wgsim::hart::{CsrName, ExtensionSet, HartConfig, HartContext, PrivilegeMode};
use wgsim::spmp::{vm_switch, Perms, SpmpEntry, VmImage};

fn image(entries: usize, prestaged: bool) -> VmImage {
    VmImage {
        name: format!("vm{entries}"),
        wids: vec![4, 5],
        hslwid: 4,
        entries: (0..entries)
            .map(|i| (i, SpmpEntry::napot(0x8000_0000 + 0x1000 * i as u64, 0x1000, Perms::RWX, false)))
            .collect(),
        hswitch_mask: (1u64 << entries) - 1,
        prestaged,
    }
}

fn main() {
    println!("{:>7}  {:>9}  {:>12}", "entries", "prestaged", "reprogrammed");
    for n in [4, 8, 16, 32] {
        let mut cfg = HartConfig::new(0, 0, ExtensionSet::full(), 8);
        cfg.spmp_entries = 32;
        let mut hart = HartContext::new(&cfg).unwrap();
        hart.csr_write(CsrName::Mwiddeleg(0), 0x30);
        hart.set_mode(PrivilegeMode::HS).unwrap();
        let fast = vm_switch(&mut hart, &image(n, true)).unwrap();
        let slow = vm_switch(&mut hart, &image(n, false)).unwrap();
        println!(
            "{n:>7}  {:>9}  {:>12}",
            fast.csr_writes + fast.entry_writes,
            slow.csr_writes + slow.entry_writes
        );
    }
}
