//! Resource-side checkers seen from a hart and from a DMA engine with a
//! fixed WID. The DMA engine bypasses every CPU-side stage; only the
//! checker stands between it and memory.
//!
//! cargo run --example fabric_checkers

use wgsim::fabric::{BusPerms, Platform, ResourceChecker};
use wgsim::hart::{ExtensionSet, HartConfig, Wid};
use wgsim::spmp::AccessKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut platform = Platform::new(8)?;
    let ext = ExtensionSet { smwg: true, ..Default::default() };
    platform.add_hart("cpu0", HartConfig::new(0, 1, ext, 8))?;
    platform.add_anm("dma0", 6)?;

    let mut sram = ResourceChecker::memory("sram", 0x2000_0000, 0x1_0000, 2);
    sram.configure(0, Some((0, 0x8000)), &[(Wid(1), BusPerms::RW)], false)?;
    sram.configure(1, Some((0x8000, 0x1000)), &[(Wid(6), BusPerms::RW), (Wid(1), BusPerms { r: true, w: false })], true)?;
    platform.add_checker(sram)?;

    let mut uart = ResourceChecker::peripheral("uart", 0x4000_0000, 0x100);
    uart.configure(0, None, &[(Wid(1), BusPerms::RW)], true)?;
    platform.add_checker(uart)?;

    let probes = [
        ("cpu0", 0x2000_0000, AccessKind::Write),
        ("cpu0", 0x2000_8000, AccessKind::Write),
        ("cpu0", 0x4000_0000, AccessKind::Write),
        ("dma0", 0x2000_8000, AccessKind::Write),
        ("dma0", 0x2000_0000, AccessKind::Read),
        ("dma0", 0x4000_0000, AccessKind::Write),
        ("dma0", 0x5000_0000, AccessKind::Read),
    ];
    for (who, addr, kind) in probes {
        let v = platform.end_to_end_access(who, addr, 4, kind).expect("known initiator")?;
        println!("{who} {} {addr:#010x}: {v}", kind.letter());
    }

    // a locked checker refuses reconfiguration
    let err = platform.checker_mut("uart").unwrap().configure(0, None, &[(Wid(6), BusPerms::RW)], false);
    println!("reconfigure locked uart: {err:?}");
    Ok(())
}
