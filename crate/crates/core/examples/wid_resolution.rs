//! Delegates a few WIDs and prints the WID each privilege mode resolves to.
//!
//! cargo run --example wid_resolution

use wgsim::hart::{CsrName, ExtensionSet, HartConfig, HartContext, PrivilegeMode};

fn main() {
    let ext = ExtensionSet::full();
    let mut hart = HartContext::new(&HartConfig::new(0, 0, ext, 64)).expect("valid config");

    // M delegates WIDs 2..=5 and 40 to S-mode; 40 lives in the high window.
    hart.csr_write(CsrName::Mlwid, 1);
    hart.csr_write(CsrName::Mwiddeleg(0), 0b11_1100);
    hart.csr_write(CsrName::Mwiddeleg(1), 1 << (40 - 32));

    hart.set_mode(PrivilegeMode::HS).unwrap();
    hart.csr_write(CsrName::Slwid, 40);
    hart.csr_write(CsrName::Hslwid, 4);
    hart.csr_write(CsrName::Hwiddeleg(0), 1 << 5);

    hart.set_mode(PrivilegeMode::VS).unwrap();
    // at V=1 this lands in vslwid
    hart.csr_write(CsrName::Slwid, 5);

    for mode in PrivilegeMode::ALL {
        hart.set_mode(mode).unwrap();
        match hart.resolve_wid() {
            Ok(w) => println!("{mode:>2} -> wid {}", w.value()),
            Err(e) => println!("{mode:>2} -> {e}"),
        }
    }

    // withdrawing WID 40 makes U-mode traffic unresolvable
    hart.set_mode(PrivilegeMode::M).unwrap();
    hart.csr_write(CsrName::Mwiddeleg(1), 0);
    hart.set_mode(PrivilegeMode::U).unwrap();
    println!("after revocation: U -> {:?}", hart.resolve_wid());
}
