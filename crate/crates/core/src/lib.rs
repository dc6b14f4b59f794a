//! Simulator for WorldGuard-style isolation on RISC-V microcontrollers.
//!
//! The crate models the pieces of a small SoC that decide whether a memory
//! access goes through:
//!
//! * [`hart`]: privilege modes, the WID CSR file, delegation and WID
//!   resolution.
//! * [`spmp`]: M-mode PMP, S-mode SPMP, the hypervisor bank in its unified
//!   and separate layouts, and the two-stage check for virtualized modes.
//! * [`fabric`]: resource-side checkers, always-non-modifiable initiators
//!   (ANMs) and routing of tagged transactions.
//! * [`scenario`]: a small text DSL to declare a platform and script CSR
//!   writes, entry programming and accesses with expected outcomes.
//! * [`budget`]: the WID count estimator for a platform configuration.
//! * [`cli`]: the `wgsim` command-line front end.
//!
//! ```
//! use wgsim::hart::{CsrName, ExtensionSet, HartConfig, HartContext, PrivilegeMode, WriteOutcome};
//!
//! let mut ext = ExtensionSet::default();
//! ext.smwg = true;
//! ext.smwgd = true;
//! ext.sswg = true;
//! let mut hart = HartContext::new(&HartConfig::new(0, 0, ext, 8)).unwrap();
//! assert_eq!(hart.csr_write(CsrName::Mwiddeleg(0), 0b0011_0000), WriteOutcome::Accepted);
//! hart.set_mode(PrivilegeMode::HS).unwrap();
//! assert_eq!(hart.csr_write(CsrName::Slwid, 5), WriteOutcome::Accepted);
//! assert_eq!(hart.csr_write(CsrName::Slwid, 6), WriteOutcome::IgnoredIllegalValue);
//! hart.set_mode(PrivilegeMode::U).unwrap();
//! assert_eq!(hart.resolve_wid().unwrap().value(), 5);
//! ```

pub mod budget;
pub mod cli;
pub mod fabric;
pub mod hart;
pub mod scenario;
pub mod spmp;
