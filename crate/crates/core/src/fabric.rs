//! Resource-side half of WorldGuard: WID-tagged transactions and checkers.
//!
//! Memory checkers are range-configurable with any number of slots;
//! peripheral checkers have a single slot spanning the whole resource.
//! Overlapping slots resolve by ascending slot index. Unmapped addresses
//! are denied.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::hart::{ConfigError, HartConfig, HartContext, Wid, WIDE_MAX_WORLDS};
use crate::spmp::{self, AccessKind, CheckVerdict, RequestError, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BusKind {
    Read,
    Write,
}

impl From<AccessKind> for BusKind {
    /// Instruction fetches travel the bus as reads.
    fn from(kind: AccessKind) -> Self {
        match kind {
            AccessKind::Write => BusKind::Write,
            AccessKind::Read | AccessKind::Execute => BusKind::Read,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct BusPerms {
    pub r: bool,
    pub w: bool,
}

impl BusPerms {
    pub const RW: BusPerms = BusPerms { r: true, w: true };

    pub fn grants(&self, kind: BusKind) -> bool {
        match kind {
            BusKind::Read => self.r,
            BusKind::Write => self.w,
        }
    }
}

impl std::fmt::Display for BusPerms {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let r = if self.r { 'r' } else { '-' };
        let w = if self.w { 'w' } else { '-' };
        write!(f, "{r}{w}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitiatorKind {
    Hart(usize),
    Anm { wid: Wid },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Initiator {
    pub id: String,
    pub kind: InitiatorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub initiator: String,
    pub wid: Wid,
    pub addr: u64,
    pub size: u8,
    pub kind: BusKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Slot {
    /// `(offset, length)` within the resource. A memory slot without a
    /// range is unconfigured and never matches; a peripheral's single slot
    /// always covers the whole resource.
    pub range: Option<(u64, u64)>,
    pub wid_perms: BTreeMap<Wid, BusPerms>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CheckerError {
    #[error("checker is locked")]
    Locked,
    #[error("range outside the resource or not supported by this checker")]
    Range,
    #[error("slot {0} does not exist")]
    Slot(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceChecker {
    resource: String,
    base: u64,
    size: u64,
    slots: Vec<Slot>,
    range_capable: bool,
    locked: bool,
}

impl ResourceChecker {
    pub fn memory(resource: impl Into<String>, base: u64, size: u64, slots: usize) -> Self {
        Self {
            resource: resource.into(),
            base,
            size,
            slots: vec![Slot::default(); slots.max(1)],
            range_capable: true,
            locked: false,
        }
    }

    pub fn peripheral(resource: impl Into<String>, base: u64, size: u64) -> Self {
        Self {
            resource: resource.into(),
            base,
            size,
            slots: vec![Slot::default()],
            range_capable: false,
            locked: false,
        }
    }

    pub fn resource(&self) -> &str {
        &self.resource
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn range_capable(&self) -> bool {
        self.range_capable
    }

    pub fn is_locked(&self) -> bool {
        self.locked
    }

    fn end(&self) -> u128 {
        u128::from(self.base) + u128::from(self.size)
    }

    pub fn contains(&self, addr: u64) -> bool {
        self.base <= addr && u128::from(addr) < self.end()
    }

    /// Sets a slot's range (if given) and merges `wid_perms` into it.
    /// Peripherals accept only a range spanning the whole resource.
    pub fn configure(
        &mut self,
        slot: usize,
        range: Option<(u64, u64)>,
        wid_perms: &[(Wid, BusPerms)],
        lock: bool,
    ) -> Result<(), CheckerError> {
        if self.locked {
            return Err(CheckerError::Locked);
        }
        if slot >= self.slots.len() {
            return Err(CheckerError::Slot(slot));
        }
        if let Some((off, len)) = range {
            let inside = u128::from(off) + u128::from(len) <= u128::from(self.size) && len > 0;
            let whole = off == 0 && len == self.size;
            if !inside || (!self.range_capable && !whole) {
                return Err(CheckerError::Range);
            }
        }
        let s = &mut self.slots[slot];
        if self.range_capable && range.is_some() {
            s.range = range;
        }
        s.wid_perms.extend(wid_perms.iter().copied());
        self.locked = lock;
        Ok(())
    }

    /// Verdict for an access that already falls inside this resource.
    pub fn check(&self, wid: Wid, addr: u64, size: u8, kind: BusKind) -> CheckVerdict {
        let lo = u128::from(addr - self.base);
        let hi = lo + u128::from(size);
        let hit = self.slots.iter().position(|s| match (self.range_capable, s.range) {
            (false, _) => hi <= u128::from(self.size),
            (true, Some((off, len))) => {
                u128::from(off) <= lo && hi <= u128::from(off) + u128::from(len)
            }
            (true, None) => false,
        });
        match hit {
            Some(i) if self.slots[i].wid_perms.get(&wid).is_some_and(|p| p.grants(kind)) => {
                CheckVerdict::allow(Some(i))
            }
            other => CheckVerdict::deny(Stage::Checker, other),
        }
    }
}

/// Routes a transaction to the checker owning its address.
pub fn fabric_route(txn: &Transaction, checkers: &[ResourceChecker]) -> CheckVerdict {
    match checkers.iter().find(|c| c.contains(txn.addr)) {
        Some(c) => c.check(txn.wid, txn.addr, txn.size, txn.kind),
        None => CheckVerdict::deny(Stage::Checker, None),
    }
}

/// Harts, ANMs and checkers of one MCU.
#[derive(Debug, Clone)]
pub struct Platform {
    nworlds: u32,
    harts: Vec<(String, HartContext)>,
    anms: Vec<(String, Wid)>,
    checkers: Vec<ResourceChecker>,
}

impl Platform {
    /// Fails for `nworlds` outside `1..=128`; per-hart caps are checked
    /// when harts are added.
    pub fn new(nworlds: u32) -> Result<Self, ConfigError> {
        if nworlds == 0 || nworlds > WIDE_MAX_WORLDS {
            return Err(ConfigError::NWorlds { nworlds, max: WIDE_MAX_WORLDS });
        }
        Ok(Self { nworlds, harts: Vec::new(), anms: Vec::new(), checkers: Vec::new() })
    }

    pub fn nworlds(&self) -> u32 {
        self.nworlds
    }

    /// Adds a hart; `cfg.nworlds` and `cfg.hart_id` are overridden by the
    /// platform.
    pub fn add_hart(&mut self, name: impl Into<String>, mut cfg: HartConfig) -> Result<usize, ConfigError> {
        cfg.nworlds = self.nworlds;
        cfg.hart_id = self.harts.len();
        let hart = HartContext::new(&cfg)?;
        self.harts.push((name.into(), hart));
        Ok(cfg.hart_id)
    }

    pub fn add_anm(&mut self, name: impl Into<String>, wid: u32) -> Result<(), ConfigError> {
        let wid = Wid::new(wid, self.nworlds)?;
        self.anms.push((name.into(), wid));
        Ok(())
    }

    pub fn add_checker(&mut self, checker: ResourceChecker) -> Result<(), ConfigError> {
        let (lo, hi) = (u128::from(checker.base), checker.end());
        if checker.size == 0 {
            return Err(ConfigError::Other(format!("resource {} has zero size", checker.resource)));
        }
        if let Some(other) = self.checkers.iter().find(|c| lo < c.end() && u128::from(c.base) < hi) {
            return Err(ConfigError::Other(format!(
                "resource {} overlaps {}",
                checker.resource, other.resource
            )));
        }
        self.checkers.push(checker);
        Ok(())
    }

    pub fn hart(&self, name: &str) -> Option<&HartContext> {
        self.harts.iter().find(|(n, _)| n == name).map(|(_, h)| h)
    }

    pub fn hart_mut(&mut self, name: &str) -> Option<&mut HartContext> {
        self.harts.iter_mut().find(|(n, _)| n == name).map(|(_, h)| h)
    }

    pub fn harts(&self) -> impl Iterator<Item = (&str, &HartContext)> {
        self.harts.iter().map(|(n, h)| (n.as_str(), h))
    }

    pub fn anm_wid(&self, name: &str) -> Option<Wid> {
        self.anms.iter().find(|(n, _)| n == name).map(|(_, w)| *w)
    }

    pub fn initiators(&self) -> Vec<Initiator> {
        let harts = self
            .harts
            .iter()
            .map(|(n, h)| Initiator { id: n.clone(), kind: InitiatorKind::Hart(h.hart_id()) });
        let anms = self
            .anms
            .iter()
            .map(|(n, w)| Initiator { id: n.clone(), kind: InitiatorKind::Anm { wid: *w } });
        harts.chain(anms).collect()
    }

    pub fn checkers(&self) -> &[ResourceChecker] {
        &self.checkers
    }

    pub fn checker_mut(&mut self, resource: &str) -> Option<&mut ResourceChecker> {
        self.checkers.iter_mut().find(|c| c.resource == resource)
    }

    /// CPU-side stages, WID resolution, then the resource checker. `None`
    /// if no hart has that name.
    pub fn hart_access(
        &self,
        hart: &str,
        addr: u64,
        size: u8,
        kind: AccessKind,
    ) -> Option<Result<CheckVerdict, RequestError>> {
        let h = self.hart(hart)?;
        Some((|| {
            let cpu = spmp::two_stage_check(h, addr, size, kind)?;
            if !cpu.allow {
                return Ok(cpu);
            }
            let wid = match h.resolve_wid() {
                Ok(w) => w,
                Err(_) => return Ok(CheckVerdict::deny(Stage::Initiator, None)),
            };
            let txn = Transaction { initiator: hart.to_string(), wid, addr, size, kind: kind.into() };
            Ok(fabric_route(&txn, &self.checkers))
        })())
    }

    /// ANM transactions skip every CPU-side stage.
    pub fn anm_access(&self, anm: &str, addr: u64, size: u8, kind: BusKind) -> Option<Result<CheckVerdict, RequestError>> {
        let wid = self.anm_wid(anm)?;
        Some(spmp::validate_access(addr, size).map(|_| {
            let txn = Transaction { initiator: anm.to_string(), wid, addr, size, kind };
            fabric_route(&txn, &self.checkers)
        }))
    }

    pub fn end_to_end_access(
        &self,
        initiator: &str,
        addr: u64,
        size: u8,
        kind: AccessKind,
    ) -> Option<Result<CheckVerdict, RequestError>> {
        if self.hart(initiator).is_some() {
            return self.hart_access(initiator, addr, size, kind);
        }
        if kind == AccessKind::Execute {
            return None;
        }
        self.anm_access(initiator, addr, size, kind.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hart::{CsrName, ExtensionSet, PrivilegeMode};
    use crate::spmp::{Perms, SpmpEntry};

    #[test]
    fn lock_blocks_reconfiguration() {
        let mut c = ResourceChecker::memory("sram", 0x1000, 0x4000, 2);
        c.configure(0, Some((0, 0x1000)), &[(Wid(3), BusPerms::RW)], true).unwrap();
        assert_eq!(c.configure(1, Some((0, 0x10)), &[], false), Err(CheckerError::Locked));
    }

    #[test]
    fn peripheral_rejects_sub_range() {
        let mut c = ResourceChecker::peripheral("uart", 0x100, 0x100);
        assert_eq!(c.configure(0, Some((0, 0x10)), &[], false), Err(CheckerError::Range));
        assert!(c.configure(0, Some((0, 0x100)), &[(Wid(1), BusPerms::RW)], false).is_ok());
        assert!(c.configure(0, None, &[(Wid(2), BusPerms::RW)], false).is_ok());
    }

    #[test]
    fn memory_range_must_fit() {
        let mut c = ResourceChecker::memory("sram", 0, 0x100, 1);
        assert_eq!(c.configure(0, Some((0x80, 0x81)), &[], false), Err(CheckerError::Range));
        assert_eq!(c.configure(3, Some((0, 1)), &[], false), Err(CheckerError::Slot(3)));
    }

    #[test]
    fn overlapping_slots_first_wins() {
        let mut c = ResourceChecker::memory("sram", 0, 0x100, 2);
        let ro = BusPerms { r: true, w: false };
        c.configure(0, Some((0x40, 0x40)), &[(Wid(1), ro)], false).unwrap();
        c.configure(1, Some((0, 0x100)), &[(Wid(1), BusPerms::RW)], false).unwrap();
        for addr in 0..0x100u64 {
            let v = c.check(Wid(1), addr, 1, BusKind::Write);
            let in_first = (0x40..0x80).contains(&addr);
            assert_eq!(v.allow, !in_first, "addr {addr:#x}");
            assert_eq!(v.matched_entry, Some(if in_first { 0 } else { 1 }));
        }
    }

    fn dma_platform() -> Platform {
        let mut p = Platform::new(16).unwrap();
        p.add_anm("dma0", 9).unwrap();
        let mut c = ResourceChecker::memory("sram", 0x2000, 0x1000, 1);
        c.configure(0, Some((0, 0x1000)), &[(Wid(9), BusPerms { r: true, w: false })], false).unwrap();
        p.add_checker(c).unwrap();
        p
    }

    #[test]
    fn anm_routing() {
        let p = dma_platform();
        assert!(p.anm_access("dma0", 0x2010, 4, BusKind::Read).unwrap().unwrap().allow);
        let v = p.anm_access("dma0", 0x2010, 4, BusKind::Write).unwrap().unwrap();
        assert_eq!(v.deny_stage, Some(Stage::Checker));
        let v = p.anm_access("dma0", 0x9000, 4, BusKind::Read).unwrap().unwrap();
        assert_eq!(v.deny_stage, Some(Stage::Checker));
    }

    #[test]
    fn overlapping_resources_rejected() {
        let mut p = dma_platform();
        assert!(p.add_checker(ResourceChecker::peripheral("uart", 0x2800, 0x100)).is_err());
    }

    #[test]
    fn vs_hart_denied_by_peripheral() {
        let mut p = Platform::new(8).unwrap();
        let mut cfg = HartConfig::new(0, 0, ExtensionSet::full(), 8);
        cfg.spmp_entries = 4;
        p.add_hart("h0", cfg).unwrap();
        let mut uart = ResourceChecker::peripheral("uart", 0x100, 0x100);
        uart.configure(0, None, &[(Wid(3), BusPerms::RW)], false).unwrap();
        p.add_checker(uart).unwrap();
        let h = p.hart_mut("h0").unwrap();
        h.csr_write(CsrName::Mwiddeleg(0), 0b111000);
        h.csr_write(CsrName::Hslwid, 5);
        let open = SpmpEntry::napot(0, 0x1000, Perms::RWX, true);
        h.vspmp_mut().unwrap().write_entry(0, open).unwrap();
        let open_user = SpmpEntry::napot(0, 0x1000, Perms::RWX, false);
        h.hspmp_mut().unwrap().write_entry(0, open_user).unwrap();
        h.set_mode(PrivilegeMode::VS).unwrap();
        let v = p.hart_access("h0", 0x104, 4, AccessKind::Write).unwrap().unwrap();
        assert_eq!(v.deny_stage, Some(Stage::Checker));

        // revoke WID 5: the access never reaches the bus
        let h = p.hart_mut("h0").unwrap();
        h.set_mode(PrivilegeMode::M).unwrap();
        h.csr_write(CsrName::Mwiddeleg(0), 0b001000);
        h.set_mode(PrivilegeMode::VS).unwrap();
        let v = p.hart_access("h0", 0x104, 4, AccessKind::Write).unwrap().unwrap();
        assert_eq!(v.deny_stage, Some(Stage::Initiator));
    }
}
