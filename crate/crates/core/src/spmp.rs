//! PMP-style protection units and the CPU-side check pipeline.
//!
//! Three kinds of unit exist per hart: the M-mode PMP, the hypervisor
//! (or plain supervisor) SPMP bank and the guest-controlled vSPMP.
//!
//! The hypervisor bank supports two models:
//!
//! * **Unified**: one bank checks HS/U accesses under `spmpswitch` and
//!   VS/VU accesses (as user-like) under `hspmpswitch`.
//! * **Separate**: the bank is statically split at `split_index`; entries
//!   below the split form the baseline SPMP, the rest form the hgPMP. The
//!   switch registers are still indexed by bank position, and bits outside a
//!   side's partition are ignored.
//!
//! TOR entries take their lower bound from the previous bank entry in both
//! models, so a separate configuration translates to the unified model by
//! re-partitioning the masks only (see [`separate_to_unified`]).

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::hart::{
    ConfigError, CsrName, DelegLevel, HartContext, PrivilegeMode, Wid, WidBitVector, WriteOutcome,
};

pub const DEFAULT_ENTRIES: usize = 16;
pub const MAX_ENTRIES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub enum AddrMode {
    #[default]
    Off,
    Tor,
    Na4,
    Napot,
}

impl AddrMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Off => "OFF",
            Self::Tor => "TOR",
            Self::Na4 => "NA4",
            Self::Napot => "NAPOT",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_uppercase().as_str() {
            "OFF" => Self::Off,
            "TOR" => Self::Tor,
            "NA4" => Self::Na4,
            "NAPOT" => Self::Napot,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Perms {
    pub r: bool,
    pub w: bool,
    pub x: bool,
}

impl Perms {
    pub const RWX: Perms = Perms { r: true, w: true, x: true };
    pub const NONE: Perms = Perms { r: false, w: false, x: false };

    pub fn grants(&self, kind: AccessKind) -> bool {
        match kind {
            AccessKind::Read => self.r,
            AccessKind::Write => self.w,
            AccessKind::Execute => self.x,
        }
    }
}

impl fmt::Display for Perms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |on, ch| if on { ch } else { '-' };
        write!(f, "{}{}{}", c(self.r, 'r'), c(self.w, 'w'), c(self.x, 'x'))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct EntryCfg {
    pub perms: Perms,
    pub mode: AddrMode,
    /// Supervisor-only entry (SPMP/vSPMP).
    pub s_bit: bool,
    /// Locked entry (M-mode PMP).
    pub lock: bool,
}

/// One PMP-style entry. `addr` is in PMP address-register format
/// (byte address >> 2, NAPOT size encoded in trailing ones).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SpmpEntry {
    pub addr: u64,
    pub cfg: EntryCfg,
}

impl SpmpEntry {
    pub fn off() -> Self {
        Self::default()
    }

    /// NAPOT entry covering `[base, base + size)`. `size` must be a power of
    /// two of at least 8 and `base` must be aligned to it.
    pub fn napot(base: u64, size: u64, perms: Perms, s_bit: bool) -> Self {
        Self {
            addr: napot_encode(base, size),
            cfg: EntryCfg { perms, mode: AddrMode::Napot, s_bit, lock: false },
        }
    }

    pub fn na4(addr: u64, perms: Perms, s_bit: bool) -> Self {
        Self {
            addr: addr >> 2,
            cfg: EntryCfg { perms, mode: AddrMode::Na4, s_bit, lock: false },
        }
    }

    /// TOR entry whose upper bound is `top`; the lower bound comes from the
    /// previous entry.
    pub fn tor(top: u64, perms: Perms, s_bit: bool) -> Self {
        Self {
            addr: top >> 2,
            cfg: EntryCfg { perms, mode: AddrMode::Tor, s_bit, lock: false },
        }
    }

    pub fn locked(mut self) -> Self {
        self.cfg.lock = true;
        self
    }

    pub fn is_off(&self) -> bool {
        self.cfg.mode == AddrMode::Off
    }

    /// Byte range `[lo, hi)`; `prev_addr` is the previous entry's address
    /// field (0 for the first entry).
    pub fn region(&self, prev_addr: u64) -> Option<(u128, u128)> {
        match self.cfg.mode {
            AddrMode::Off => None,
            AddrMode::Tor => Some((u128::from(prev_addr) << 2, u128::from(self.addr) << 2)),
            AddrMode::Na4 => {
                let lo = u128::from(self.addr) << 2;
                Some((lo, lo + 4))
            }
            AddrMode::Napot => {
                let ones = self.addr.trailing_ones();
                if ones == 64 {
                    return Some((0, 1u128 << 66));
                }
                let size = 1u128 << (ones + 3);
                let lo = (u128::from(self.addr) << 2) & !(size - 1);
                Some((lo, lo + size))
            }
        }
    }
}

/// Encodes a naturally aligned power-of-two region in PMP address format.
pub fn napot_encode(base: u64, size: u64) -> u64 {
    debug_assert!(size.is_power_of_two() && size >= 8 && base.is_multiple_of(size));
    (base >> 2) | ((size >> 3) - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum HypervisorModel {
    Unified,
    Separate { split_index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum UnitKind {
    Mpmp,
    Hspmp(HypervisorModel),
    Vspmp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Stage {
    Vspmp,
    Hspmp,
    Hgpmp,
    Mpmp,
    Checker,
    Initiator,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Self::Vspmp,
        Self::Hspmp,
        Self::Hgpmp,
        Self::Mpmp,
        Self::Checker,
        Self::Initiator,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Vspmp => "vspmp",
            Self::Hspmp => "hspmp",
            Self::Hgpmp => "hgpmp",
            Self::Mpmp => "mpmp",
            Self::Checker => "checker",
            Self::Initiator => "initiator",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let lower = s.to_ascii_lowercase();
        Self::ALL.into_iter().find(|st| st.as_str() == lower)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AccessKind {
    Read,
    Write,
    Execute,
}

impl AccessKind {
    pub const ALL: [AccessKind; 3] = [Self::Read, Self::Write, Self::Execute];

    pub fn letter(self) -> char {
        match self {
            Self::Read => 'r',
            Self::Write => 'w',
            Self::Execute => 'x',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ModeClass {
    SLike,
    ULike,
    Machine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RequestError {
    #[error("access size {0} not in {{1, 2, 4, 8}}")]
    Size(u8),
    #[error("access at {addr:#x} of {size} bytes wraps the address space")]
    Wrap { addr: u64, size: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AccessRequest {
    pub addr: u64,
    pub size: u8,
    pub kind: AccessKind,
    pub class: ModeClass,
}

impl AccessRequest {
    pub fn new(addr: u64, size: u8, kind: AccessKind, class: ModeClass) -> Result<Self, RequestError> {
        validate_access(addr, size)?;
        Ok(Self { addr, size, kind, class })
    }

    fn span(&self) -> (u128, u128) {
        let lo = u128::from(self.addr);
        (lo, lo + u128::from(self.size))
    }
}

pub fn validate_access(addr: u64, size: u8) -> Result<(), RequestError> {
    if !matches!(size, 1 | 2 | 4 | 8) {
        return Err(RequestError::Size(size));
    }
    if addr.checked_add(u64::from(size) - 1).is_none() {
        return Err(RequestError::Wrap { addr, size });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct CheckVerdict {
    pub allow: bool,
    pub deny_stage: Option<Stage>,
    pub matched_entry: Option<usize>,
}

impl CheckVerdict {
    pub fn allow(matched_entry: Option<usize>) -> Self {
        Self { allow: true, deny_stage: None, matched_entry }
    }

    pub fn deny(stage: Stage, matched_entry: Option<usize>) -> Self {
        Self { allow: false, deny_stage: Some(stage), matched_entry }
    }
}

impl fmt::Display for CheckVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.deny_stage {
            None => f.write_str("allow"),
            Some(stage) => write!(f, "deny:{stage}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EntryError {
    #[error("entry index {index} out of range ({count} entries)")]
    OutOfRange { index: usize, count: usize },
    #[error("entry {0} is locked")]
    Locked(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpmpUnit {
    kind: UnitKind,
    entries: Vec<SpmpEntry>,
    /// `spmpswitch`: enables entries for non-virtualized checks (and for the
    /// vSPMP, the guest's own switch).
    pub(crate) switch_mask: u64,
    /// `hspmpswitch`: enables entries for guest-stage checks.
    pub(crate) hswitch_mask: u64,
}

fn low_bits(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl SpmpUnit {
    /// A unit with `count` OFF entries and all switch bits set.
    pub fn new(kind: UnitKind, count: usize) -> Self {
        Self {
            kind,
            entries: vec![SpmpEntry::off(); count],
            switch_mask: u64::MAX,
            hswitch_mask: u64::MAX,
        }
    }

    pub fn kind(&self) -> UnitKind {
        self.kind
    }

    pub fn entries(&self) -> &[SpmpEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn switch_mask(&self) -> u64 {
        self.switch_mask
    }

    pub fn hswitch_mask(&self) -> u64 {
        self.hswitch_mask
    }

    pub fn set_switch_mask(&mut self, mask: u64) {
        self.switch_mask = mask;
    }

    pub fn set_hswitch_mask(&mut self, mask: u64) {
        self.hswitch_mask = mask;
    }

    pub fn write_entry(&mut self, index: usize, entry: SpmpEntry) -> Result<(), EntryError> {
        let count = self.entries.len();
        let slot = self.entries.get_mut(index).ok_or(EntryError::OutOfRange { index, count })?;
        if slot.cfg.lock {
            return Err(EntryError::Locked(index));
        }
        let mut entry = entry;
        if self.kind != UnitKind::Mpmp {
            entry.cfg.lock = false;
        }
        *slot = entry;
        Ok(())
    }

    fn split(&self) -> Option<usize> {
        match self.kind {
            UnitKind::Hspmp(HypervisorModel::Separate { split_index }) => Some(split_index),
            _ => None,
        }
    }

    /// Entries enabled for HS/U checks: `spmpswitch`, restricted to the
    /// baseline partition in the separate model.
    pub fn host_mask(&self) -> u64 {
        match self.split() {
            Some(split) => self.switch_mask & low_bits(split),
            None => self.switch_mask,
        }
    }

    /// Entries enabled for VS/VU checks: `hspmpswitch`, restricted to the
    /// hgPMP partition in the separate model.
    pub fn guest_mask(&self) -> u64 {
        match self.split() {
            Some(split) => self.hswitch_mask & !low_bits(split),
            None => self.hswitch_mask,
        }
    }

    pub fn guest_stage(&self) -> Stage {
        if self.split().is_some() {
            Stage::Hgpmp
        } else {
            Stage::Hspmp
        }
    }

    /// `(used, available)` entry counts for the host and guest sides. In
    /// the unified model both sides share the whole bank.
    pub fn utilization(&self) -> Utilization {
        let used = |r: std::ops::Range<usize>| self.entries[r].iter().filter(|e| !e.is_off()).count();
        let n = self.entries.len();
        match self.split() {
            Some(split) => Utilization {
                host_used: used(0..split),
                host_available: split,
                guest_used: used(split..n),
                guest_available: n - split,
            },
            None => {
                let u = used(0..n);
                Utilization { host_used: u, host_available: n, guest_used: u, guest_available: n }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Utilization {
    pub host_used: usize,
    pub host_available: usize,
    pub guest_used: usize,
    pub guest_available: usize,
}

fn stage_of(kind: UnitKind) -> Stage {
    match kind {
        UnitKind::Mpmp => Stage::Mpmp,
        UnitKind::Hspmp(_) => Stage::Hspmp,
        UnitKind::Vspmp => Stage::Vspmp,
    }
}

/// Index of the first enabled entry whose region contains the whole access,
/// optionally filtered by the entry's S bit.
fn first_match(entries: &[SpmpEntry], req: &AccessRequest, mask: u64, s_bit: Option<bool>) -> Option<usize> {
    let (lo, hi) = req.span();
    let mut prev = 0;
    for (i, e) in entries.iter().enumerate() {
        let prev_addr = std::mem::replace(&mut prev, e.addr);
        if i >= 64 || mask >> i & 1 == 0 {
            continue;
        }
        if s_bit.is_some_and(|s| s != e.cfg.s_bit) {
            continue;
        }
        if let Some((rlo, rhi)) = e.region(prev_addr) {
            if rlo <= lo && hi <= rhi {
                return Some(i);
            }
        }
    }
    None
}

/// Checks one request against one unit with the given switch mask. The
/// denial is attributed to the unit's own stage.
pub fn spmp_check(unit: &SpmpUnit, req: &AccessRequest, active_mask: u64) -> CheckVerdict {
    check_as(unit, req, active_mask, stage_of(unit.kind))
}

fn check_as(unit: &SpmpUnit, req: &AccessRequest, mask: u64, stage: Stage) -> CheckVerdict {
    let entries = &unit.entries;
    if unit.kind == UnitKind::Mpmp {
        // No PMP implemented: nothing to enforce.
        if entries.is_empty() {
            return CheckVerdict::allow(None);
        }
        return match first_match(entries, req, mask, None) {
            Some(i) => {
                let e = &entries[i];
                let enforced = req.class != ModeClass::Machine || e.cfg.lock;
                if !enforced || e.cfg.perms.grants(req.kind) {
                    CheckVerdict::allow(Some(i))
                } else {
                    CheckVerdict::deny(stage, Some(i))
                }
            }
            None if req.class == ModeClass::Machine => CheckVerdict::allow(None),
            None => CheckVerdict::deny(stage, None),
        };
    }
    let want_s = match req.class {
        ModeClass::SLike => Some(true),
        ModeClass::ULike => Some(false),
        ModeClass::Machine => None,
    };
    match first_match(entries, req, mask, want_s) {
        Some(i) if entries[i].cfg.perms.grants(req.kind) => CheckVerdict::allow(Some(i)),
        m => CheckVerdict::deny(stage, m),
    }
}

/// Full CPU-side check for an access issued by `hart` in its current mode:
/// vSPMP then hypervisor stage when virtualized, baseline SPMP otherwise,
/// then the M-mode PMP. The first denying stage is reported.
pub fn two_stage_check(hart: &HartContext, addr: u64, size: u8, kind: AccessKind) -> Result<CheckVerdict, RequestError> {
    validate_access(addr, size)?;
    let mode = hart.mode();
    let class = match mode {
        PrivilegeMode::M => ModeClass::Machine,
        PrivilegeMode::HS | PrivilegeMode::VS => ModeClass::SLike,
        PrivilegeMode::U | PrivilegeMode::VU => ModeClass::ULike,
    };
    let req = AccessRequest { addr, size, kind, class };
    let user_req = AccessRequest { class: ModeClass::ULike, ..req };
    let mut matched = None;
    if mode != PrivilegeMode::M {
        if mode.virtualized() {
            if let (Some(vs), Some(hyp)) = (hart.vspmp(), hart.hspmp()) {
                let v = spmp_check(vs, &req, vs.switch_mask);
                if !v.allow {
                    return Ok(v);
                }
                let v = check_as(hyp, &user_req, hyp.guest_mask(), hyp.guest_stage());
                if !v.allow {
                    return Ok(v);
                }
                matched = v.matched_entry;
            }
        } else if let Some(hyp) = hart.hspmp() {
            let v = check_as(hyp, &req, hyp.host_mask(), Stage::Hspmp);
            if !v.allow {
                return Ok(v);
            }
            matched = v.matched_entry;
        }
    }
    let v = spmp_check(hart.mpmp(), &req, u64::MAX);
    if !v.allow {
        return Ok(v);
    }
    Ok(CheckVerdict::allow(matched.or(v.matched_entry)))
}

/// A VM as seen by the hypervisor's context-switch path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VmImage {
    pub name: String,
    pub wids: Vec<u32>,
    pub hslwid: u32,
    /// Guest-stage entries as (bank index, entry).
    pub entries: Vec<(usize, SpmpEntry)>,
    pub hswitch_mask: u64,
    /// Entries are already resident in the bank; only the mask flips.
    pub prestaged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SwitchStats {
    pub csr_writes: usize,
    pub entry_writes: usize,
}

/// Installs `vm` as the running guest: `hslwid`, every `hwiddeleg` window,
/// guest entries when not pre-staged, then `hspmpswitch`.
pub fn vm_switch(hart: &mut HartContext, vm: &VmImage) -> Result<SwitchStats, ConfigError> {
    let mode = hart.mode();
    if !matches!(mode, PrivilegeMode::M | PrivilegeMode::HS) {
        return Err(ConfigError::VmSwitchMode(mode));
    }
    let ext = *hart.extensions();
    if !ext.shwgd {
        return Err(ConfigError::Other("VM switch requires the shwgd extension".into()));
    }
    let s_deleg = hart.effective_deleg(DelegLevel::Supervisor);
    for &w in vm.wids.iter().chain(std::iter::once(&vm.hslwid)) {
        Wid::new(w, hart.nworlds())?;
        if !s_deleg.contains(w) {
            return Err(ConfigError::VmWidNotDelegated(w));
        }
    }
    let mut stats = SwitchStats::default();
    let mut csrw = |hart: &mut HartContext, csr: CsrName, value: u64| -> Result<(), ConfigError> {
        stats.csr_writes += 1;
        match hart.csr_write(csr, value) {
            WriteOutcome::Accepted => Ok(()),
            other => Err(ConfigError::Other(format!("VM switch write to {csr} failed: {other:?}"))),
        }
    };
    csrw(hart, CsrName::Hslwid, vm.hslwid.into())?;
    let deleg = WidBitVector::from_wids(vm.wids.iter().copied());
    for w in 0..crate::hart::deleg_windows(hart.nworlds()) {
        csrw(hart, CsrName::Hwiddeleg(w), deleg.window(w).into())?;
    }
    let mut entry_writes = 0;
    if !vm.prestaged {
        let bank = hart
            .hspmp_mut()
            .ok_or_else(|| ConfigError::Other("VM switch requires an SPMP bank".into()))?;
        for &(idx, entry) in &vm.entries {
            bank.write_entry(idx, entry).map_err(|e| ConfigError::Other(e.to_string()))?;
            // one address-register write plus one configuration write
            entry_writes += 2;
        }
    }
    if ext.spmp_hypervisor {
        csrw(hart, CsrName::Hspmpswitch, vm.hswitch_mask)?;
    }
    stats.entry_writes = entry_writes;
    Ok(stats)
}

/// Masks `(spmpswitch, hspmpswitch)` that make a unified bank holding the
/// same entries behave exactly like a separate-model bank split at
/// `split_index`.
pub fn separate_to_unified(split_index: usize, switch_mask: u64, hswitch_mask: u64) -> (u64, u64) {
    let low = low_bits(split_index);
    (switch_mask & low, hswitch_mask & !low)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hart::{ExtensionSet, HartConfig};

    fn req(addr: u64, kind: AccessKind, class: ModeClass) -> AccessRequest {
        AccessRequest::new(addr, 1, kind, class).unwrap()
    }

    #[test]
    fn napot_match() {
        let mut unit = SpmpUnit::new(UnitKind::Hspmp(HypervisorModel::Unified), 16);
        unit.write_entry(0, SpmpEntry::napot(0x8000_0000, 0x1000, Perms::RWX, false)).unwrap();
        let r = req(0x8000_0100, AccessKind::Read, ModeClass::ULike);
        assert_eq!(spmp_check(&unit, &r, u64::MAX), CheckVerdict::allow(Some(0)));
        let v = spmp_check(&unit, &r, !1);
        assert_eq!(v.deny_stage, Some(Stage::Hspmp));
        // S-like requests never match user entries
        let r = req(0x8000_0100, AccessKind::Read, ModeClass::SLike);
        assert!(!spmp_check(&unit, &r, u64::MAX).allow);
    }

    #[test]
    fn napot_region_bounds() {
        let e = SpmpEntry::napot(0x40, 0x40, Perms::RWX, false);
        assert_eq!(e.region(0), Some((0x40, 0x80)));
        let e = SpmpEntry::napot(0, 8, Perms::RWX, false);
        assert_eq!(e.region(0), Some((0, 8)));
        let all = SpmpEntry { addr: u64::MAX, cfg: EntryCfg { mode: AddrMode::Napot, ..Default::default() } };
        assert_eq!(all.region(0), Some((0, 1u128 << 66)));
    }

    #[test]
    fn tor_uses_previous_entry() {
        let mut unit = SpmpUnit::new(UnitKind::Vspmp, 4);
        unit.write_entry(0, SpmpEntry { addr: 0x10 >> 2, cfg: EntryCfg::default() }).unwrap();
        unit.write_entry(1, SpmpEntry::tor(0x20, Perms::RWX, true)).unwrap();
        let inside = req(0x1f, AccessKind::Write, ModeClass::SLike);
        let below = req(0x0f, AccessKind::Write, ModeClass::SLike);
        assert!(spmp_check(&unit, &inside, u64::MAX).allow);
        assert!(!spmp_check(&unit, &below, u64::MAX).allow);
    }

    #[test]
    fn partial_overlap_does_not_match() {
        let mut unit = SpmpUnit::new(UnitKind::Vspmp, 2);
        unit.write_entry(0, SpmpEntry::na4(0x10, Perms::RWX, false)).unwrap();
        unit.write_entry(1, SpmpEntry::napot(0, 0x100, Perms { r: true, ..Perms::NONE }, false)).unwrap();
        let r = AccessRequest::new(0x12, 4, AccessKind::Write, ModeClass::ULike).unwrap();
        assert_eq!(spmp_check(&unit, &r, u64::MAX), CheckVerdict::deny(Stage::Vspmp, Some(1)));
    }

    #[test]
    fn mpmp_machine_rules() {
        let mut unit = SpmpUnit::new(UnitKind::Mpmp, 2);
        unit.write_entry(0, SpmpEntry::napot(0, 0x10, Perms::NONE, false).locked()).unwrap();
        unit.write_entry(1, SpmpEntry::napot(0x10, 0x10, Perms::NONE, false)).unwrap();
        assert!(!spmp_check(&unit, &req(0, AccessKind::Read, ModeClass::Machine), u64::MAX).allow);
        assert!(spmp_check(&unit, &req(0x10, AccessKind::Read, ModeClass::Machine), u64::MAX).allow);
        assert!(spmp_check(&unit, &req(0x80, AccessKind::Read, ModeClass::Machine), u64::MAX).allow);
        assert!(!spmp_check(&unit, &req(0x80, AccessKind::Read, ModeClass::SLike), u64::MAX).allow);
        assert_eq!(
            unit.write_entry(0, SpmpEntry::off()),
            Err(EntryError::Locked(0))
        );
    }

    fn hyp_hart(model: HypervisorModel) -> HartContext {
        let mut cfg = HartConfig::new(0, 0, ExtensionSet::full(), 16);
        cfg.model = model;
        HartContext::new(&cfg).unwrap()
    }

    #[test]
    fn hs_read_with_s_entry() {
        let mut h = hyp_hart(HypervisorModel::Unified);
        h.hspmp_mut().unwrap().write_entry(0, SpmpEntry::napot(0x100, 0x100, Perms::RWX, true)).unwrap();
        h.set_mode(PrivilegeMode::HS).unwrap();
        assert!(two_stage_check(&h, 0x180, 4, AccessKind::Read).unwrap().allow);
    }

    #[test]
    fn vu_denied_by_hypervisor_stage() {
        let mut h = hyp_hart(HypervisorModel::Unified);
        let region = SpmpEntry::napot(0x100, 0x100, Perms::RWX, false);
        h.vspmp_mut().unwrap().write_entry(0, region).unwrap();
        h.hspmp_mut().unwrap().write_entry(0, region).unwrap();
        h.hspmp_mut().unwrap().set_hswitch_mask(0);
        h.set_mode(PrivilegeMode::VU).unwrap();
        let v = two_stage_check(&h, 0x100, 4, AccessKind::Write).unwrap();
        assert_eq!(v.deny_stage, Some(Stage::Hspmp));
        h.hspmp_mut().unwrap().set_hswitch_mask(1);
        assert!(two_stage_check(&h, 0x100, 4, AccessKind::Write).unwrap().allow);
    }

    #[test]
    fn separate_model_runs_out_of_guest_entries() {
        let regions: Vec<SpmpEntry> =
            (0..9).map(|i| SpmpEntry::napot(0x1000 * (i + 1), 0x100, Perms::RWX, false)).collect();
        let run = |model: HypervisorModel, placement: &dyn Fn(usize) -> usize| {
            let mut h = hyp_hart(model);
            let mut mask = 0;
            for (k, e) in regions.iter().enumerate() {
                let idx = placement(k);
                h.hspmp_mut().unwrap().write_entry(idx, *e).unwrap();
                h.vspmp_mut().unwrap().write_entry(k, *e).unwrap();
                mask |= 1 << idx;
            }
            h.hspmp_mut().unwrap().set_hswitch_mask(mask);
            h.set_mode(PrivilegeMode::VU).unwrap();
            (0..9u64)
                .map(|i| two_stage_check(&h, 0x1000 * (i + 1), 1, AccessKind::Read).unwrap())
                .collect::<Vec<_>>()
        };
        // hgPMP owns 8..16; the ninth region lands in the baseline half
        let sep = run(HypervisorModel::Separate { split_index: 8 }, &|k| if k < 8 { 8 + k } else { 2 });
        let uni = run(HypervisorModel::Unified, &|k| if k < 8 { 8 + k } else { 2 });
        assert!(uni.iter().all(|v| v.allow));
        assert!(sep.iter().any(|v| v.deny_stage == Some(Stage::Hgpmp)));
    }

    #[test]
    fn switch_costs() {
        let mut h = hyp_hart(HypervisorModel::Unified);
        h.csr_write(CsrName::Mwiddeleg(0), 0b1110);
        h.set_mode(PrivilegeMode::HS).unwrap();
        let mut vm = VmImage {
            name: "vm".into(),
            wids: vec![2, 3],
            hslwid: 2,
            entries: (0..8).map(|i| (i, SpmpEntry::napot(0x100 * i as u64, 0x100, Perms::RWX, false))).collect(),
            hswitch_mask: 0xFF,
            prestaged: true,
        };
        let stats = vm_switch(&mut h, &vm).unwrap();
        // 16 WIDs fit one delegation window
        assert_eq!(stats, SwitchStats { csr_writes: 3, entry_writes: 0 });
        vm.prestaged = false;
        assert_eq!(vm_switch(&mut h, &vm).unwrap().entry_writes, 16);
        vm.wids = vec![9];
        assert_eq!(vm_switch(&mut h, &vm), Err(ConfigError::VmWidNotDelegated(9)));
    }

    #[test]
    fn translator_partitions_masks() {
        assert_eq!(separate_to_unified(8, u64::MAX, u64::MAX), (0xFF, !0xFF));
        assert_eq!(separate_to_unified(0, 0xF0, 0x0F), (0, 0x0F));
    }

    #[test]
    fn bad_requests() {
        assert_eq!(AccessRequest::new(0, 3, AccessKind::Read, ModeClass::ULike), Err(RequestError::Size(3)));
        assert!(AccessRequest::new(u64::MAX - 2, 4, AccessKind::Read, ModeClass::ULike).is_err());
        assert!(AccessRequest::new(u64::MAX - 3, 4, AccessKind::Read, ModeClass::ULike).is_ok());
    }
}
