//! Per-hart privilege state and the WorldGuard CSR file.
//!
//! The CSR file covers the baseline hart-side registers (`mlwid`,
//! `mwiddeleg`, `slwid`) and the hypervisor/wide-WID additions (`hslwid`,
//! `hwiddeleg`, `vslwid` and the `h`/`h2`/`h3` delegation windows). CSRs are
//! addressed by symbolic name only; XLEN is 32, so each delegation vector is
//! exposed as up to four 32-bit windows.
//!
//! Delegation vectors are stored raw and masked when used. An lwid-type
//! register whose value lost its delegation after being written does not
//! resolve: [`HartContext::resolve_wid`] reports an [`InitiatorFault`].

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::spmp::{HypervisorModel, SpmpUnit, UnitKind, DEFAULT_ENTRIES, MAX_ENTRIES};

/// Largest `NWorlds` supported with 32-bit delegation vectors only.
pub const BASE_MAX_WORLDS: u32 = 32;
/// Largest `NWorlds` supported with the wide delegation windows.
pub const WIDE_MAX_WORLDS: u32 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PrivilegeMode {
    M,
    /// HS when the hypervisor extension is present, plain S otherwise.
    HS,
    U,
    VS,
    VU,
}

impl PrivilegeMode {
    pub const ALL: [PrivilegeMode; 5] = [Self::M, Self::HS, Self::U, Self::VS, Self::VU];

    /// The virtualization bit.
    pub fn virtualized(self) -> bool {
        matches!(self, Self::VS | Self::VU)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::M => "M",
            Self::HS => "HS",
            Self::U => "U",
            Self::VS => "VS",
            Self::VU => "VU",
        }
    }
}

impl fmt::Display for PrivilegeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PrivilegeMode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "M" => Self::M,
            "HS" | "S" => Self::HS,
            "U" => Self::U,
            "VS" => Self::VS,
            "VU" => Self::VU,
            _ => return Err(()),
        })
    }
}

/// ISA extensions relevant to isolation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ExtensionSet {
    pub hypervisor: bool,
    pub smwg: bool,
    pub smwgd: bool,
    pub sswg: bool,
    pub shwgd: bool,
    pub slwgd: bool,
    pub spmp: bool,
    pub spmp_hypervisor: bool,
}

impl ExtensionSet {
    pub const NAMES: [&'static str; 8] = [
        "hypervisor",
        "smwg",
        "smwgd",
        "sswg",
        "shwgd",
        "slwgd",
        "spmp",
        "spmp_hypervisor",
    ];

    /// Every extension enabled.
    pub fn full() -> Self {
        Self {
            hypervisor: true,
            smwg: true,
            smwgd: true,
            sswg: true,
            shwgd: true,
            slwgd: true,
            spmp: true,
            spmp_hypervisor: true,
        }
    }

    fn flag_mut(&mut self, name: &str) -> Option<&mut bool> {
        Some(match name {
            "hypervisor" => &mut self.hypervisor,
            "smwg" => &mut self.smwg,
            "smwgd" => &mut self.smwgd,
            "sswg" => &mut self.sswg,
            "shwgd" => &mut self.shwgd,
            "slwgd" => &mut self.slwgd,
            "spmp" => &mut self.spmp,
            "spmp_hypervisor" => &mut self.spmp_hypervisor,
            _ => return None,
        })
    }

    /// Sets the named flag; returns false for an unknown name.
    pub fn enable(&mut self, name: &str) -> bool {
        match self.flag_mut(name) {
            Some(flag) => {
                *flag = true;
                true
            }
            None => false,
        }
    }

    /// Names of the enabled extensions, in canonical order.
    pub fn names(&self) -> Vec<&'static str> {
        let flags = [
            self.hypervisor,
            self.smwg,
            self.smwgd,
            self.sswg,
            self.shwgd,
            self.slwgd,
            self.spmp,
            self.spmp_hypervisor,
        ];
        Self::NAMES
            .iter()
            .zip(flags)
            .filter(|(_, on)| *on)
            .map(|(n, _)| *n)
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let rules: [(bool, &'static str, &'static str); 5] = [
            (self.smwgd && !self.smwg, "smwgd", "smwg"),
            (self.sswg && !self.smwgd, "sswg", "smwgd"),
            (self.shwgd && !(self.sswg && self.hypervisor), "shwgd", "sswg+hypervisor"),
            (self.slwgd && !self.smwgd, "slwgd", "smwgd"),
            (
                self.spmp_hypervisor && !(self.spmp && self.hypervisor),
                "spmp_hypervisor",
                "spmp+hypervisor",
            ),
        ];
        match rules.iter().find(|(bad, _, _)| *bad) {
            Some((_, ext, needs)) => Err(ConfigError::MissingPrerequisite { ext, needs }),
            None => Ok(()),
        }
    }

    /// Upper bound on `NWorlds` for a hart with this extension set.
    pub fn max_worlds(&self) -> u32 {
        if self.slwgd {
            WIDE_MAX_WORLDS
        } else {
            BASE_MAX_WORLDS
        }
    }
}

/// Checks a platform-wide `NWorlds` against one hart's extensions.
pub fn check_nworlds(nworlds: u32, ext: &ExtensionSet) -> Result<(), ConfigError> {
    if nworlds == 0 || nworlds > ext.max_worlds() {
        return Err(ConfigError::NWorlds { nworlds, max: ext.max_worlds() });
    }
    Ok(())
}

/// World identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Wid(pub u32);

impl Wid {
    pub fn new(value: u32, nworlds: u32) -> Result<Self, ConfigError> {
        if value < nworlds {
            Ok(Wid(value))
        } else {
            Err(ConfigError::WidOutOfRange { wid: value, nworlds })
        }
    }

    pub fn value(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Wid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// 128-bit WID set, viewed through four 32-bit CSR windows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct WidBitVector(pub u128);

impl WidBitVector {
    pub const WINDOWS: usize = 4;

    pub fn empty() -> Self {
        Self(0)
    }

    pub fn from_wids<I: IntoIterator<Item = u32>>(wids: I) -> Self {
        Self(wids.into_iter().filter(|w| *w < 128).fold(0, |acc, w| acc | 1u128 << w))
    }

    pub fn contains(&self, wid: u32) -> bool {
        wid < 128 && self.0 >> wid & 1 == 1
    }

    pub fn window(&self, idx: usize) -> u32 {
        (self.0 >> (32 * idx)) as u32
    }

    pub fn set_window(&mut self, idx: usize, value: u32) {
        let shift = 32 * idx;
        self.0 = (self.0 & !(0xFFFF_FFFFu128 << shift)) | (u128::from(value) << shift);
    }

    /// Clears bits at positions `>= nworlds`.
    pub fn masked(&self, nworlds: u32) -> Self {
        if nworlds >= 128 {
            *self
        } else {
            Self(self.0 & ((1u128 << nworlds) - 1))
        }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        Self(self.0 & other.0)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        (0..128).filter(move |w| self.contains(*w))
    }
}

/// Number of delegation windows a platform with `nworlds` WIDs exposes.
pub fn deleg_windows(nworlds: u32) -> usize {
    (nworlds.max(1) as usize).div_ceil(32).min(WidBitVector::WINDOWS)
}

/// Symbolic CSR names understood by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CsrName {
    Mlwid,
    /// Window 0..=3 of `mwiddeleg`.
    Mwiddeleg(usize),
    /// At V=1 this address reaches `vslwid`.
    Slwid,
    Hslwid,
    Hwiddeleg(usize),
    Vslwid,
    /// At V=1 this address reaches the guest's vSPMP switch.
    Spmpswitch,
    Hspmpswitch,
    Vsspmpswitch,
}

const WINDOW_SUFFIX: [&str; 4] = ["", "h", "h2", "h3"];

impl CsrName {
    pub fn is_deleg(self) -> bool {
        matches!(self, Self::Mwiddeleg(_) | Self::Hwiddeleg(_))
    }

    pub fn is_lwid(self) -> bool {
        matches!(self, Self::Mlwid | Self::Slwid | Self::Hslwid | Self::Vslwid)
    }
}

impl fmt::Display for CsrName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Mlwid => f.write_str("mlwid"),
            Self::Mwiddeleg(w) => write!(f, "mwiddeleg{}", WINDOW_SUFFIX[*w]),
            Self::Slwid => f.write_str("slwid"),
            Self::Hslwid => f.write_str("hslwid"),
            Self::Hwiddeleg(w) => write!(f, "hwiddeleg{}", WINDOW_SUFFIX[*w]),
            Self::Vslwid => f.write_str("vslwid"),
            Self::Spmpswitch => f.write_str("spmpswitch"),
            Self::Hspmpswitch => f.write_str("hspmpswitch"),
            Self::Vsspmpswitch => f.write_str("vsspmpswitch"),
        }
    }
}

impl FromStr for CsrName {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let window = |rest: &str| WINDOW_SUFFIX.iter().position(|sfx| *sfx == rest);
        Ok(match s {
            "mlwid" => Self::Mlwid,
            "slwid" => Self::Slwid,
            "hslwid" => Self::Hslwid,
            "vslwid" => Self::Vslwid,
            "spmpswitch" => Self::Spmpswitch,
            "hspmpswitch" => Self::Hspmpswitch,
            "vsspmpswitch" => Self::Vsspmpswitch,
            _ => {
                if let Some(rest) = s.strip_prefix("mwiddeleg") {
                    Self::Mwiddeleg(window(rest).ok_or(())?)
                } else if let Some(rest) = s.strip_prefix("hwiddeleg") {
                    Self::Hwiddeleg(window(rest).ok_or(())?)
                } else {
                    return Err(());
                }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize)]
pub enum AccessViolation {
    #[error("CSR not implemented on this hart")]
    CsrAbsent,
    #[error("insufficient privilege")]
    InsufficientPrivilege,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WriteOutcome {
    Accepted,
    IgnoredIllegalValue,
    AccessViolation(AccessViolation),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize)]
pub enum InitiatorFault {
    #[error("{register} holds WID {wid} which is no longer delegated")]
    WidUnresolved { register: &'static str, wid: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("extension {ext} requires {needs}")]
    MissingPrerequisite { ext: &'static str, needs: &'static str },
    #[error("nworlds={nworlds} outside 1..={max}")]
    NWorlds { nworlds: u32, max: u32 },
    #[error("WID {wid} not below nworlds={nworlds}")]
    WidOutOfRange { wid: u32, nworlds: u32 },
    #[error("{count} SPMP entries exceeds the maximum of {max}")]
    TooManyEntries { count: usize, max: usize },
    #[error("split index {split} larger than the {entries} hypervisor SPMP entries")]
    SplitIndex { split: usize, entries: usize },
    #[error("mode {0} not available on this hart")]
    ModeUnavailable(PrivilegeMode),
    #[error("VM references WID {0} which is not delegated by mwiddeleg")]
    VmWidNotDelegated(u32),
    #[error("VM switch must be issued from M or HS, hart is in {0}")]
    VmSwitchMode(PrivilegeMode),
    #[error("{0}")]
    Other(String),
}

/// Level selector for [`HartContext::effective_deleg`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelegLevel {
    Supervisor,
    VirtualSupervisor,
}

/// WorldGuard CSR storage for one hart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WidCsrFile {
    mwid: Wid,
    pub(crate) mlwid: Wid,
    pub(crate) mwiddeleg: WidBitVector,
    pub(crate) slwid: Wid,
    pub(crate) hslwid: Wid,
    pub(crate) vslwid: Wid,
    pub(crate) hwiddeleg: WidBitVector,
}

impl WidCsrFile {
    /// Reset state: lower levels inherit M's WID through `mlwid`, nothing is
    /// delegated.
    pub fn new(mwid: Wid) -> Self {
        Self {
            mwid,
            mlwid: mwid,
            mwiddeleg: WidBitVector::empty(),
            slwid: Wid(0),
            hslwid: Wid(0),
            vslwid: Wid(0),
            hwiddeleg: WidBitVector::empty(),
        }
    }

    pub fn mwid(&self) -> Wid {
        self.mwid
    }

    pub fn mlwid(&self) -> Wid {
        self.mlwid
    }

    pub fn slwid(&self) -> Wid {
        self.slwid
    }

    pub fn hslwid(&self) -> Wid {
        self.hslwid
    }

    pub fn vslwid(&self) -> Wid {
        self.vslwid
    }

    pub fn mwiddeleg_raw(&self) -> WidBitVector {
        self.mwiddeleg
    }

    pub fn hwiddeleg_raw(&self) -> WidBitVector {
        self.hwiddeleg
    }
}

/// Static description of a hart, used to build a [`HartContext`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HartConfig {
    pub hart_id: usize,
    pub mwid: u32,
    pub extensions: ExtensionSet,
    pub nworlds: u32,
    /// Entries in the hypervisor/supervisor SPMP bank (and in the vSPMP).
    pub spmp_entries: usize,
    pub model: HypervisorModel,
    /// Entries in the M-mode PMP; zero means no PMP is implemented.
    pub pmp_entries: usize,
}

impl HartConfig {
    pub fn new(hart_id: usize, mwid: u32, extensions: ExtensionSet, nworlds: u32) -> Self {
        Self {
            hart_id,
            mwid,
            extensions,
            nworlds,
            spmp_entries: DEFAULT_ENTRIES,
            model: HypervisorModel::Unified,
            pmp_entries: 0,
        }
    }
}

/// Resolved storage location behind a CSR name for the current mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CsrTarget {
    Mlwid,
    Mwiddeleg(usize),
    Slwid,
    Hslwid,
    Hwiddeleg(usize),
    Vslwid,
    HostSwitch,
    GuestStageSwitch,
    VsSwitch,
}

#[derive(Debug, Clone)]
pub struct HartContext {
    hart_id: usize,
    nworlds: u32,
    mode: PrivilegeMode,
    extensions: ExtensionSet,
    wid_csrs: WidCsrFile,
    pub(crate) mpmp: SpmpUnit,
    pub(crate) hspmp: Option<SpmpUnit>,
    pub(crate) vspmp: Option<SpmpUnit>,
}

impl HartContext {
    pub fn new(cfg: &HartConfig) -> Result<Self, ConfigError> {
        cfg.extensions.validate()?;
        check_nworlds(cfg.nworlds, &cfg.extensions)?;
        let mwid = Wid::new(cfg.mwid, cfg.nworlds)?;
        for count in [cfg.spmp_entries, cfg.pmp_entries] {
            if count > MAX_ENTRIES {
                return Err(ConfigError::TooManyEntries { count, max: MAX_ENTRIES });
            }
        }
        if let HypervisorModel::Separate { split_index } = cfg.model {
            if split_index > cfg.spmp_entries {
                return Err(ConfigError::SplitIndex {
                    split: split_index,
                    entries: cfg.spmp_entries,
                });
            }
        }
        let ext = cfg.extensions;
        let hspmp = ext.spmp.then(|| {
            let model = if ext.spmp_hypervisor { cfg.model } else { HypervisorModel::Unified };
            SpmpUnit::new(UnitKind::Hspmp(model), cfg.spmp_entries)
        });
        let vspmp = ext
            .spmp_hypervisor
            .then(|| SpmpUnit::new(UnitKind::Vspmp, cfg.spmp_entries));
        Ok(Self {
            hart_id: cfg.hart_id,
            nworlds: cfg.nworlds,
            mode: PrivilegeMode::M,
            extensions: ext,
            wid_csrs: WidCsrFile::new(mwid),
            mpmp: SpmpUnit::new(UnitKind::Mpmp, cfg.pmp_entries),
            hspmp,
            vspmp,
        })
    }

    pub fn hart_id(&self) -> usize {
        self.hart_id
    }

    pub fn nworlds(&self) -> u32 {
        self.nworlds
    }

    pub fn mode(&self) -> PrivilegeMode {
        self.mode
    }

    pub fn extensions(&self) -> &ExtensionSet {
        &self.extensions
    }

    pub fn wid_csrs(&self) -> &WidCsrFile {
        &self.wid_csrs
    }

    pub fn mpmp(&self) -> &SpmpUnit {
        &self.mpmp
    }

    pub fn hspmp(&self) -> Option<&SpmpUnit> {
        self.hspmp.as_ref()
    }

    pub fn vspmp(&self) -> Option<&SpmpUnit> {
        self.vspmp.as_ref()
    }

    pub fn mpmp_mut(&mut self) -> &mut SpmpUnit {
        &mut self.mpmp
    }

    pub fn hspmp_mut(&mut self) -> Option<&mut SpmpUnit> {
        self.hspmp.as_mut()
    }

    pub fn vspmp_mut(&mut self) -> Option<&mut SpmpUnit> {
        self.vspmp.as_mut()
    }

    pub fn set_mode(&mut self, mode: PrivilegeMode) -> Result<(), ConfigError> {
        if mode.virtualized() && !self.extensions.hypervisor {
            return Err(ConfigError::ModeUnavailable(mode));
        }
        self.mode = mode;
        Ok(())
    }

    pub fn effective_deleg(&self, level: DelegLevel) -> WidBitVector {
        let s = self.wid_csrs.mwiddeleg.masked(self.nworlds);
        match level {
            DelegLevel::Supervisor => s,
            DelegLevel::VirtualSupervisor => self.wid_csrs.hwiddeleg.intersect(&s),
        }
    }

    /// WID attached to accesses issued in the current mode.
    pub fn resolve_wid(&self) -> Result<Wid, InitiatorFault> {
        let ext = &self.extensions;
        let csrs = &self.wid_csrs;
        let s_deleg = self.effective_deleg(DelegLevel::Supervisor);
        let checked = |register: &'static str, wid: Wid, deleg: WidBitVector| {
            if deleg.contains(wid.0) {
                Ok(wid)
            } else {
                Err(InitiatorFault::WidUnresolved { register, wid: wid.0 })
            }
        };
        // Without Shwgd the virtualized modes fall back to the U-mode rule.
        let lower = || {
            if ext.sswg {
                checked("slwid", csrs.slwid, s_deleg)
            } else if ext.smwg {
                Ok(csrs.mlwid)
            } else {
                Ok(csrs.mwid)
            }
        };
        match self.mode {
            PrivilegeMode::M => Ok(csrs.mwid),
            PrivilegeMode::HS => Ok(if ext.smwg { csrs.mlwid } else { csrs.mwid }),
            PrivilegeMode::U => lower(),
            PrivilegeMode::VS if ext.shwgd => checked("hslwid", csrs.hslwid, s_deleg),
            PrivilegeMode::VU if ext.shwgd => checked(
                "vslwid",
                csrs.vslwid,
                self.effective_deleg(DelegLevel::VirtualSupervisor),
            ),
            PrivilegeMode::VS | PrivilegeMode::VU => lower(),
        }
    }

    fn window_present(&self, window: usize) -> bool {
        window == 0 || (self.extensions.slwgd && self.nworlds > 32 * window as u32)
    }

    /// Maps a CSR name to its storage for the current mode, applying
    /// presence and privilege gating.
    fn target(&self, csr: CsrName) -> Result<CsrTarget, AccessViolation> {
        use AccessViolation::*;
        use PrivilegeMode::*;
        let ext = &self.extensions;
        let mode = self.mode;
        let present = |ok: bool| if ok { Ok(()) } else { Err(CsrAbsent) };
        let allow = |ok: bool| if ok { Ok(()) } else { Err(InsufficientPrivilege) };
        let host = matches!(mode, M | HS);
        match csr {
            CsrName::Mlwid => {
                present(ext.smwg)?;
                allow(mode == M)?;
                Ok(CsrTarget::Mlwid)
            }
            CsrName::Mwiddeleg(w) => {
                present(ext.smwgd && self.window_present(w))?;
                allow(mode == M)?;
                Ok(CsrTarget::Mwiddeleg(w))
            }
            CsrName::Slwid => {
                present(ext.sswg)?;
                if mode.virtualized() && ext.shwgd {
                    allow(mode == VS)?;
                    Ok(CsrTarget::Vslwid)
                } else {
                    allow(host)?;
                    Ok(CsrTarget::Slwid)
                }
            }
            CsrName::Hslwid => {
                present(ext.shwgd)?;
                allow(host)?;
                Ok(CsrTarget::Hslwid)
            }
            CsrName::Hwiddeleg(w) => {
                present(ext.shwgd && self.window_present(w))?;
                allow(host)?;
                Ok(CsrTarget::Hwiddeleg(w))
            }
            CsrName::Vslwid => {
                present(ext.shwgd)?;
                allow(host)?;
                Ok(CsrTarget::Vslwid)
            }
            CsrName::Spmpswitch => {
                present(ext.spmp)?;
                if mode.virtualized() && ext.spmp_hypervisor {
                    allow(mode == VS)?;
                    Ok(CsrTarget::VsSwitch)
                } else {
                    allow(host)?;
                    Ok(CsrTarget::HostSwitch)
                }
            }
            CsrName::Hspmpswitch => {
                present(ext.spmp_hypervisor)?;
                allow(host)?;
                Ok(CsrTarget::GuestStageSwitch)
            }
            CsrName::Vsspmpswitch => {
                present(ext.spmp_hypervisor)?;
                allow(host)?;
                Ok(CsrTarget::VsSwitch)
            }
        }
    }

    fn stored(&self, target: CsrTarget) -> u64 {
        let c = &self.wid_csrs;
        let hyp = self.hspmp.as_ref();
        match target {
            CsrTarget::Mlwid => c.mlwid.0.into(),
            CsrTarget::Mwiddeleg(w) => c.mwiddeleg.window(w).into(),
            CsrTarget::Slwid => c.slwid.0.into(),
            CsrTarget::Hslwid => c.hslwid.0.into(),
            CsrTarget::Hwiddeleg(w) => c.hwiddeleg.window(w).into(),
            CsrTarget::Vslwid => c.vslwid.0.into(),
            CsrTarget::HostSwitch => hyp.map_or(0, |u| u.switch_mask),
            CsrTarget::GuestStageSwitch => hyp.map_or(0, |u| u.hswitch_mask),
            CsrTarget::VsSwitch => self.vspmp.as_ref().map_or(0, |u| u.switch_mask),
        }
    }

    pub fn csr_read(&self, csr: CsrName) -> Result<u64, AccessViolation> {
        self.target(csr).map(|t| self.stored(t))
    }

    pub fn csr_write(&mut self, csr: CsrName, value: u64) -> WriteOutcome {
        let target = match self.target(csr) {
            Ok(t) => t,
            Err(v) => return WriteOutcome::AccessViolation(v),
        };
        // Rewriting the stored value is always a legal no-op.
        if self.stored(target) == value {
            return WriteOutcome::Accepted;
        }
        let s_deleg = self.effective_deleg(DelegLevel::Supervisor);
        let vs_deleg = self.effective_deleg(DelegLevel::VirtualSupervisor);
        let nworlds = u64::from(self.nworlds);
        let lwid = |deleg: Option<WidBitVector>| -> Option<Wid> {
            if value >= nworlds {
                return None;
            }
            let wid = value as u32;
            match deleg {
                Some(d) if !d.contains(wid) => None,
                _ => Some(Wid(wid)),
            }
        };
        let c = &mut self.wid_csrs;
        let slot = match target {
            CsrTarget::Mlwid => Some(&mut c.mlwid).zip(lwid(None)),
            CsrTarget::Slwid => Some(&mut c.slwid).zip(lwid(Some(s_deleg))),
            CsrTarget::Hslwid => Some(&mut c.hslwid).zip(lwid(Some(s_deleg))),
            CsrTarget::Vslwid => Some(&mut c.vslwid).zip(lwid(Some(vs_deleg))),
            CsrTarget::Mwiddeleg(w) => {
                c.mwiddeleg.set_window(w, value as u32);
                return WriteOutcome::Accepted;
            }
            CsrTarget::Hwiddeleg(w) => {
                c.hwiddeleg.set_window(w, value as u32);
                return WriteOutcome::Accepted;
            }
            CsrTarget::HostSwitch => {
                if let Some(u) = self.hspmp.as_mut() {
                    u.switch_mask = value;
                }
                return WriteOutcome::Accepted;
            }
            CsrTarget::GuestStageSwitch => {
                if let Some(u) = self.hspmp.as_mut() {
                    u.hswitch_mask = value;
                }
                return WriteOutcome::Accepted;
            }
            CsrTarget::VsSwitch => {
                if let Some(u) = self.vspmp.as_mut() {
                    u.switch_mask = value;
                }
                return WriteOutcome::Accepted;
            }
        };
        match slot {
            Some((reg, wid)) => {
                *reg = wid;
                WriteOutcome::Accepted
            }
            None => WriteOutcome::IgnoredIllegalValue,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hart(nworlds: u32) -> HartContext {
        HartContext::new(&HartConfig::new(0, 0, ExtensionSet::full(), nworlds)).unwrap()
    }

    fn write_as(h: &mut HartContext, mode: PrivilegeMode, csr: CsrName, v: u64) -> WriteOutcome {
        let prev = h.mode();
        h.set_mode(mode).unwrap();
        let out = h.csr_write(csr, v);
        h.set_mode(prev).unwrap();
        out
    }

    #[test]
    fn m_mode_resolves_mwid() {
        let h = hart(8);
        assert_eq!(h.resolve_wid(), Ok(Wid(0)));
    }

    #[test]
    fn hs_resolves_mlwid() {
        let mut h = hart(8);
        h.csr_write(CsrName::Mwiddeleg(0), 0b11000);
        assert_eq!(h.csr_write(CsrName::Mlwid, 3), WriteOutcome::Accepted);
        h.set_mode(PrivilegeMode::HS).unwrap();
        assert_eq!(h.resolve_wid(), Ok(Wid(3)));
    }

    #[test]
    fn revoked_hslwid_faults() {
        let mut h = hart(8);
        h.csr_write(CsrName::Mwiddeleg(0), 0b110000);
        assert_eq!(h.csr_write(CsrName::Hslwid, 5), WriteOutcome::Accepted);
        h.csr_write(CsrName::Mwiddeleg(0), 0b010000);
        h.set_mode(PrivilegeMode::VS).unwrap();
        assert!(matches!(
            h.resolve_wid(),
            Err(InitiatorFault::WidUnresolved { register: "hslwid", wid: 5 })
        ));
    }

    #[test]
    fn delegated_slwid_write_accepted() {
        let mut h = hart(8);
        h.csr_write(CsrName::Mwiddeleg(0), 0b11000);
        assert_eq!(write_as(&mut h, PrivilegeMode::HS, CsrName::Slwid, 4), WriteOutcome::Accepted);
        assert_eq!(h.wid_csrs().slwid(), Wid(4));
    }

    #[test]
    fn undelegated_slwid_write_ignored() {
        let mut h = hart(8);
        h.csr_write(CsrName::Mwiddeleg(0), 0b11000);
        assert_eq!(
            write_as(&mut h, PrivilegeMode::HS, CsrName::Slwid, 2),
            WriteOutcome::IgnoredIllegalValue
        );
        assert_eq!(h.wid_csrs().slwid(), Wid(0));
    }

    #[test]
    fn vs_slwid_address_reaches_vslwid() {
        let mut h = hart(8);
        h.csr_write(CsrName::Mwiddeleg(0), 1 << 6);
        h.csr_write(CsrName::Hwiddeleg(0), 1 << 6);
        h.set_mode(PrivilegeMode::VS).unwrap();
        assert_eq!(h.csr_write(CsrName::Slwid, 6), WriteOutcome::Accepted);
        assert_eq!(h.wid_csrs().vslwid(), Wid(6));
        assert_eq!(h.wid_csrs().slwid(), Wid(0));
        assert_eq!(h.csr_read(CsrName::Slwid), Ok(6));
    }

    #[test]
    fn privilege_gating() {
        let mut h = hart(8);
        let denied = WriteOutcome::AccessViolation(AccessViolation::InsufficientPrivilege);
        assert_eq!(write_as(&mut h, PrivilegeMode::U, CsrName::Mlwid, 3), denied);
        assert_eq!(write_as(&mut h, PrivilegeMode::HS, CsrName::Mlwid, 3), denied);
        assert_eq!(write_as(&mut h, PrivilegeMode::VS, CsrName::Hslwid, 0), denied);
        assert_eq!(write_as(&mut h, PrivilegeMode::VU, CsrName::Slwid, 0), denied);
        assert_eq!(write_as(&mut h, PrivilegeMode::VS, CsrName::Vslwid, 0), denied);
    }

    #[test]
    fn absent_window_without_wide_wids() {
        let mut ext = ExtensionSet::full();
        ext.slwgd = false;
        let h = HartContext::new(&HartConfig::new(0, 0, ext, 32)).unwrap();
        assert_eq!(h.csr_read(CsrName::Mwiddeleg(3)), Err(AccessViolation::CsrAbsent));
        assert_eq!(h.csr_read(CsrName::Mwiddeleg(1)), Err(AccessViolation::CsrAbsent));
    }

    #[test]
    fn mlwid_round_trip() {
        let mut h = hart(8);
        h.csr_write(CsrName::Mlwid, 7);
        assert_eq!(h.csr_read(CsrName::Mlwid), Ok(7));
    }

    #[test]
    fn vs_effective_is_intersection() {
        let mut h = hart(8);
        h.csr_write(CsrName::Mwiddeleg(0), 0b0110);
        h.csr_write(CsrName::Hwiddeleg(0), 0b1100);
        let vs = h.effective_deleg(DelegLevel::VirtualSupervisor);
        assert_eq!(vs.iter().collect::<Vec<_>>(), vec![2]);
        h.csr_write(CsrName::Hwiddeleg(0), 0);
        assert_eq!(h.effective_deleg(DelegLevel::VirtualSupervisor), WidBitVector::empty());
    }

    #[test]
    fn high_window_delegates_upper_wids() {
        let mut h = hart(64);
        assert_eq!(h.csr_write(CsrName::Mwiddeleg(1), 0xFFFF_FFFF), WriteOutcome::Accepted);
        let s = h.effective_deleg(DelegLevel::Supervisor);
        assert!((32..64).all(|w| s.contains(w)));
        assert!(!(0..32).any(|w| s.contains(w)));
        // h2 is only present above 64 WIDs
        assert_eq!(h.csr_read(CsrName::Mwiddeleg(2)), Err(AccessViolation::CsrAbsent));
    }

    #[test]
    fn deleg_reads_are_raw() {
        let mut h = hart(4);
        h.csr_write(CsrName::Mwiddeleg(0), 0xFF);
        assert_eq!(h.csr_read(CsrName::Mwiddeleg(0)), Ok(0xFF));
        assert_eq!(h.effective_deleg(DelegLevel::Supervisor).0, 0xF);
    }

    #[test]
    fn u_mode_without_sswg_uses_mlwid() {
        let ext = ExtensionSet { smwg: true, ..Default::default() };
        let mut h = HartContext::new(&HartConfig::new(0, 1, ext, 8)).unwrap();
        h.csr_write(CsrName::Mlwid, 5);
        h.set_mode(PrivilegeMode::U).unwrap();
        assert_eq!(h.resolve_wid(), Ok(Wid(5)));
    }

    #[test]
    fn prerequisites_enforced() {
        let ext = ExtensionSet { sswg: true, smwg: true, ..Default::default() };
        assert!(ext.validate().is_err());
        let ext = ExtensionSet { spmp_hypervisor: true, spmp: true, ..Default::default() };
        assert!(ext.validate().is_err());
        assert!(ExtensionSet::full().validate().is_ok());
    }

    #[test]
    fn virtual_modes_need_hypervisor() {
        let mut h = HartContext::new(&HartConfig::new(0, 0, ExtensionSet::default(), 4)).unwrap();
        assert!(h.set_mode(PrivilegeMode::VS).is_err());
        assert!(h.set_mode(PrivilegeMode::U).is_ok());
    }

    #[test]
    fn csr_names_round_trip() {
        for name in [
            "mlwid", "mwiddeleg", "mwiddelegh", "mwiddelegh2", "mwiddelegh3", "slwid", "hslwid",
            "hwiddeleg", "hwiddelegh3", "vslwid", "spmpswitch", "hspmpswitch", "vsspmpswitch",
        ] {
            assert_eq!(name.parse::<CsrName>().unwrap().to_string(), name);
        }
        assert!("mwiddelegh4".parse::<CsrName>().is_err());
    }
}
