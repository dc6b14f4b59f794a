//! Reference models used by the integration tests. Everything here is
//! written from the architectural rules directly, using plain sets and
//! per-byte enumeration, and shares no logic with the library.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use wgsim::fabric::{BusKind, BusPerms};
use wgsim::hart::{CsrName, ExtensionSet, PrivilegeMode};
use wgsim::scenario::*;
use wgsim::spmp::{AccessKind, AddrMode, EntryCfg, HypervisorModel, Perms, SpmpEntry, Stage};

// ---------------------------------------------------------------------------
// WID CSR file

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Accepted,
    Ignored,
    Violation,
}

/// Full-extension hart with `nworlds <= 32`, modelled with WID sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelegModel {
    pub nworlds: u32,
    pub mode: PrivilegeMode,
    pub mwid: u32,
    pub mlwid: u32,
    pub slwid: u32,
    pub hslwid: u32,
    pub vslwid: u32,
    pub mwiddeleg: u32,
    pub hwiddeleg: u32,
}

fn bits(v: u32) -> BTreeSet<u32> {
    (0..32).filter(|i| v >> i & 1 == 1).collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Reg {
    Mlwid,
    Slwid,
    Hslwid,
    Vslwid,
    Mdeleg,
    Hdeleg,
}

impl DelegModel {
    pub fn new(nworlds: u32, mwid: u32) -> Self {
        Self {
            nworlds,
            mode: PrivilegeMode::M,
            mwid,
            mlwid: mwid,
            slwid: 0,
            hslwid: 0,
            vslwid: 0,
            mwiddeleg: 0,
            hwiddeleg: 0,
        }
    }

    pub fn s_set(&self) -> BTreeSet<u32> {
        bits(self.mwiddeleg).into_iter().filter(|w| *w < self.nworlds).collect()
    }

    pub fn vs_set(&self) -> BTreeSet<u32> {
        let s = self.s_set();
        bits(self.hwiddeleg).into_iter().filter(|w| s.contains(w)).collect()
    }

    fn reg(&self, csr: CsrName) -> Option<Reg> {
        use PrivilegeMode::*;
        let host = matches!(self.mode, M | HS);
        match csr {
            CsrName::Mlwid if self.mode == M => Some(Reg::Mlwid),
            CsrName::Mwiddeleg(0) if self.mode == M => Some(Reg::Mdeleg),
            CsrName::Slwid if self.mode == VS => Some(Reg::Vslwid),
            CsrName::Slwid if host => Some(Reg::Slwid),
            CsrName::Hslwid if host => Some(Reg::Hslwid),
            CsrName::Hwiddeleg(0) if host => Some(Reg::Hdeleg),
            CsrName::Vslwid if host => Some(Reg::Vslwid),
            _ => None,
        }
    }

    fn get(&self, r: Reg) -> u64 {
        u64::from(match r {
            Reg::Mlwid => self.mlwid,
            Reg::Slwid => self.slwid,
            Reg::Hslwid => self.hslwid,
            Reg::Vslwid => self.vslwid,
            Reg::Mdeleg => self.mwiddeleg,
            Reg::Hdeleg => self.hwiddeleg,
        })
    }

    pub fn read(&self, csr: CsrName) -> Option<u64> {
        self.reg(csr).map(|r| self.get(r))
    }

    pub fn write(&mut self, csr: CsrName, value: u64) -> Outcome {
        let Some(r) = self.reg(csr) else { return Outcome::Violation };
        if self.get(r) == value {
            return Outcome::Accepted;
        }
        let legal = |set: &BTreeSet<u32>| value < 64 && set.contains(&(value as u32));
        let all: BTreeSet<u32> = (0..self.nworlds).collect();
        let ok = match r {
            Reg::Mdeleg => {
                self.mwiddeleg = value as u32;
                return Outcome::Accepted;
            }
            Reg::Hdeleg => {
                self.hwiddeleg = value as u32;
                return Outcome::Accepted;
            }
            Reg::Mlwid => legal(&all),
            Reg::Slwid | Reg::Hslwid => legal(&self.s_set()),
            Reg::Vslwid => legal(&self.vs_set()),
        };
        if !ok {
            return Outcome::Ignored;
        }
        let v = value as u32;
        match r {
            Reg::Mlwid => self.mlwid = v,
            Reg::Slwid => self.slwid = v,
            Reg::Hslwid => self.hslwid = v,
            Reg::Vslwid => self.vslwid = v,
            _ => unreachable!(),
        }
        Outcome::Accepted
    }

    pub fn resolve(&self) -> Option<u32> {
        let s = self.s_set();
        match self.mode {
            PrivilegeMode::M => Some(self.mwid),
            PrivilegeMode::HS => Some(self.mlwid),
            PrivilegeMode::U => s.contains(&self.slwid).then_some(self.slwid),
            PrivilegeMode::VS => s.contains(&self.hslwid).then_some(self.hslwid),
            PrivilegeMode::VU => self.vs_set().contains(&self.vslwid).then_some(self.vslwid),
        }
    }
}

pub const MODEL_CSRS: [CsrName; 6] = [
    CsrName::Mlwid,
    CsrName::Mwiddeleg(0),
    CsrName::Slwid,
    CsrName::Hslwid,
    CsrName::Hwiddeleg(0),
    CsrName::Vslwid,
];

// ---------------------------------------------------------------------------
// Protection entries, enumerated byte by byte

pub const SPACE: usize = 2048;

/// Bytes `0..SPACE` covered by `entry`, with `prev` the previous entry's
/// address register.
pub fn coverage(entry: &SpmpEntry, prev: u64) -> Vec<bool> {
    let a = entry.addr;
    (0..SPACE as u64)
        .map(|b| match entry.cfg.mode {
            AddrMode::Off => false,
            AddrMode::Tor => prev << 2 <= b && b < a << 2,
            AddrMode::Na4 => b >> 2 == a,
            AddrMode::Napot => {
                let t = a ^ (a + 1);
                ((b >> 2) | t) == (a | t)
            }
        })
        .collect()
}

pub fn bank_coverage(entries: &[SpmpEntry]) -> Vec<Vec<bool>> {
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| coverage(e, if i == 0 { 0 } else { entries[i - 1].addr }))
        .collect()
}

pub fn covers_all(cov: &[bool], addr: u64, size: u8) -> bool {
    (addr..addr + u64::from(size)).all(|b| cov[b as usize])
}

pub fn grants(p: Perms, kind: AccessKind) -> bool {
    match kind {
        AccessKind::Read => p.r,
        AccessKind::Write => p.w,
        AccessKind::Execute => p.x,
    }
}

pub fn random_entry<R: Rng>(rng: &mut R, max_addr: u64) -> SpmpEntry {
    let mode = match rng.gen_range(0..6) {
        0 => AddrMode::Off,
        1 | 2 => AddrMode::Tor,
        3 => AddrMode::Na4,
        _ => AddrMode::Napot,
    };
    let addr = match mode {
        AddrMode::Napot => {
            let k = rng.gen_range(0..5);
            let base = rng.gen_range(0..max_addr) & !((1u64 << (k + 1)) - 1);
            base | ((1u64 << k) - 1)
        }
        _ => rng.gen_range(0..max_addr),
    };
    SpmpEntry {
        addr,
        cfg: EntryCfg {
            perms: Perms { r: rng.gen(), w: rng.gen(), x: rng.gen() },
            mode,
            s_bit: rng.gen(),
            lock: false,
        },
    }
}

// ---------------------------------------------------------------------------
// Random scenario programs

fn gen_ext<R: Rng>(rng: &mut R, nworlds: u32) -> ExtensionSet {
    let presets: [&[&str]; 6] = [
        &[],
        &["smwg"],
        &["smwg", "smwgd"],
        &["smwg", "smwgd", "sswg", "spmp"],
        &["hypervisor", "smwg", "smwgd", "sswg", "shwgd", "spmp", "spmp_hypervisor"],
        &["hypervisor", "smwg", "smwgd", "sswg", "shwgd", "slwgd", "spmp", "spmp_hypervisor"],
    ];
    let names = if nworlds > 32 { presets[5] } else { presets[rng.gen_range(0..presets.len())] };
    let mut ext = ExtensionSet::default();
    for n in names {
        ext.enable(n);
    }
    ext
}

fn gen_perms<R: Rng>(rng: &mut R) -> Perms {
    Perms { r: rng.gen(), w: rng.gen(), x: rng.gen() }
}

fn gen_entry<R: Rng>(rng: &mut R, lock: bool) -> SpmpEntry {
    let mode = [AddrMode::Off, AddrMode::Tor, AddrMode::Na4, AddrMode::Napot][rng.gen_range(0..4)];
    SpmpEntry {
        addr: rng.gen::<u64>() >> rng.gen_range(0..64),
        cfg: EntryCfg { perms: gen_perms(rng), mode, s_bit: rng.gen(), lock: lock && rng.gen() },
    }
}

fn gen_expectation<R: Rng>(rng: &mut R) -> Expectation {
    match rng.gen_range(0..3) {
        0 => Expectation::Allow,
        1 => Expectation::Deny(None),
        _ => Expectation::Deny(Some(Stage::ALL[rng.gen_range(0..Stage::ALL.len())])),
    }
}

fn gen_csr<R: Rng>(rng: &mut R) -> CsrName {
    let all = [
        CsrName::Mlwid,
        CsrName::Mwiddeleg(0),
        CsrName::Mwiddeleg(1),
        CsrName::Mwiddeleg(3),
        CsrName::Slwid,
        CsrName::Hslwid,
        CsrName::Hwiddeleg(0),
        CsrName::Hwiddeleg(2),
        CsrName::Vslwid,
        CsrName::Spmpswitch,
        CsrName::Hspmpswitch,
        CsrName::Vsspmpswitch,
    ];
    all[rng.gen_range(0..all.len())]
}

/// A random program that satisfies every static rule of the DSL.
pub fn gen_program<R: Rng>(rng: &mut R) -> ScenarioProgram {
    let nworlds = if rng.gen_bool(0.2) { rng.gen_range(33..=128) } else { rng.gen_range(1..=32) };
    let mut d = PlatformDecl { nworlds, ..Default::default() };
    for i in 0..rng.gen_range(1..4) {
        let entries = rng.gen_range(0..=64);
        let split = rng.gen_range(0..=entries);
        let models = match rng.gen_range(0..4) {
            0 => vec![HypervisorModel::Unified],
            1 => vec![HypervisorModel::Separate { split_index: split }],
            2 => vec![HypervisorModel::Unified, HypervisorModel::Separate { split_index: split }],
            _ => vec![HypervisorModel::Separate { split_index: split }, HypervisorModel::Unified],
        };
        d.harts.push(HartDecl {
            name: format!("h{i}"),
            mwid: rng.gen_range(0..nworlds),
            ext: gen_ext(rng, nworlds),
            models,
            entries,
            pmp_entries: rng.gen_range(0..=64),
        });
    }
    for i in 0..rng.gen_range(0..3) {
        d.anms.push(AnmDecl { name: format!("dma{i}"), wid: rng.gen_range(0..nworlds) });
    }
    for i in 0..rng.gen_range(0..4u64) {
        let peripheral = rng.gen_bool(0.4);
        d.resources.push(ResourceDecl {
            name: format!("r{i}"),
            kind: if peripheral { ResourceKind::Peripheral } else { ResourceKind::Memory },
            base: 0x1000_0000 * (i + 1),
            size: rng.gen_range(1..=0x1000_0000),
            slots: if peripheral { 1 } else { rng.gen_range(1..8) },
        });
    }
    for i in 0..rng.gen_range(0..3) {
        d.vms.push(VmDecl {
            name: format!("vm{i}"),
            wids: (0..rng.gen_range(0..4)).map(|_| rng.gen_range(0..nworlds)).collect(),
            hslwid: rng.gen_range(0..nworlds),
            hswitch: rng.gen(),
            prestaged: rng.gen(),
            entries: (0..rng.gen_range(0..4)).map(|_| (rng.gen_range(0..64), gen_entry(rng, false))).collect(),
        });
    }

    let mut steps = Vec::new();
    for _ in 0..rng.gen_range(0..25) {
        let h = &d.harts[rng.gen_range(0..d.harts.len())];
        let hart = h.name.clone();
        let stmt = match rng.gen_range(0..10) {
            0 => Statement::Mode { hart, mode: PrivilegeMode::ALL[rng.gen_range(0..5)] },
            1 => Statement::Csrw {
                hart,
                csr: gen_csr(rng),
                value: rng.gen::<u64>() >> rng.gen_range(0..64),
                expect: [None, Some(WriteExpect::Accepted), Some(WriteExpect::Ignored), Some(WriteExpect::Violation)]
                    [rng.gen_range(0..4)],
            },
            2 => Statement::ExpectCsrr { hart, csr: gen_csr(rng), value: rng.gen_range(0..256) },
            3 if h.entries > 0 => {
                Statement::Spmp { hart, index: rng.gen_range(0..h.entries), entry: gen_entry(rng, false) }
            }
            4 if h.pmp_entries > 0 => {
                Statement::Pmp { hart, index: rng.gen_range(0..h.pmp_entries), entry: gen_entry(rng, true) }
            }
            5 => Statement::Access {
                hart,
                kind: AccessKind::ALL[rng.gen_range(0..3)],
                addr: rng.gen(),
                size: [1, 2, 4, 8][rng.gen_range(0..4)],
                expect: gen_expectation(rng),
            },
            6 if !d.vms.is_empty() => {
                Statement::VmSwitch { hart, vm: d.vms[rng.gen_range(0..d.vms.len())].name.clone() }
            }
            7 if !d.anms.is_empty() => Statement::AnmAccess {
                anm: d.anms[rng.gen_range(0..d.anms.len())].name.clone(),
                kind: if rng.gen() { BusKind::Read } else { BusKind::Write },
                addr: rng.gen(),
                size: [1, 2, 4, 8][rng.gen_range(0..4)],
                expect: gen_expectation(rng),
            },
            8 if !d.resources.is_empty() => {
                let r = &d.resources[rng.gen_range(0..d.resources.len())];
                Statement::Checker {
                    resource: r.name.clone(),
                    slot: rng.gen_range(0..r.slots),
                    offset: rng.gen_range(0..0x1000),
                    len: rng.gen_range(0..0x1000),
                    wid: rng.gen_range(0..nworlds),
                    perms: BusPerms { r: rng.gen(), w: rng.gen() },
                    lock: rng.gen(),
                }
            }
            _ => {
                let counter = match rng.gen_range(0..5) {
                    0 => "csr_writes".to_string(),
                    1 => "accesses".to_string(),
                    2 => format!("denials.{}", Stage::ALL[rng.gen_range(0..Stage::ALL.len())]),
                    3 => format!("entry_writes.{}", d.harts[0].name),
                    _ => format!("csr_writes.{}", d.harts[0].name),
                };
                let op = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge][rng.gen_range(0..6)];
                Statement::ExpectStat { counter, op, value: rng.gen_range(0..100) }
            }
        };
        steps.push(stmt);
    }
    ScenarioProgram { platform: d, steps, spans: Vec::new() }
}
