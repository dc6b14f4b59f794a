use crate::fabric::{BusKind, BusPerms};
use crate::hart::{CsrName, ExtensionSet, PrivilegeMode};
use crate::spmp::{AccessKind, HypervisorModel, SpmpEntry, Stage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioProgram {
    pub platform: PlatformDecl,
    pub steps: Vec<Statement>,
    /// Source position of each step, parallel to `steps`.
    pub spans: Vec<Span>,
}

impl ScenarioProgram {
    /// Equality of platform and steps, ignoring source positions.
    pub fn same_structure(&self, other: &Self) -> bool {
        self.platform == other.platform && self.steps == other.steps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PlatformDecl {
    pub nworlds: u32,
    pub harts: Vec<HartDecl>,
    pub anms: Vec<AnmDecl>,
    pub resources: Vec<ResourceDecl>,
    pub vms: Vec<VmDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HartDecl {
    pub name: String,
    pub mwid: u32,
    pub ext: ExtensionSet,
    /// One model, or two when the hart is declared for model comparison.
    pub models: Vec<HypervisorModel>,
    pub entries: usize,
    pub pmp_entries: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnmDecl {
    pub name: String,
    pub wid: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResourceKind {
    Memory,
    Peripheral,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceDecl {
    pub name: String,
    pub kind: ResourceKind,
    pub base: u64,
    pub size: u64,
    pub slots: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VmDecl {
    pub name: String,
    pub wids: Vec<u32>,
    pub hslwid: u32,
    pub hswitch: u64,
    pub prestaged: bool,
    pub entries: Vec<(usize, SpmpEntry)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    Allow,
    /// Any denial, or a denial at a specific stage.
    Deny(Option<Stage>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WriteExpect {
    Accepted,
    Ignored,
    Violation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Eq => "==",
            Self::Ne => "!=",
            Self::Lt => "<",
            Self::Le => "<=",
            Self::Gt => ">",
            Self::Ge => ">=",
        }
    }

    pub fn eval(self, lhs: u64, rhs: u64) -> bool {
        match self {
            Self::Eq => lhs == rhs,
            Self::Ne => lhs != rhs,
            Self::Lt => lhs < rhs,
            Self::Le => lhs <= rhs,
            Self::Gt => lhs > rhs,
            Self::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Mode { hart: String, mode: PrivilegeMode },
    Csrw { hart: String, csr: CsrName, value: u64, expect: Option<WriteExpect> },
    ExpectCsrr { hart: String, csr: CsrName, value: u64 },
    /// Programs the SPMP unit addressed by the hart's current mode.
    Spmp { hart: String, index: usize, entry: SpmpEntry },
    /// Programs the M-mode PMP.
    Pmp { hart: String, index: usize, entry: SpmpEntry },
    Access { hart: String, kind: AccessKind, addr: u64, size: u8, expect: Expectation },
    VmSwitch { hart: String, vm: String },
    AnmAccess { anm: String, kind: BusKind, addr: u64, size: u8, expect: Expectation },
    Checker { resource: String, slot: usize, offset: u64, len: u64, wid: u32, perms: BusPerms, lock: bool },
    ExpectStat { counter: String, op: CmpOp, value: u64 },
}
