//! WID budget estimation for MCU configurations.
//!
//! Counting rules, applied per hart and summed:
//!
//! * one WID per non-CPU initiator (ANM),
//! * one WID per physical hart for M-level software,
//! * one WID per non-virtualized S and U level,
//! * one WID per virtualized level: HS once per hart, VS and VU once per VM,
//! * one extra WID for each flagged auxiliary (small) core.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PrivProfile {
    /// M+U
    MU,
    /// M+S+U
    MSU,
    /// M+HS+VS+VU
    MHSVSVU,
}

impl FromStr for PrivProfile {
    type Err = BudgetError;

    fn from_str(s: &str) -> Result<Self, BudgetError> {
        match s.to_ascii_uppercase().replace('+', "").as_str() {
            "MU" => Ok(Self::MU),
            "MSU" => Ok(Self::MSU),
            "MHSVSVU" => Ok(Self::MHSVSVU),
            _ => Err(BudgetError::Parse(format!("unknown privilege profile `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HartSpec {
    pub priv_profile: PrivProfile,
    pub vms: u32,
    pub small_core_extra: bool,
}

impl HartSpec {
    pub fn mu() -> Self {
        Self { priv_profile: PrivProfile::MU, vms: 0, small_core_extra: false }
    }

    pub fn msu() -> Self {
        Self { priv_profile: PrivProfile::MSU, vms: 0, small_core_extra: false }
    }

    pub fn virtualized(vms: u32) -> Self {
        Self { priv_profile: PrivProfile::MHSVSVU, vms, small_core_extra: false }
    }

    pub fn with_extra(mut self) -> Self {
        self.small_core_extra = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BudgetConfig {
    pub label: String,
    pub harts: Vec<HartSpec>,
    pub anms: u32,
    /// Free-text annotation carried into reports.
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BudgetBreakdown {
    pub anm_ids: u32,
    pub m_ids: u32,
    pub s_ids: u32,
    pub u_ids: u32,
    pub hs_ids: u32,
    pub vs_ids: u32,
    pub vu_ids: u32,
    pub extra_small_core_ids: u32,
    pub total: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BudgetError {
    #[error("configuration `{0}` declares no harts")]
    NoHarts(String),
    #[error("hart {index} of `{label}` hosts VMs without the hypervisor profile")]
    VmsWithoutHypervisor { label: String, index: usize },
    #[error("{0}")]
    Parse(String),
    #[error("unknown preset `{0}` (expected table2 or fig2)")]
    UnknownPreset(String),
}

pub fn estimate_wids(config: &BudgetConfig) -> Result<BudgetBreakdown, BudgetError> {
    if config.harts.is_empty() {
        return Err(BudgetError::NoHarts(config.label.clone()));
    }
    let mut b = BudgetBreakdown { anm_ids: config.anms, ..Default::default() };
    for (index, h) in config.harts.iter().enumerate() {
        b.m_ids += 1;
        match h.priv_profile {
            PrivProfile::MU | PrivProfile::MSU if h.vms != 0 => {
                return Err(BudgetError::VmsWithoutHypervisor { label: config.label.clone(), index });
            }
            PrivProfile::MU => b.u_ids += 1,
            PrivProfile::MSU => {
                b.s_ids += 1;
                b.u_ids += 1;
            }
            PrivProfile::MHSVSVU => {
                b.hs_ids += 1;
                b.vs_ids += h.vms;
                b.vu_ids += h.vms;
            }
        }
        if h.small_core_extra {
            b.extra_small_core_ids += 1;
        }
    }
    b.total = b.anm_ids + b.m_ids + b.s_ids + b.u_ids + b.hs_ids + b.vs_ids + b.vu_ids + b.extra_small_core_ids;
    Ok(b)
}

/// Caps worth flagging: the baseline 32-world limit, 64, and the 128-world
/// maximum of the wide delegation windows.
pub const THRESHOLDS: [u32; 3] = [32, 64, 128];

pub fn exceeded_thresholds(total: u32) -> Vec<u32> {
    THRESHOLDS.into_iter().filter(|t| total > *t).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub label: String,
    pub total: u32,
    pub breakdown: BudgetBreakdown,
    pub exceeds: Vec<u32>,
    pub note: Option<String>,
}

pub fn sweep(configs: &[BudgetConfig]) -> Result<Vec<SweepRow>, BudgetError> {
    configs
        .iter()
        .map(|c| {
            let breakdown = estimate_wids(c)?;
            Ok(SweepRow {
                label: c.label.clone(),
                total: breakdown.total,
                breakdown,
                exceeds: exceeded_thresholds(breakdown.total),
                note: c.note.clone(),
            })
        })
        .collect()
}

fn repeat(spec: HartSpec, n: usize) -> impl Iterator<Item = HartSpec> {
    std::iter::repeat_n(spec, n)
}

fn config(label: &str, harts: impl IntoIterator<Item = HartSpec>, anms: u32) -> BudgetConfig {
    BudgetConfig { label: label.into(), harts: harts.into_iter().collect(), anms, note: None }
}

/// 2 M+U harts with auxiliary-core IDs, 10 ANMs.
pub fn small() -> BudgetConfig {
    config("small", repeat(HartSpec::mu().with_extra(), 2), 10)
}

/// 4 M+S+U harts, 30 ANMs. The counting rules give 42; with
/// `reconcile` one hart carries an auxiliary-core ID, giving 43.
pub fn medium(reconcile: bool) -> BudgetConfig {
    let mut harts: Vec<HartSpec> = repeat(HartSpec::msu(), 4).collect();
    let mut c = if reconcile {
        harts[3].small_core_extra = true;
        config("medium", harts, 30)
    } else {
        config("medium (rules only)", harts, 30)
    };
    if reconcile {
        c.note = Some("counting rules give 42; +1 auxiliary-core allowance reconciles to 43".into());
    }
    c
}

/// `virtualized` of 6 main harts host `vms` VMs each, the rest run M+S+U;
/// plus one M+U and one M+S+U auxiliary hart without extra IDs.
pub fn high(label: &str, virtualized: usize, vms: u32, anms: u32) -> BudgetConfig {
    let main = repeat(HartSpec::virtualized(vms), virtualized).chain(repeat(HartSpec::msu(), 6 - virtualized));
    let aux = [HartSpec::mu(), HartSpec::msu()];
    config(label, main.chain(aux), anms)
}

pub fn table2() -> Vec<BudgetConfig> {
    vec![small(), medium(true), high("high", 3, 2, 50)]
}

pub fn fig2() -> Vec<BudgetConfig> {
    let mut m = medium(true);
    m.label = "M,typical".into();
    let mut s = small();
    s.label = "S,typical".into();
    vec![
        config("S,low", repeat(HartSpec::mu(), 2), 2),
        s,
        m,
        high("H,typical,VF0", 0, 0, 50),
        high("H,typical,VF2", 3, 2, 50),
        high("H,typical,VF4", 5, 4, 50),
        // one ANM per hart, as for S,low
        high("H,low,VF2", 3, 2, 8),
    ]
}

pub fn preset(name: &str) -> Result<Vec<BudgetConfig>, BudgetError> {
    match name {
        "table2" => Ok(table2()),
        "fig2" => Ok(fig2()),
        other => Err(BudgetError::UnknownPreset(other.into())),
    }
}

/// Parses a key-value configuration block:
///
/// ```text
/// label = my-mcu
/// anms = 12
/// hart = MSU
/// hart = MHSVSVU vms=2 x3
/// hart = MU extra
/// ```
///
/// Blank lines and `#` comments are ignored. `xN` repeats a hart line.
pub fn parse_config(text: &str) -> Result<BudgetConfig, BudgetError> {
    let mut cfg = BudgetConfig { label: "custom".into(), harts: Vec::new(), anms: 0, note: None };
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| BudgetError::Parse(format!("line {}: {msg}", lineno + 1));
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let value = value.trim();
        match key.trim() {
            "label" => cfg.label = value.to_string(),
            "note" => cfg.note = Some(value.to_string()),
            "anms" => cfg.anms = value.parse().map_err(|_| err(format!("bad ANM count `{value}`")))?,
            "hart" => {
                let mut words = value.split_whitespace();
                let profile: PrivProfile =
                    words.next().ok_or_else(|| err("missing privilege profile".into()))?.parse().map_err(|e: BudgetError| err(e.to_string()))?;
                let mut spec = HartSpec { priv_profile: profile, vms: 0, small_core_extra: false };
                let mut count = 1usize;
                for w in words {
                    if w == "extra" {
                        spec.small_core_extra = true;
                    } else if let Some(n) = w.strip_prefix("vms=") {
                        spec.vms = n.parse().map_err(|_| err(format!("bad VM count `{n}`")))?;
                    } else if let Some(n) = w.strip_prefix('x') {
                        count = n.parse().map_err(|_| err(format!("bad repeat `{w}`")))?;
                    } else {
                        return Err(err(format!("unexpected `{w}`")));
                    }
                }
                cfg.harts.extend(repeat(spec, count));
            }
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    estimate_wids(&cfg)?;
    Ok(cfg)
}

pub fn render_table(rows: &[SweepRow]) -> String {
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(5).max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>5}  {:>4} {:>3} {:>3} {:>3} {:>3} {:>3} {:>3} {:>5}",
        "label", "total", "anm", "m", "s", "u", "hs", "vs", "vu", "extra"
    );
    for r in rows {
        let b = &r.breakdown;
        let _ = write!(
            out,
            "{:<width$}  {:>5}  {:>4} {:>3} {:>3} {:>3} {:>3} {:>3} {:>3} {:>5}",
            r.label, r.total, b.anm_ids, b.m_ids, b.s_ids, b.u_ids, b.hs_ids, b.vs_ids, b.vu_ids,
            b.extra_small_core_ids
        );
        if !r.exceeds.is_empty() {
            let caps: Vec<String> = r.exceeds.iter().map(|t| format!(">{t}")).collect();
            let _ = write!(out, "  [{}]", caps.join(" "));
        }
        if let Some(note) = &r.note {
            let _ = write!(out, "  ({note})");
        }
        out.push('\n');
    }
    out
}

pub fn render_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("label,total,anm,m,s,u,hs,vs,vu,extra\n");
    for r in rows {
        let b = &r.breakdown;
        let label = if r.label.contains(',') { format!("\"{}\"", r.label) } else { r.label.clone() };
        let _ = writeln!(
            out,
            "{label},{},{},{},{},{},{},{},{},{}",
            r.total, b.anm_ids, b.m_ids, b.s_ids, b.u_ids, b.hs_ids, b.vs_ids, b.vu_ids, b.extra_small_core_ids
        );
    }
    out
}
