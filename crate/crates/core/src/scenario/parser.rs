use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::fabric::{BusKind, BusPerms};
use crate::hart::{CsrName, ExtensionSet, PrivilegeMode, BASE_MAX_WORLDS, WIDE_MAX_WORLDS};
use crate::spmp::{
    napot_encode, AccessKind, AddrMode, EntryCfg, HypervisorModel, Perms, SpmpEntry, Stage, MAX_ENTRIES,
};

const COUNTERS: [&str; 3] = ["csr_writes", "entry_writes", "accesses"];

pub fn parse_scenario(text: &str) -> Result<ScenarioProgram, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    let platform = p.platform()?;
    let mut steps = Vec::new();
    let mut spans = Vec::new();
    loop {
        p.skip_newlines();
        if p.peek().tok == Tok::Eof {
            break;
        }
        let start = p.peek();
        spans.push(Span { line: start.line, column: start.column });
        steps.push(p.statement(&platform)?);
        p.end_of_line()?;
    }
    Ok(ScenarioProgram { platform, steps, spans })
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

fn err_at(t: &Token, message: impl Into<String>) -> ParseError {
    ParseError { line: t.line, column: t.column, message: message.into() }
}

fn describe(t: &Token) -> String {
    match &t.tok {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Number(n) => format!("`{n}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Newline => "end of line".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn parse_perms(t: &Token, s: &str) -> Result<Perms, ParseError> {
    let mut p = Perms::NONE;
    if s.is_empty() || s.len() > 3 {
        return Err(err_at(t, format!("invalid permissions `{s}`")));
    }
    for c in s.chars() {
        let flag = match c {
            'r' => &mut p.r,
            'w' => &mut p.w,
            'x' => &mut p.x,
            '-' => continue,
            _ => return Err(err_at(t, format!("invalid permissions `{s}`"))),
        };
        if *flag {
            return Err(err_at(t, format!("repeated permission in `{s}`")));
        }
        *flag = true;
    }
    Ok(p)
}

impl Parser {
    fn peek(&self) -> Token {
        self.toks[self.pos].clone()
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.pos += 1;
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek().tok, Tok::Sym(x) if x == s)
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(x) if x == s)
    }

    fn sym(&mut self, s: &str) -> Result<Token, ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Sym(x) if x == s => Ok(t),
            _ => Err(err_at(&t, format!("expected `{s}`, found {}", describe(&t)))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Token), ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t)),
            _ => Err(err_at(&t, format!("expected {what}, found {}", describe(&t)))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Token, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) if s == kw => Ok(t),
            _ => Err(err_at(&t, format!("expected `{kw}`, found {}", describe(&t)))),
        }
    }

    fn number(&mut self, what: &str) -> Result<(u64, Token), ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Number(n) => Ok((n, t)),
            _ => Err(err_at(&t, format!("expected {what}, found {}", describe(&t)))),
        }
    }

    fn small(&mut self, what: &str, max: u64) -> Result<(u64, Token), ParseError> {
        let (n, t) = self.number(what)?;
        if n > max {
            return Err(err_at(&t, format!("{what} {n} exceeds {max}")));
        }
        Ok((n, t))
    }

    fn end_of_line(&mut self) -> Result<(), ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Newline | Tok::Eof => Ok(()),
            _ => Err(err_at(&t, format!("expected end of line, found {}", describe(&t)))),
        }
    }

    fn opt_semi(&mut self) {
        if self.is_sym(";") {
            self.pos += 1;
        }
    }

    /// Skips newlines, then returns true (consuming it) if `}` follows.
    fn block_end(&mut self) -> bool {
        self.skip_newlines();
        if self.is_sym("}") {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn key(&mut self, allowed: &[&str]) -> Result<(String, Token), ParseError> {
        let (k, t) = self.ident("a key")?;
        if !allowed.contains(&k.as_str()) {
            return Err(err_at(&t, format!("unknown key `{k}` (expected one of {})", allowed.join(", "))));
        }
        self.sym("=")?;
        Ok((k, t))
    }

    fn platform(&mut self) -> Result<PlatformDecl, ParseError> {
        self.skip_newlines();
        self.keyword("platform")?;
        self.sym("{")?;
        let mut decl = PlatformDecl::default();
        let mut names: HashSet<String> = HashSet::new();
        let mut nworlds_tok = None;
        loop {
            if self.block_end() {
                break;
            }
            let (item, t) = self.ident("a platform item")?;
            if item != "nworlds" && nworlds_tok.is_none() {
                return Err(err_at(&t, "`nworlds` must be declared first"));
            }
            let mut unique = |name: &str, tok: &Token| {
                if names.insert(name.to_string()) {
                    Ok(())
                } else {
                    Err(err_at(tok, format!("duplicate name `{name}`")))
                }
            };
            match item.as_str() {
                "nworlds" => {
                    if nworlds_tok.is_some() {
                        return Err(err_at(&t, "duplicate `nworlds`"));
                    }
                    self.sym("=")?;
                    let (n, nt) = self.number("world count")?;
                    if n == 0 || n > u64::from(WIDE_MAX_WORLDS) {
                        return Err(err_at(&nt, format!("nworlds={n} outside 1..={WIDE_MAX_WORLDS}")));
                    }
                    decl.nworlds = n as u32;
                    nworlds_tok = Some(nt);
                }
                "hart" => {
                    let (name, nt) = self.ident("hart name")?;
                    unique(&name, &nt)?;
                    let h = self.hart_block(name, decl.nworlds)?;
                    decl.harts.push(h);
                }
                "anm" => {
                    let (name, nt) = self.ident("ANM name")?;
                    unique(&name, &nt)?;
                    self.sym("{")?;
                    let mut wid = None;
                    while !self.block_end() {
                        self.key(&["wid"])?;
                        wid = Some(self.wid(decl.nworlds)?);
                        self.opt_semi();
                    }
                    let wid = wid.ok_or_else(|| err_at(&nt, format!("ANM `{name}` needs a `wid`")))?;
                    decl.anms.push(AnmDecl { name, wid });
                }
                "memory" | "peripheral" => {
                    let (name, nt) = self.ident("resource name")?;
                    unique(&name, &nt)?;
                    let r = self.resource_block(name, &item, &nt)?;
                    let (lo, hi) = (u128::from(r.base), u128::from(r.base) + u128::from(r.size));
                    if let Some(o) = decl
                        .resources
                        .iter()
                        .find(|o| lo < u128::from(o.base) + u128::from(o.size) && u128::from(o.base) < hi)
                    {
                        return Err(err_at(&nt, format!("resource `{}` overlaps `{}`", r.name, o.name)));
                    }
                    decl.resources.push(r);
                }
                "vm" => {
                    let (name, nt) = self.ident("VM name")?;
                    unique(&name, &nt)?;
                    let vm = self.vm_block(name, decl.nworlds)?;
                    decl.vms.push(vm);
                }
                other => return Err(err_at(&t, format!("unknown platform item `{other}`"))),
            }
            self.opt_semi();
        }
        if nworlds_tok.is_none() {
            let t = self.peek();
            return Err(err_at(&t, "platform block without `nworlds`"));
        }
        Ok(decl)
    }

    fn wid(&mut self, nworlds: u32) -> Result<u32, ParseError> {
        let (n, t) = self.number("WID")?;
        if n >= u64::from(nworlds) {
            return Err(err_at(&t, format!("WID {n} not below nworlds={nworlds}")));
        }
        Ok(n as u32)
    }

    fn model(&mut self) -> Result<HypervisorModel, ParseError> {
        let (m, t) = self.ident("`unified` or `separate`")?;
        match m.as_str() {
            "unified" => Ok(HypervisorModel::Unified),
            "separate" => {
                self.sym(":")?;
                let (k, _) = self.small("split index", MAX_ENTRIES as u64)?;
                Ok(HypervisorModel::Separate { split_index: k as usize })
            }
            _ => Err(err_at(&t, format!("unknown SPMP model `{m}`"))),
        }
    }

    fn hart_block(&mut self, name: String, nworlds: u32) -> Result<HartDecl, ParseError> {
        let open = self.sym("{")?;
        let mut h = HartDecl {
            name,
            mwid: 0,
            ext: ExtensionSet::default(),
            models: vec![HypervisorModel::Unified],
            entries: crate::spmp::DEFAULT_ENTRIES,
            pmp_entries: 0,
        };
        let mut ext_tok = None;
        let mut model_tok = None;
        while !self.block_end() {
            let (k, kt) = self.key(&["mwid", "ext", "spmp", "entries", "pmp"])?;
            match k.as_str() {
                "mwid" => h.mwid = self.wid(nworlds)?,
                "ext" => {
                    self.sym("[")?;
                    while !self.is_sym("]") {
                        let (e, et) = self.ident("extension name")?;
                        if !h.ext.enable(&e) {
                            return Err(err_at(&et, format!("unknown extension `{e}`")));
                        }
                        if self.is_sym(",") {
                            self.pos += 1;
                        }
                    }
                    self.sym("]")?;
                    ext_tok = Some(kt);
                }
                "spmp" => {
                    h.models = if self.is_sym("[") {
                        self.pos += 1;
                        let mut ms = vec![self.model()?];
                        while self.is_sym(",") {
                            self.pos += 1;
                            ms.push(self.model()?);
                        }
                        self.sym("]")?;
                        ms
                    } else {
                        vec![self.model()?]
                    };
                    model_tok = Some(kt);
                }
                "entries" => h.entries = self.small("entry count", MAX_ENTRIES as u64)?.0 as usize,
                "pmp" => h.pmp_entries = self.small("entry count", MAX_ENTRIES as u64)?.0 as usize,
                _ => unreachable!(),
            }
            self.opt_semi();
        }
        let at_ext = ext_tok.as_ref().unwrap_or(&open);
        if let Err(e) = h.ext.validate() {
            return Err(err_at(at_ext, e.to_string()));
        }
        if nworlds > BASE_MAX_WORLDS && !h.ext.slwgd {
            return Err(err_at(
                at_ext,
                format!("nworlds={nworlds} exceeds {BASE_MAX_WORLDS} but hart `{}` lacks slwgd", h.name),
            ));
        }
        let at_model = model_tok.as_ref().unwrap_or(&open);
        let separate = h.models.iter().filter(|m| matches!(m, HypervisorModel::Separate { .. })).count();
        if h.models.len() > 2 || (h.models.len() == 2 && separate != 1) {
            return Err(err_at(at_model, "a model list must name one unified and one separate variant"));
        }
        for m in &h.models {
            if let HypervisorModel::Separate { split_index } = m {
                if *split_index > h.entries {
                    return Err(err_at(at_model, format!("split {split_index} exceeds {} entries", h.entries)));
                }
            }
        }
        Ok(h)
    }

    fn resource_block(&mut self, name: String, kind: &str, name_tok: &Token) -> Result<ResourceDecl, ParseError> {
        self.sym("{")?;
        let kind = if kind == "memory" { ResourceKind::Memory } else { ResourceKind::Peripheral };
        let (mut base, mut size, mut slots) = (None, None, 1usize);
        while !self.block_end() {
            let (k, _) = self.key(&["base", "size", "slots"])?;
            match k.as_str() {
                "base" => base = Some(self.number("base address")?.0),
                "size" => {
                    let (n, t) = self.number("size")?;
                    if n == 0 {
                        return Err(err_at(&t, "resource size must be non-zero"));
                    }
                    size = Some(n);
                }
                "slots" => {
                    let (n, t) = self.small("slot count", 1024)?;
                    if n == 0 || (kind == ResourceKind::Peripheral && n != 1) {
                        return Err(err_at(&t, "memory needs at least one slot; peripherals have exactly one"));
                    }
                    slots = n as usize;
                }
                _ => unreachable!(),
            }
            self.opt_semi();
        }
        let base = base.ok_or_else(|| err_at(name_tok, format!("resource `{name}` needs `base`")))?;
        let size = size.ok_or_else(|| err_at(name_tok, format!("resource `{name}` needs `size`")))?;
        if u128::from(base) + u128::from(size) > 1u128 << 64 {
            return Err(err_at(name_tok, format!("resource `{name}` wraps the address space")));
        }
        Ok(ResourceDecl { name, kind, base, size, slots })
    }

    fn vm_block(&mut self, name: String, nworlds: u32) -> Result<VmDecl, ParseError> {
        self.sym("{")?;
        let mut vm = VmDecl { name, wids: Vec::new(), hslwid: 0, hswitch: 0, prestaged: true, entries: Vec::new() };
        while !self.block_end() {
            if self.is_ident("entry") {
                self.pos += 1;
                let (idx, _) = self.small("entry index", MAX_ENTRIES as u64 - 1)?;
                let entry = self.entry(false)?;
                vm.entries.push((idx as usize, entry));
                self.opt_semi();
                continue;
            }
            let (k, _) = self.key(&["wids", "hslwid", "hswitch", "prestaged"])?;
            match k.as_str() {
                "wids" => {
                    self.sym("[")?;
                    while !self.is_sym("]") {
                        vm.wids.push(self.wid(nworlds)?);
                        if self.is_sym(",") {
                            self.pos += 1;
                        }
                    }
                    self.sym("]")?;
                }
                "hslwid" => vm.hslwid = self.wid(nworlds)?,
                "hswitch" => vm.hswitch = self.number("switch mask")?.0,
                "prestaged" => {
                    let (b, t) = self.ident("`true` or `false`")?;
                    vm.prestaged = match b.as_str() {
                        "true" => true,
                        "false" => false,
                        _ => return Err(err_at(&t, format!("expected `true` or `false`, found `{b}`"))),
                    };
                }
                _ => unreachable!(),
            }
            self.opt_semi();
        }
        Ok(vm)
    }

    /// `<mode> <addr>[/<size>] <perms> [s] [l]`
    fn entry(&mut self, allow_lock: bool) -> Result<SpmpEntry, ParseError> {
        let (m, mt) = self.ident("address mode")?;
        let mode = AddrMode::parse(&m).ok_or_else(|| err_at(&mt, format!("unknown address mode `{m}`")))?;
        let (mut addr, at) = self.number("address")?;
        if self.is_sym("/") {
            self.pos += 1;
            let (size, st) = self.number("region size")?;
            if mode != AddrMode::Napot {
                return Err(err_at(&st, "`base/size` form is only valid for NAPOT"));
            }
            if !size.is_power_of_two() || size < 8 || addr % size != 0 {
                return Err(err_at(&at, format!("{addr:#x}/{size:#x} is not a naturally aligned power-of-two region")));
            }
            addr = napot_encode(addr, size);
        }
        let (p, pt) = self.ident("permissions")?;
        let perms = parse_perms(&pt, &p)?;
        let mut cfg = EntryCfg { perms, mode, s_bit: false, lock: false };
        loop {
            if self.is_ident("s") && !cfg.s_bit {
                cfg.s_bit = true;
            } else if allow_lock && self.is_ident("l") && !cfg.lock {
                cfg.lock = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        Ok(SpmpEntry { addr, cfg })
    }

    fn expectation(&mut self) -> Result<Expectation, ParseError> {
        self.sym("=>")?;
        let (v, t) = self.ident("`allow` or `deny`")?;
        match v.as_str() {
            "allow" => Ok(Expectation::Allow),
            "deny" => {
                if self.is_sym(":") {
                    self.pos += 1;
                    let (s, st) = self.ident("stage name")?;
                    let stage = Stage::parse(&s).ok_or_else(|| err_at(&st, format!("unknown stage `{s}`")))?;
                    Ok(Expectation::Deny(Some(stage)))
                } else {
                    Ok(Expectation::Deny(None))
                }
            }
            _ => Err(err_at(&t, format!("expected `allow` or `deny`, found `{v}`"))),
        }
    }

    fn access_size(&mut self) -> Result<u8, ParseError> {
        if let Tok::Number(_) = self.peek().tok {
            let (n, t) = self.number("access size")?;
            if !matches!(n, 1 | 2 | 4 | 8) {
                return Err(err_at(&t, format!("access size {n} not in {{1, 2, 4, 8}}")));
            }
            Ok(n as u8)
        } else {
            Ok(4)
        }
    }

    fn csr(&mut self) -> Result<CsrName, ParseError> {
        let (c, t) = self.ident("CSR name")?;
        c.parse().map_err(|_| err_at(&t, format!("unknown CSR `{c}`")))
    }

    fn statement(&mut self, decl: &PlatformDecl) -> Result<Statement, ParseError> {
        let (head, ht) = self.ident("a statement")?;
        match head.as_str() {
            "on" => {
                let (hart, t) = self.ident("hart name")?;
                let hd = decl
                    .harts
                    .iter()
                    .find(|h| h.name == hart)
                    .ok_or_else(|| err_at(&t, format!("undeclared hart `{hart}`")))?;
                self.sym(":")?;
                self.hart_statement(hart.clone(), hd, decl)
            }
            "anm" => {
                let (anm, t) = self.ident("ANM name")?;
                if !decl.anms.iter().any(|a| a.name == anm) {
                    return Err(err_at(&t, format!("undeclared ANM `{anm}`")));
                }
                self.sym(":")?;
                self.keyword("access")?;
                let (k, kt) = self.ident("`r` or `w`")?;
                let kind = match k.as_str() {
                    "r" => BusKind::Read,
                    "w" => BusKind::Write,
                    _ => return Err(err_at(&kt, format!("ANM access kind must be `r` or `w`, found `{k}`"))),
                };
                let (addr, _) = self.number("address")?;
                let size = self.access_size()?;
                let expect = self.expectation()?;
                Ok(Statement::AnmAccess { anm, kind, addr, size, expect })
            }
            "checker" => {
                let (resource, t) = self.ident("resource name")?;
                let rd = decl
                    .resources
                    .iter()
                    .find(|r| r.name == resource)
                    .ok_or_else(|| err_at(&t, format!("undeclared resource `{resource}`")))?;
                self.keyword("slot")?;
                let (slot, st) = self.number("slot index")?;
                if slot >= rd.slots as u64 {
                    return Err(err_at(&st, format!("slot {slot} out of range for `{resource}`")));
                }
                self.keyword("range")?;
                let (offset, _) = self.number("range offset")?;
                let (len, _) = self.number("range length")?;
                self.keyword("wid")?;
                let wid = self.wid(decl.nworlds)?;
                let (p, pt) = self.ident("`rw` permissions")?;
                let perms = parse_perms(&pt, &p)?;
                if perms.x || p.len() > 2 {
                    return Err(err_at(&pt, format!("checker permissions must use `r`/`w`, found `{p}`")));
                }
                let lock = if self.is_ident("lock") {
                    self.pos += 1;
                    true
                } else {
                    false
                };
                Ok(Statement::Checker {
                    resource,
                    slot: slot as usize,
                    offset,
                    len,
                    wid,
                    perms: BusPerms { r: perms.r, w: perms.w },
                    lock,
                })
            }
            "expect" => {
                self.keyword("stat")?;
                let (counter, ct) = self.ident("counter name")?;
                let ok = match counter.split_once('.') {
                    None => COUNTERS.contains(&counter.as_str()),
                    Some(("denials", stage)) => Stage::parse(stage).is_some(),
                    Some(("csr_writes" | "entry_writes", hart)) => decl.harts.iter().any(|h| h.name == hart),
                    Some(_) => false,
                };
                if !ok {
                    return Err(err_at(&ct, format!("unknown counter `{counter}`")));
                }
                let ot = self.next();
                let op = match ot.tok {
                    Tok::Sym("==") => CmpOp::Eq,
                    Tok::Sym("!=") => CmpOp::Ne,
                    Tok::Sym("<") => CmpOp::Lt,
                    Tok::Sym("<=") => CmpOp::Le,
                    Tok::Sym(">") => CmpOp::Gt,
                    Tok::Sym(">=") => CmpOp::Ge,
                    _ => return Err(err_at(&ot, format!("expected comparison, found {}", describe(&ot)))),
                };
                let (value, _) = self.number("counter value")?;
                Ok(Statement::ExpectStat { counter, op, value })
            }
            _ => Err(err_at(&ht, format!("unknown statement `{head}`"))),
        }
    }

    fn hart_statement(&mut self, hart: String, hd: &HartDecl, decl: &PlatformDecl) -> Result<Statement, ParseError> {
        let (op, ot) = self.ident("hart operation")?;
        match op.as_str() {
            "mode" => {
                let (m, mt) = self.ident("privilege mode")?;
                let mode: PrivilegeMode = m.parse().map_err(|_| err_at(&mt, format!("unknown mode `{m}`")))?;
                Ok(Statement::Mode { hart, mode })
            }
            "csrw" => {
                let csr = self.csr()?;
                let (value, _) = self.number("CSR value")?;
                let expect = if self.is_sym("=>") {
                    self.pos += 1;
                    let (e, et) = self.ident("write outcome")?;
                    Some(match e.as_str() {
                        "accepted" => WriteExpect::Accepted,
                        "ignored" => WriteExpect::Ignored,
                        "violation" => WriteExpect::Violation,
                        _ => return Err(err_at(&et, format!("unknown write outcome `{e}`"))),
                    })
                } else {
                    None
                };
                Ok(Statement::Csrw { hart, csr, value, expect })
            }
            "expect" => {
                self.keyword("csrr")?;
                let csr = self.csr()?;
                self.sym("==")?;
                let (value, _) = self.number("expected value")?;
                Ok(Statement::ExpectCsrr { hart, csr, value })
            }
            "spmp" | "pmp" => {
                let pmp = op == "pmp";
                let limit = if pmp { hd.pmp_entries } else { hd.entries };
                let (idx, it) = self.number("entry index")?;
                if idx >= limit as u64 {
                    return Err(err_at(&it, format!("entry {idx} out of range ({limit} entries)")));
                }
                let entry = self.entry(pmp)?;
                let index = idx as usize;
                Ok(if pmp {
                    Statement::Pmp { hart, index, entry }
                } else {
                    Statement::Spmp { hart, index, entry }
                })
            }
            "access" => {
                let (k, kt) = self.ident("`r`, `w` or `x`")?;
                let kind = match k.as_str() {
                    "r" => AccessKind::Read,
                    "w" => AccessKind::Write,
                    "x" => AccessKind::Execute,
                    _ => return Err(err_at(&kt, format!("access kind must be `r`, `w` or `x`, found `{k}`"))),
                };
                let (addr, _) = self.number("address")?;
                let size = self.access_size()?;
                let expect = self.expectation()?;
                Ok(Statement::Access { hart, kind, addr, size, expect })
            }
            "vmswitch" => {
                let (vm, vt) = self.ident("VM name")?;
                if !decl.vms.iter().any(|v| v.name == vm) {
                    return Err(err_at(&vt, format!("undeclared VM `{vm}`")));
                }
                Ok(Statement::VmSwitch { hart, vm })
            }
            _ => Err(err_at(&ot, format!("unknown hart operation `{op}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "platform {\n  nworlds=4;\n  hart h0 { mwid=0; ext=[smwg]; }\n}\n";

    #[test]
    fn minimal_platform() {
        let p = parse_scenario(MINIMAL).unwrap();
        assert_eq!(p.platform.harts.len(), 1);
        assert!(p.steps.is_empty());
    }

    #[test]
    fn privilege_is_not_checked_at_parse_time() {
        let text = format!("{MINIMAL}on h0: mode U\non h0: csrw mlwid 3\n");
        let p = parse_scenario(&text).unwrap();
        assert_eq!(p.steps.len(), 2);
        assert_eq!(p.spans[1], Span { line: 6, column: 1 });
    }

    #[test]
    fn malformed_access_kind() {
        let text = format!("{MINIMAL}on h0: access q 0x10 => allow\n");
        let e = parse_scenario(&text).unwrap_err();
        assert_eq!((e.line, e.column), (5, 15));
    }

    #[test]
    fn semantic_errors_are_positioned() {
        let e = parse_scenario(&format!("{MINIMAL}on h9: mode U\n")).unwrap_err();
        assert_eq!((e.line, e.column), (5, 4));
        let e = parse_scenario("platform {\n nworlds=4\n anm dma { wid=4; }\n}\n").unwrap_err();
        assert_eq!((e.line, e.column), (3, 16));
    }

    #[test]
    fn nworlds_cap_needs_slwgd() {
        let narrow = "platform { nworlds=33\n hart h0 { ext=[smwg, smwgd]; } }\n";
        assert!(parse_scenario(narrow).is_err());
        let wide = "platform { nworlds=128\n hart h0 { ext=[smwg, smwgd, slwgd]; } }\n";
        assert!(parse_scenario(wide).is_ok());
        assert!(parse_scenario("platform { nworlds=129 }").is_err());
    }

    #[test]
    fn napot_sugar() {
        let text = format!("{MINIMAL}on h0: pmp 0 NAPOT 0x8000_0000/0x1000 rwx l\n");
        let text = text.replace("mwid=0;", "mwid=0; pmp=4;");
        let p = parse_scenario(&text).unwrap();
        match &p.steps[0] {
            Statement::Pmp { entry, .. } => {
                assert_eq!(entry.addr, 0x2000_01FF);
                assert!(entry.cfg.lock);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn model_variants() {
        let text = "platform { nworlds=4\n hart h0 { spmp=[unified, separate:8]; } }\n";
        let p = parse_scenario(text).unwrap();
        assert_eq!(p.platform.harts[0].models.len(), 2);
        let text = "platform { nworlds=4\n hart h0 { spmp=[unified, unified]; } }\n";
        assert!(parse_scenario(text).is_err());
    }
}
