//! Register processes: safe, regular and atomic, in full-read and
//! instant-read style, plus the blocking full-read atomic variants.
//!
//! A register is described by a [`RegisterStatus`]. Each process is a list
//! of guarded summands; [`RegisterModel::step`] enumerates the enabled ones
//! and returns canonical successor statuses.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::action::{Action, ActionKind, RegId, ThreadId, Value, MAX_DOMAIN, MAX_THREADS};
use crate::error::Error;
use crate::lts::Lts;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    Safe,
    Regular,
    Atomic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Style {
    FullRead,
    InstantRead,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Blocking {
    None,
    /// Starts require `rds ∪ wrts = ∅`.
    BlockAll,
    /// Reads wait for writes; writes wait for everything.
    BlockWritesAndReadsOfWrites,
    /// Reads and writes wait for writes only.
    BlockWritesOnly,
}

/// Initial value of a register: fixed, or enumerated by the checker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Init {
    Value(Value),
    Any,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RegisterConfig {
    pub id: RegId,
    /// Domain is `0..domain`.
    pub domain: u8,
    pub init: Init,
    pub kind: Kind,
    pub style: Style,
    pub blocking: Blocking,
}

/// Finite memory of one register.
///
/// Sets of threads are bitmasks. `posv` holds one bitmask of values per thread.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegisterStatus {
    pub stor: Value,
    pub rds: u8,
    pub wrts: u8,
    pub pend: u8,
    pub ovrl: u8,
    pub rec: [Value; MAX_THREADS],
    pub posv: [u16; MAX_THREADS],
}

fn bit(t: ThreadId) -> u8 {
    1 << t
}

impl RegisterStatus {
    /// The status `init` for initial value `d`.
    pub fn initial(d: Value) -> RegisterStatus {
        RegisterStatus {
            stor: d,
            rds: 0,
            wrts: 0,
            pend: 0,
            ovrl: 0,
            rec: [d; MAX_THREADS],
            posv: [0; MAX_THREADS],
        }
    }

    pub fn in_rds(&self, t: ThreadId) -> bool {
        self.rds & bit(t) != 0
    }
    pub fn in_wrts(&self, t: ThreadId) -> bool {
        self.wrts & bit(t) != 0
    }
    pub fn in_pend(&self, t: ThreadId) -> bool {
        self.pend & bit(t) != 0
    }
    pub fn ovrl(&self, t: ThreadId) -> bool {
        self.ovrl & bit(t) != 0
    }

    fn writer_values(&self) -> u16 {
        let mut m = 0u16;
        for t in 0..MAX_THREADS as u8 {
            if self.in_wrts(t) {
                m |= 1 << self.rec[t as usize];
            }
        }
        m
    }

    /// `usr`: start of a read by `t`.
    pub fn usr(&self, t: ThreadId) -> RegisterStatus {
        let mut s = *self;
        s.rds |= bit(t);
        s.pend |= bit(t);
        set_bit(&mut s.ovrl, t, self.wrts != 0);
        s.posv[t as usize] = (1 << self.stor) | self.writer_values();
        s
    }

    /// `ufr`: end of a read by `t`.
    pub fn ufr(&self, t: ThreadId) -> RegisterStatus {
        let mut s = *self;
        s.rds &= !bit(t);
        s
    }

    /// `usw`: start of a write of `d` by `t`. `full` also grows `posv`.
    pub fn usw(&self, t: ThreadId, d: Value, full: bool) -> RegisterStatus {
        let mut s = *self;
        s.wrts |= bit(t);
        s.pend |= bit(t);
        s.rec[t as usize] = d;
        set_bit(&mut s.ovrl, t, self.wrts != 0);
        for u in 0..MAX_THREADS as u8 {
            if u != t {
                s.ovrl |= bit(u);
                if full {
                    s.posv[u as usize] |= 1 << d;
                }
            }
        }
        s
    }

    /// `ufw`: end of a write by `t`, storing `d`.
    pub fn ufw(&self, t: ThreadId, d: Value) -> RegisterStatus {
        let mut s = *self;
        s.stor = d;
        s.wrts &= !bit(t);
        s
    }

    /// `uor`: ordering point of a read by `t`.
    pub fn uor(&self, t: ThreadId) -> RegisterStatus {
        let mut s = *self;
        s.pend &= !bit(t);
        s.rec[t as usize] = self.stor;
        s
    }

    /// `uow`: ordering point of a write by `t`, storing `d`.
    pub fn uow(&self, t: ThreadId, d: Value) -> RegisterStatus {
        let mut s = *self;
        s.stor = d;
        s.pend &= !bit(t);
        s
    }

    /// `urd`: an instantaneous read changes nothing.
    pub fn urd(&self, _t: ThreadId) -> RegisterStatus {
        *self
    }
}

fn set_bit(m: &mut u8, t: ThreadId, v: bool) {
    if v {
        *m |= bit(t);
    } else {
        *m &= !bit(t);
    }
}

/// Shape of a register process, independent of id and initial value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RegisterModel {
    pub kind: Kind,
    pub style: Style,
    pub blocking: Blocking,
    pub domain: u8,
    pub threads: u8,
}

impl RegisterModel {
    pub fn new(kind: Kind, style: Style, blocking: Blocking, domain: u8, threads: u8) -> Result<RegisterModel, Error> {
        if domain == 0 || domain as usize > MAX_DOMAIN {
            return Err(Error::InvalidConfig(format!("domain size {domain} not in 1..={MAX_DOMAIN}")));
        }
        if threads == 0 || threads as usize > MAX_THREADS {
            return Err(Error::InvalidConfig(format!("thread count {threads} not in 1..={MAX_THREADS}")));
        }
        if blocking != Blocking::None && (kind != Kind::Atomic || style != Style::FullRead) {
            return Err(Error::InvalidConfig("blocking variants exist only for full-read atomic registers".into()));
        }
        Ok(RegisterModel { kind, style, blocking, domain, threads })
    }

    pub fn of_config(cfg: &RegisterConfig, threads: u8) -> Result<RegisterModel, Error> {
        RegisterModel::new(cfg.kind, cfg.style, cfg.blocking, cfg.domain, threads)
    }

    pub fn initial(&self, d: Value) -> RegisterStatus {
        self.canonicalize(&RegisterStatus::initial(d))
    }

    /// Resets fields that cannot influence future behaviour to defaults.
    pub fn canonicalize(&self, s: &RegisterStatus) -> RegisterStatus {
        let mut c = RegisterStatus::initial(0);
        c.stor = s.stor;
        c.rds = s.rds;
        c.wrts = s.wrts;
        match self.kind {
            Kind::Safe => {
                c.ovrl = s.ovrl & (s.rds | s.wrts);
            }
            Kind::Regular => {
                c.pend = s.pend & s.wrts;
            }
            Kind::Atomic => {
                c.pend = s.pend & (s.rds | s.wrts);
            }
        }
        for t in 0..self.threads {
            let i = t as usize;
            let keep_rec = match self.kind {
                Kind::Safe | Kind::Regular => s.in_wrts(t),
                Kind::Atomic => (s.in_wrts(t) && s.in_pend(t)) || (s.in_rds(t) && !s.in_pend(t)),
            };
            if keep_rec {
                c.rec[i] = s.rec[i];
            }
            if self.kind == Kind::Regular && self.style == Style::FullRead && s.in_rds(t) {
                c.posv[i] = s.posv[i];
            }
        }
        c
    }

    /// Upper bound on the number of canonical statuses.
    pub fn status_bound(&self) -> u64 {
        let d = self.domain as u64;
        let per_thread = match (self.style, self.kind) {
            (Style::InstantRead, Kind::Safe | Kind::Regular) => 1 + 2 * d,
            (Style::InstantRead, Kind::Atomic) => 2 + d,
            (Style::FullRead, Kind::Safe) => 3 + 2 * d,
            (Style::FullRead, Kind::Regular) => 1 + (1u64 << d) + 2 * d,
            (Style::FullRead, Kind::Atomic) => 3 + 2 * d,
        };
        d.saturating_mul(per_thread.saturating_pow(self.threads as u32))
    }

    fn may_start_read(&self, s: &RegisterStatus, t: ThreadId) -> bool {
        let idle = !s.in_rds(t) && !s.in_wrts(t);
        idle && match self.blocking {
            Blocking::None => true,
            Blocking::BlockAll => s.rds | s.wrts == 0,
            Blocking::BlockWritesAndReadsOfWrites | Blocking::BlockWritesOnly => s.wrts == 0,
        }
    }

    fn may_start_write(&self, s: &RegisterStatus, t: ThreadId) -> bool {
        let idle = !s.in_rds(t) && !s.in_wrts(t);
        idle && match self.blocking {
            Blocking::None => true,
            Blocking::BlockAll | Blocking::BlockWritesAndReadsOfWrites => s.rds | s.wrts == 0,
            Blocking::BlockWritesOnly => s.wrts == 0,
        }
    }

    /// Enabled transitions from `s`, labelled for register `reg`, with raw
    /// (non-canonical) targets. Order: threads ascending, then summands in
    /// process order, then values ascending.
    pub fn step_raw(&self, reg: RegId, s: &RegisterStatus, out: &mut Vec<(Action, RegisterStatus)>) {
        let full = self.style == Style::FullRead;
        for t in 0..self.threads {
            let ti = t as usize;
            match self.style {
                Style::FullRead => {
                    if self.may_start_read(s, t) {
                        out.push((Action::start_read(t, reg), s.usr(t)));
                    }
                    if s.in_rds(t) {
                        match self.kind {
                            Kind::Safe => {
                                if s.ovrl(t) {
                                    for d in 0..self.domain {
                                        out.push((Action::finish_read(t, reg, d), s.ufr(t)));
                                    }
                                } else {
                                    out.push((Action::finish_read(t, reg, s.stor), s.ufr(t)));
                                }
                            }
                            Kind::Regular => {
                                for d in 0..self.domain {
                                    if s.posv[ti] & (1 << d) != 0 {
                                        out.push((Action::finish_read(t, reg, d), s.ufr(t)));
                                    }
                                }
                            }
                            Kind::Atomic => {
                                if s.in_pend(t) {
                                    out.push((Action::order_read(t, reg), s.uor(t)));
                                } else {
                                    out.push((Action::finish_read(t, reg, s.rec[ti]), s.ufr(t)));
                                }
                            }
                        }
                    }
                }
                Style::InstantRead => {
                    if !s.in_wrts(t) {
                        match self.kind {
                            Kind::Safe => {
                                if s.wrts == 0 {
                                    out.push((Action::instant_read(t, reg, s.stor), s.urd(t)));
                                } else {
                                    for d in 0..self.domain {
                                        out.push((Action::instant_read(t, reg, d), s.urd(t)));
                                    }
                                }
                            }
                            Kind::Regular => {
                                let vals = (1u16 << s.stor) | s.writer_values();
                                for d in 0..self.domain {
                                    if vals & (1 << d) != 0 {
                                        out.push((Action::instant_read(t, reg, d), s.urd(t)));
                                    }
                                }
                            }
                            Kind::Atomic => {
                                out.push((Action::instant_read(t, reg, s.stor), s.urd(t)));
                            }
                        }
                    }
                }
            }
            if self.may_start_write(s, t) {
                for d in 0..self.domain {
                    out.push((Action::start_write(t, reg, d), s.usw(t, d, full)));
                }
            }
            if s.in_wrts(t) {
                match self.kind {
                    Kind::Safe => {
                        if s.ovrl(t) {
                            for d in 0..self.domain {
                                out.push((Action::finish_write(t, reg), s.ufw(t, d)));
                            }
                        } else {
                            out.push((Action::finish_write(t, reg), s.ufw(t, s.rec[ti])));
                        }
                    }
                    Kind::Regular | Kind::Atomic => {
                        if s.in_pend(t) {
                            out.push((Action::order_write(t, reg), s.uow(t, s.rec[ti])));
                        } else {
                            out.push((Action::finish_write(t, reg), s.ufw(t, s.stor)));
                        }
                    }
                }
            }
        }
    }

    /// Enabled transitions with canonical, de-duplicated targets.
    pub fn step(&self, reg: RegId, s: &RegisterStatus, out: &mut Vec<(Action, RegisterStatus)>) {
        let start = out.len();
        self.step_raw(reg, s, out);
        for e in &mut out[start..] {
            e.1 = self.canonicalize(&e.1);
        }
        let mut i = start + 1;
        while i < out.len() {
            if out[start..i].contains(&out[i]) {
                out.remove(i);
            } else {
                i += 1;
            }
        }
    }

    /// Congruence used by the swap property: equality on the fields the
    /// process can observe for this kind.
    pub fn congruent(&self, a: &RegisterStatus, b: &RegisterStatus) -> bool {
        if a.stor != b.stor || a.rds != b.rds || a.wrts != b.wrts {
            return false;
        }
        let n = self.threads as usize;
        if a.rec[..n] != b.rec[..n] {
            return false;
        }
        match self.kind {
            Kind::Safe => a.ovrl == b.ovrl,
            Kind::Regular => a.pend == b.pend && a.posv[..n] == b.posv[..n],
            Kind::Atomic => a.pend == b.pend,
        }
    }
}

impl RegisterConfig {
    /// Applies the update function belonging to `a`.
    ///
    /// `payload` is the data argument of `usw`, `ufw` and `uow` and must be
    /// absent for the others. For `sw` it must equal the written value.
    pub fn apply_update(&self, s: &RegisterStatus, a: &Action, payload: Option<Value>) -> Result<RegisterStatus, Error> {
        if a.reg() != Some(self.id) {
            return Err(Error::InvalidInput(format!("action {a} is not an action of register r{}", self.id)));
        }
        if a.thread as usize >= MAX_THREADS {
            return Err(Error::InvalidInput(format!("thread {} out of range", a.thread)));
        }
        let needs = matches!(a.kind, ActionKind::StartWrite | ActionKind::FinishWrite | ActionKind::OrderWrite);
        if needs != payload.is_some() {
            return Err(Error::InvalidInput(format!("payload mismatch for {a}")));
        }
        if let Some(d) = payload {
            if d >= self.domain {
                return Err(Error::InvalidInput(format!("value {d} outside domain")));
            }
        }
        let t = a.thread;
        Ok(match a.kind {
            ActionKind::StartRead => s.usr(t),
            ActionKind::FinishRead => s.ufr(t),
            ActionKind::InstantRead => s.urd(t),
            ActionKind::OrderRead => s.uor(t),
            ActionKind::StartWrite => {
                if payload != Some(a.value) {
                    return Err(Error::InvalidInput(format!("payload mismatch for {a}")));
                }
                s.usw(t, a.value, self.style == Style::FullRead)
            }
            ActionKind::FinishWrite => s.ufw(t, payload.unwrap_or(0)),
            ActionKind::OrderWrite => s.uow(t, payload.unwrap_or(0)),
            _ => unreachable!("has_register checked above"),
        })
    }
}

/// All actions a register process can ever perform, for its alphabet.
pub fn register_alphabet(m: &RegisterModel, reg: RegId) -> BTreeSet<Action> {
    let mut s = BTreeSet::new();
    for t in 0..m.threads {
        match m.style {
            Style::FullRead => {
                s.insert(Action::start_read(t, reg));
                for d in 0..m.domain {
                    s.insert(Action::finish_read(t, reg, d));
                }
                if m.kind == Kind::Atomic {
                    s.insert(Action::order_read(t, reg));
                }
            }
            Style::InstantRead => {
                for d in 0..m.domain {
                    s.insert(Action::instant_read(t, reg, d));
                }
            }
        }
        for d in 0..m.domain {
            s.insert(Action::start_write(t, reg, d));
        }
        if m.kind != Kind::Safe {
            s.insert(Action::order_write(t, reg));
        }
        s.insert(Action::finish_write(t, reg));
    }
    s
}

/// The reachable register process as an explicit LTS, with the status of
/// every state.
pub fn register_lts(cfg: &RegisterConfig, threads: u8) -> Result<(Lts, Vec<RegisterStatus>), Error> {
    let m = RegisterModel::of_config(cfg, threads)?;
    let d = match cfg.init {
        Init::Value(d) if d < cfg.domain => d,
        Init::Value(d) => return Err(Error::InvalidConfig(format!("initial value {d} outside domain"))),
        Init::Any => return Err(Error::InvalidConfig("initial value must be resolved before building".into())),
    };
    let init = m.initial(d);
    let mut statuses = vec![init];
    let mut index = HashMap::from([(init, 0u32)]);
    let mut lts = Lts::new(register_alphabet(&m, cfg.id));
    let mut buf = Vec::new();
    let mut i = 0;
    while i < statuses.len() {
        buf.clear();
        m.step(cfg.id, &statuses[i], &mut buf);
        for &(a, t) in &buf {
            let id = match index.get(&t) {
                Some(&id) => id,
                None => {
                    let id = lts.add_state();
                    statuses.push(t);
                    index.insert(t, id);
                    id
                }
            };
            lts.add_transition(i as u32, a, id);
        }
        i += 1;
    }
    Ok((lts, statuses))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: Kind, style: Style, domain: u8) -> RegisterConfig {
        RegisterConfig { id: 0, domain, init: Init::Value(0), kind, style, blocking: Blocking::None }
    }

    #[test]
    fn usw_sets_overlap_flags() {
        let s = RegisterStatus::initial(0);
        let s1 = s.usw(0, 1, true);
        assert!(s1.in_wrts(0) && s1.in_pend(0) && s1.rec[0] == 1);
        assert!(!s1.ovrl(0));
        assert!((1..MAX_THREADS as u8).all(|u| s1.ovrl(u)));
        let s2 = s1.usw(1, 0, true);
        assert!(s2.ovrl(1) && s2.ovrl(0));
    }

    #[test]
    fn urd_and_uor() {
        let mut s = RegisterStatus::initial(2);
        s = s.usw(1, 1, false);
        assert_eq!(s.urd(0), s);
        let r = s.usr(0).uor(0);
        assert!(!r.in_pend(0));
        assert_eq!(r.rec[0], 2);
    }

    #[test]
    fn payload_checks() {
        let c = cfg(Kind::Safe, Style::FullRead, 2);
        let s = RegisterStatus::initial(0);
        assert!(c.apply_update(&s, &Action::start_read(0, 0), Some(1)).is_err());
        assert!(c.apply_update(&s, &Action::start_read(0, 1), None).is_err());
        assert!(c.apply_update(&s, &Action::finish_write(0, 0), None).is_err());
        assert!(c.apply_update(&s, &Action::start_write(0, 0, 1), Some(1)).is_ok());
    }

    #[test]
    fn blocking_only_for_full_atomic() {
        assert!(RegisterModel::new(Kind::Regular, Style::FullRead, Blocking::BlockAll, 2, 2).is_err());
        assert!(RegisterModel::new(Kind::Atomic, Style::InstantRead, Blocking::BlockAll, 2, 2).is_err());
        assert!(RegisterModel::new(Kind::Atomic, Style::FullRead, Blocking::BlockAll, 2, 2).is_ok());
    }

    #[test]
    fn fresh_instant_atomic_enables_reads_of_init_and_all_writes() {
        let (lts, _) = register_lts(&cfg(Kind::Atomic, Style::InstantRead, 2), 2).unwrap();
        let en = lts.enabled(0).unwrap();
        let mut want = BTreeSet::new();
        for t in 0..2 {
            want.insert(Action::instant_read(t, 0, 0));
            for d in 0..2 {
                want.insert(Action::start_write(t, 0, d));
            }
        }
        assert_eq!(en, want);
    }

    #[test]
    fn instant_safe_read_during_write_is_arbitrary() {
        let m = RegisterModel::new(Kind::Safe, Style::InstantRead, Blocking::None, 3, 2).unwrap();
        let s = m.canonicalize(&RegisterStatus::initial(0).usw(0, 1, false));
        let mut out = Vec::new();
        m.step(0, &s, &mut out);
        let reads: Vec<_> = out.iter().filter(|(a, _)| a.thread == 1 && a.kind == ActionKind::InstantRead).map(|(a, _)| a.value).collect();
        assert_eq!(reads, vec![0, 1, 2]);
    }

    #[test]
    fn bounds_cover_reachable_statuses() {
        for kind in [Kind::Safe, Kind::Regular, Kind::Atomic] {
            for style in [Style::FullRead, Style::InstantRead] {
                for threads in 1..=3u8 {
                    for domain in 1..=3u8 {
                        let (lts, _) = register_lts(&cfg(kind, style, domain), threads).unwrap();
                        let m = RegisterModel::new(kind, style, Blocking::None, domain, threads).unwrap();
                        assert!(lts.num_states() as u64 <= m.status_bound(), "{kind:?} {style:?} {threads} {domain}");
                    }
                }
            }
        }
    }
}
