//! Generation of a thread's LTS from lowered code.
//!
//! Local computation runs silently between visible instructions. A thread
//! state is a program counter, an optional in-flight operation, and the
//! local slots that are still live.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::action::{Action, ActionKind, ThreadId, Value};
use crate::error::Error;
use crate::lts::Lts;
use crate::registers::Style;

use super::lower::{eval, uses, Instr, Ir, Layout, RegRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    NonCritical,
    Entry,
    Critical,
    Exit,
}

impl Phase {
    /// Between leaving the non-critical section and entering the critical one.
    pub fn is_pending(self) -> bool {
        matches!(self, Phase::Entry | Phase::Critical)
    }
}

/// A compiled thread.
#[derive(Clone, Debug)]
pub struct ThreadLts {
    pub thread: ThreadId,
    pub style: Style,
    pub lts: Lts,
    pub phase: Vec<Phase>,
    /// Domain size of every register, indexed by register id.
    pub domains: Vec<u8>,
    /// Source line of the instruction each state is at (0 for synthetic states).
    pub lines: Vec<usize>,
}

impl ThreadLts {
    pub fn enables_crit(&self, s: u32) -> bool {
        self.lts.succ[s as usize].iter().any(|(a, _)| a.kind == ActionKind::Crit)
    }
}

const MID_NONE: u8 = 0;
const MID_READ: u8 = 1;
const MID_WRITE: u8 = 2;
const DIVERGE: u8 = 3;

#[derive(Clone, PartialEq, Eq, Hash)]
struct Key {
    pc: u32,
    mid: u8,
    locals: Box<[i64]>,
}

/// Live-in slot sets per instruction.
fn liveness(ir: &Ir) -> Vec<Vec<bool>> {
    let n = ir.instrs.len();
    let slots = ir.slot_names.len();
    let mut live = vec![vec![false; slots]; n];
    let mut changed = true;
    let mut buf = Vec::new();
    while changed {
        changed = false;
        for pc in (0..n).rev() {
            let succs: Vec<usize> = match &ir.instrs[pc] {
                Instr::Jump(t) => vec![*t as usize],
                Instr::Branch { target, .. } => vec![pc + 1, *target as usize],
                _ => vec![(pc + 1) % n],
            };
            let mut out = vec![false; slots];
            for s in succs {
                for (o, l) in out.iter_mut().zip(&live[s]) {
                    *o |= *l;
                }
            }
            buf.clear();
            match &ir.instrs[pc] {
                Instr::Read { reg, dst } => {
                    out[*dst as usize] = false;
                    if let Some(ix) = &reg.idx {
                        uses(ix, &mut buf);
                    }
                }
                Instr::Write { reg, val } => {
                    if let Some(ix) = &reg.idx {
                        uses(ix, &mut buf);
                    }
                    uses(val, &mut buf);
                }
                Instr::Assign { base, len, idx, val } => {
                    match idx {
                        None => {
                            for k in *base..*base + *len {
                                out[k as usize] = false;
                            }
                        }
                        Some(ix) => uses(ix, &mut buf),
                    }
                    uses(val, &mut buf);
                }
                Instr::Branch { cond, .. } => uses(cond, &mut buf),
                _ => {}
            }
            for &u in &buf {
                out[u as usize] = true;
            }
            if out != live[pc] {
                live[pc] = out;
                changed = true;
            }
        }
    }
    live
}

struct Builder<'a> {
    ir: &'a Ir,
    layout: &'a Layout,
    thread: ThreadId,
    style: Style,
    live: Vec<Vec<bool>>,
    index: HashMap<Key, u32>,
    keys: Vec<Key>,
}

impl<'a> Builder<'a> {
    fn fail(&self, pc: u32, msg: String) -> Error {
        Error::InvalidInput(format!("thread {}, line {}: {msg}", self.thread, self.ir.lines[pc as usize]))
    }

    fn intern(&mut self, k: Key) -> u32 {
        if let Some(&id) = self.index.get(&k) {
            return id;
        }
        let id = self.keys.len() as u32;
        self.index.insert(k.clone(), id);
        self.keys.push(k);
        id
    }

    /// Runs silent instructions from `pc` until a visible one.
    fn settle(&mut self, mut pc: u32, mut locals: Vec<i64>) -> Result<u32, Error> {
        let mut seen: HashSet<(u32, Vec<i64>)> = HashSet::new();
        let mut steps = 0usize;
        loop {
            let ins = &self.ir.instrs[pc as usize];
            if ins.is_visible() {
                for (v, l) in locals.iter_mut().zip(&self.live[pc as usize]) {
                    if !*l {
                        *v = 0;
                    }
                }
                return Ok(self.intern(Key { pc, mid: MID_NONE, locals: locals.into() }));
            }
            steps += 1;
            if steps > 1 << 20 {
                return Err(self.fail(pc, "local computation does not settle".into()));
            }
            // Only start tracking after many steps; most runs are short.
            if steps > 64 && !seen.insert((pc, locals.clone())) {
                return Ok(self.intern(Key { pc, mid: DIVERGE, locals: locals.into() }));
            }
            match ins {
                Instr::Assign { base, len, idx, val } => {
                    let v = eval(val, &locals).map_err(|m| self.fail(pc, m))?;
                    let slot = match idx {
                        None => *base,
                        Some(ix) => {
                            let k = eval(ix, &locals).map_err(|m| self.fail(pc, m))?;
                            if k < 0 || k >= *len as i64 {
                                return Err(self.fail(pc, format!("local index {k} out of range")));
                            }
                            base + k as u32
                        }
                    };
                    locals[slot as usize] = v;
                    pc += 1;
                }
                Instr::Branch { cond, target } => {
                    pc = if eval(cond, &locals).map_err(|m| self.fail(pc, m))? != 0 { *target } else { pc + 1 };
                }
                Instr::Jump(t) => pc = *t,
                _ => unreachable!("visible handled above"),
            }
        }
    }

    fn register(&self, pc: u32, r: &RegRef, locals: &[i64]) -> Result<(u16, u8), Error> {
        let id = match &r.idx {
            None => r.base,
            Some(ix) => {
                let k = eval(ix, locals).map_err(|m| self.fail(pc, m))?;
                if k < 0 || k >= r.len as i64 {
                    return Err(self.fail(pc, format!("register index {k} out of range")));
                }
                r.base + k as u16
            }
        };
        Ok((id, self.layout.registers[id as usize].domain))
    }

    fn successors(&mut self, k: &Key) -> Result<Vec<(Action, u32)>, Error> {
        let t = self.thread;
        let pc = k.pc;
        let mut out = Vec::new();
        if k.mid == DIVERGE {
            let me = self.index[k];
            out.push((Action::local(t, self.ir.lines[pc as usize] as u16), me));
            return Ok(out);
        }
        let locals = k.locals.to_vec();
        match &self.ir.instrs[pc as usize] {
            Instr::NonCrit => out.push((Action::noncrit(t), self.settle(pc + 1, locals)?)),
            Instr::Crit => out.push((Action::crit(t), self.settle(pc + 1, locals)?)),
            Instr::Read { reg, dst } => {
                let (r, dom) = self.register(pc, reg, &locals)?;
                let finish = |b: &mut Self, d: Value, a: Action| -> Result<(Action, u32), Error> {
                    let mut l = locals.clone();
                    l[*dst as usize] = d as i64;
                    Ok((a, b.settle(pc + 1, l)?))
                };
                match (self.style, k.mid) {
                    (Style::InstantRead, _) => {
                        for d in 0..dom {
                            out.push(finish(self, d, Action::instant_read(t, r, d))?);
                        }
                    }
                    (Style::FullRead, MID_NONE) => {
                        let m = self.intern(Key { pc, mid: MID_READ, locals: k.locals.clone() });
                        out.push((Action::start_read(t, r), m));
                    }
                    (Style::FullRead, _) => {
                        for d in 0..dom {
                            out.push(finish(self, d, Action::finish_read(t, r, d))?);
                        }
                    }
                }
            }
            Instr::Write { reg, val } => {
                let (r, dom) = self.register(pc, reg, &locals)?;
                if k.mid == MID_NONE {
                    let v = eval(val, &locals).map_err(|m| self.fail(pc, m))?;
                    if v < 0 || v >= dom as i64 {
                        return Err(self.fail(pc, format!("value {v} written to {} outside domain", self.layout.registers[r as usize].name)));
                    }
                    let m = self.intern(Key { pc, mid: MID_WRITE, locals: k.locals.clone() });
                    out.push((Action::start_write(t, r, v as Value), m));
                } else {
                    out.push((Action::finish_write(t, r), self.settle(pc + 1, locals)?));
                }
            }
            _ => unreachable!("states sit at visible instructions"),
        }
        Ok(out)
    }
}

/// Limit on thread-local states, guarding against unbounded local data.
pub const MAX_THREAD_STATES: usize = 1 << 22;

/// Builds the LTS of thread `thread` from its lowered code.
pub fn build_thread(ir: &Ir, layout: &Layout, thread: ThreadId, style: Style) -> Result<ThreadLts, Error> {
    let mut b = Builder {
        ir,
        layout,
        thread,
        style,
        live: liveness(ir),
        index: HashMap::new(),
        keys: Vec::new(),
    };
    let init = b.settle(0, ir.slot_init.clone())?;
    debug_assert_eq!(init, 0);
    let mut succ = Vec::new();
    let mut i = 0;
    while i < b.keys.len() {
        if i >= MAX_THREAD_STATES {
            return Err(Error::Budget(format!("thread {thread} exceeds {MAX_THREAD_STATES} local states")));
        }
        let k = b.keys[i].clone();
        succ.push(b.successors(&k)?);
        i += 1;
    }
    let lines = b.keys.iter().map(|k| ir.lines[k.pc as usize]).collect();
    let actions: BTreeSet<Action> = succ.iter().flatten().map(|&(a, _)| a).collect();
    let lts = Lts { actions, init: 0, succ };
    let phase = phases(&lts)?;
    let domains = layout.registers.iter().map(|r| r.domain).collect();
    Ok(ThreadLts { thread, style, lts, phase, domains, lines })
}

/// Assigns phases by propagating "pending" from the initial state.
///
/// Fails if a state is reachable both pending and not pending, or if
/// `crit`/`noncrit` do not alternate starting with `noncrit`.
pub fn phases(lts: &Lts) -> Result<Vec<Phase>, Error> {
    let n = lts.num_states();
    let mut pending: Vec<Option<bool>> = vec![None; n];
    pending[lts.init as usize] = Some(false);
    let mut stack = vec![lts.init];
    while let Some(s) = stack.pop() {
        let p = pending[s as usize].expect("visited");
        for &(a, t) in &lts.succ[s as usize] {
            let q = match a.kind {
                ActionKind::NonCrit if p => return Err(Error::InvalidInput(format!("state {s}: noncrit while pending"))),
                ActionKind::Crit if !p => return Err(Error::InvalidInput(format!("state {s}: crit while not pending"))),
                ActionKind::NonCrit => true,
                ActionKind::Crit => false,
                _ => p,
            };
            match pending[t as usize] {
                None => {
                    pending[t as usize] = Some(q);
                    stack.push(t);
                }
                Some(old) if old != q => {
                    return Err(Error::InvalidInput(format!("state {t} reachable both inside and outside the entry protocol")));
                }
                _ => {}
            }
        }
    }
    Ok((0..n)
        .map(|s| {
            let en = |k| lts.succ[s].iter().any(|(a, _)| a.kind == k);
            match pending[s] {
                _ if en(ActionKind::NonCrit) => Phase::NonCritical,
                _ if en(ActionKind::Crit) => Phase::Critical,
                Some(true) => Phase::Entry,
                _ => Phase::Exit,
            }
        })
        .collect())
}
