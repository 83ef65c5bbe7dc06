//! Interval scenarios: which read values can a register return for a fixed
//! timing of operations?
//!
//! Script format, one operation per line (`#` starts a comment):
//!
//! ```text
//! w1 write t0 0 0 1     # name, op, thread, value, begin rank, end rank
//! a  read  t1   2 4     # reads have no value
//! ```
//!
//! Ranks order all invocations and responses; they must be distinct.

use std::collections::{BTreeSet, HashSet};

use crate::action::{Action, ActionKind, ThreadId, Value};
use crate::error::Error;
use crate::registers::{Init, RegisterConfig, RegisterModel, RegisterStatus, Style};

/// Single-writer example: `t0` writes 0 then 2 while `t1` and `t2` read.
/// Reads `c`, `d` and `e` overlap the second write; `c` ends before `d`
/// and `e` begin.
pub const SINGLE_WRITER: &str = "\
w1 write t0 0 0 1
a  read  t1   2 4
b  read  t2   3 5
c  read  t1   6 8
w2 write t0 2 7 13
d  read  t2   9 11
e  read  t1   10 12
";

/// Multi-writer example: writes of 1 and 2 overlap each other; `a` overlaps
/// the first, `c` the second, `b` both, and `d`, `e` follow all writes.
pub const MULTI_WRITER: &str = "\
w1 write t0 0 0 1
w2 write t1 1 2 7
a  read  t2   3 4
b  read  t0   5 9
w3 write t2 2 6 12
c  read  t1   10 11
d  read  t0   13 14
e  read  t2   15 16
";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OpKind {
    Read,
    Write(Value),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operation {
    pub name: String,
    pub thread: ThreadId,
    pub kind: OpKind,
    pub begin: u32,
    pub end: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Script {
    pub ops: Vec<Operation>,
}

/// Reads in script order, and every realizable tuple of their values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioOutcomes {
    pub reads: Vec<String>,
    pub tuples: BTreeSet<Vec<Value>>,
}

impl ScenarioOutcomes {
    /// Values the named read can return across all outcomes.
    pub fn values_of(&self, read: &str) -> BTreeSet<Value> {
        let i = self.reads.iter().position(|r| r == read).expect("unknown read");
        self.tuples.iter().map(|t| t[i]).collect()
    }
}

impl Script {
    pub fn parse(text: &str) -> Result<Script, Error> {
        let mut ops = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |m: &str| Error::InvalidInput(format!("script line {}: {m}", ln + 1));
            let w: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<u32>().map_err(|_| bad(&format!("expected a number, got `{s}`")));
            let thread = w
                .get(2)
                .and_then(|s| s.strip_prefix('t'))
                .and_then(|s| s.parse::<u8>().ok())
                .ok_or_else(|| bad("expected thread as t<k>"))?;
            let (kind, rest) = match w.get(1).copied() {
                Some("read") => (OpKind::Read, &w[3..]),
                Some("write") => {
                    let v = w.get(3).ok_or_else(|| bad("missing write value"))?;
                    (OpKind::Write(num(v)? as Value), &w[4..])
                }
                _ => return Err(bad("expected `read` or `write`")),
            };
            if rest.len() != 2 {
                return Err(bad("expected begin and end ranks"));
            }
            ops.push(Operation { name: w[0].to_string(), thread, kind, begin: num(rest[0])?, end: num(rest[1])? });
        }
        Ok(Script { ops })
    }

    fn validate(&self, cfg: &RegisterConfig, threads: u8) -> Result<(), Error> {
        let mut ranks = HashSet::new();
        for op in &self.ops {
            if op.begin >= op.end {
                return Err(Error::InvalidInput(format!("{}: begin must precede end", op.name)));
            }
            if op.thread >= threads {
                return Err(Error::InvalidInput(format!("{}: thread out of range", op.name)));
            }
            if let OpKind::Write(v) = op.kind {
                if v >= cfg.domain {
                    return Err(Error::InvalidInput(format!("{}: value outside domain", op.name)));
                }
            }
            if !ranks.insert(op.begin) || !ranks.insert(op.end) {
                return Err(Error::InvalidInput(format!("{}: duplicate rank", op.name)));
            }
        }
        for a in &self.ops {
            for b in &self.ops {
                if a.name != b.name && a.thread == b.thread && a.begin < b.end && b.begin < a.end {
                    return Err(Error::InvalidInput(format!("{} and {} overlap on one thread", a.name, b.name)));
                }
            }
        }
        Ok(())
    }
}

const UNSET: Value = Value::MAX;

#[derive(Clone, PartialEq, Eq, Hash)]
struct Config {
    status: RegisterStatus,
    /// Value per operation index; reads only.
    got: Vec<Value>,
}

/// Enumerates the read outcomes of `script` on the register `cfg`.
///
/// Register-local steps (ordering points) and, in instant-read style, the
/// reads themselves may happen anywhere inside their interval.
pub fn enumerate_scenario_outcomes(cfg: &RegisterConfig, threads: u8, script: &Script) -> Result<ScenarioOutcomes, Error> {
    script.validate(cfg, threads)?;
    let m = RegisterModel::of_config(cfg, threads)?;
    let init = match cfg.init {
        Init::Value(d) => d,
        Init::Any => return Err(Error::InvalidConfig("scenario needs a concrete initial value".into())),
    };
    let reg = cfg.id;
    let ops = &script.ops;
    let mut events: Vec<(u32, usize, bool)> = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        events.push((op.begin, i, true));
        events.push((op.end, i, false));
    }
    events.sort();

    let mut active = vec![false; ops.len()];
    let mut configs: HashSet<Config> = HashSet::from([Config { status: m.initial(init), got: vec![UNSET; ops.len()] }]);
    let mut buf = Vec::new();
    for &(_, i, is_begin) in &events {
        configs = silent_closure(&m, reg, ops, &active, configs, &mut buf);
        let op = &ops[i];
        let t = op.thread;
        let mut next = HashSet::new();
        for c in &configs {
            buf.clear();
            m.step(reg, &c.status, &mut buf);
            for &(a, s) in &buf {
                if a.thread != t {
                    continue;
                }
                let mut got = c.got.clone();
                let ok = match (is_begin, &op.kind, a.kind) {
                    (true, OpKind::Read, ActionKind::StartRead) => true,
                    (true, OpKind::Read, ActionKind::InstantRead) => {
                        // Started now; the read itself is a silent step later.
                        next.insert(c.clone());
                        false
                    }
                    (true, OpKind::Write(v), ActionKind::StartWrite) => a.value == *v,
                    (false, OpKind::Read, ActionKind::FinishRead) => {
                        got[i] = a.value;
                        true
                    }
                    (false, OpKind::Write(_), ActionKind::FinishWrite) => true,
                    _ => false,
                };
                if ok {
                    next.insert(Config { status: s, got });
                }
            }
            if !is_begin && m.style == Style::InstantRead && op.kind == OpKind::Read && c.got[i] != UNSET {
                next.insert(c.clone());
            }
        }
        active[i] = is_begin;
        configs = next;
    }
    let read_idx: Vec<usize> = (0..ops.len()).filter(|&i| ops[i].kind == OpKind::Read).collect();
    let tuples = configs.iter().map(|c| read_idx.iter().map(|&i| c.got[i]).collect()).collect();
    Ok(ScenarioOutcomes { reads: read_idx.iter().map(|&i| ops[i].name.clone()).collect(), tuples })
}

fn silent_closure(
    m: &RegisterModel,
    reg: u16,
    ops: &[Operation],
    active: &[bool],
    start: HashSet<Config>,
    buf: &mut Vec<(Action, RegisterStatus)>,
) -> HashSet<Config> {
    let mut seen = start.clone();
    let mut work: Vec<Config> = start.into_iter().collect();
    while let Some(c) = work.pop() {
        buf.clear();
        m.step(reg, &c.status, buf);
        for &(a, s) in buf.iter() {
            let mut got = c.got.clone();
            let ok = match a.kind {
                ActionKind::OrderRead | ActionKind::OrderWrite => true,
                ActionKind::InstantRead => {
                    match (0..ops.len()).find(|&i| active[i] && ops[i].thread == a.thread && ops[i].kind == OpKind::Read) {
                        Some(i) if got[i] == UNSET => {
                            got[i] = a.value;
                            true
                        }
                        _ => false,
                    }
                }
                _ => false,
            };
            if ok {
                let n = Config { status: s, got };
                if seen.insert(n.clone()) {
                    work.push(n);
                }
            }
        }
    }
    seen
}
