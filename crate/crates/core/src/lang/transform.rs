//! Conversions between full-read and instant-read threads, and an
//! isomorphism test for deterministic thread LTSs.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::action::{Action, ActionKind};
use crate::error::Error;
use crate::lts::Lts;
use crate::registers::Style;

use super::build::{phases, ThreadLts};

fn invalid(msg: String) -> Error {
    Error::InvalidInput(msg)
}

/// Merges the target of every `sr` into its source and relabels the
/// following `fr(d)` as `r(d)`.
pub fn full_to_instant(t: &ThreadLts) -> Result<ThreadLts, Error> {
    if t.style != Style::FullRead {
        return Err(invalid("full_to_instant expects a full-read thread".into()));
    }
    let lts = &t.lts;
    let n = lts.num_states();
    let mut mid = vec![false; n];
    for s in 0..n {
        for &(a, m) in &lts.succ[s] {
            if a.kind == ActionKind::InstantRead {
                return Err(invalid(format!("state {s}: instant read in a full-read thread")));
            }
            if a.kind == ActionKind::StartRead {
                mid[m as usize] = true;
                let ok = !lts.succ[m as usize].is_empty()
                    && lts.succ[m as usize].iter().all(|(b, _)| b.kind == ActionKind::FinishRead && b.register == a.register && b.thread == a.thread);
                if !ok || m == lts.init {
                    return Err(invalid(format!("state {m}: start read of {} not followed by its finishes only", a.register)));
                }
            }
        }
    }
    for s in 0..n {
        if mid[s] {
            continue;
        }
        for &(a, m) in &lts.succ[s] {
            if mid[m as usize] && a.kind != ActionKind::StartRead {
                return Err(invalid(format!("state {m}: entered by {} although it awaits a read response", a.kind.mnemonic())));
            }
        }
    }
    let mut map = vec![u32::MAX; n];
    let mut keep = Vec::new();
    for s in 0..n {
        if !mid[s] {
            map[s] = keep.len() as u32;
            keep.push(s);
        }
    }
    let mut out = Lts { actions: BTreeSet::new(), init: map[lts.init as usize], succ: vec![Vec::new(); keep.len()] };
    for (new, &s) in keep.iter().enumerate() {
        for &(a, m) in &lts.succ[s] {
            if a.kind == ActionKind::StartRead {
                for &(b, u) in &lts.succ[m as usize] {
                    out.add_transition(new as u32, Action::instant_read(b.thread, b.register, b.value), map[u as usize]);
                }
            } else {
                out.add_transition(new as u32, a, map[m as usize]);
            }
        }
    }
    finish(t, out, keep.iter().map(|&s| t.lines[s]).collect(), Style::InstantRead)
}

/// Inserts a fresh mid-read state per (state, register) pair of instant reads.
pub fn instant_to_full(t: &ThreadLts) -> Result<ThreadLts, Error> {
    if t.style != Style::InstantRead {
        return Err(invalid("instant_to_full expects an instant-read thread".into()));
    }
    let lts = &t.lts;
    let mut out = Lts { actions: BTreeSet::new(), init: lts.init, succ: vec![Vec::new(); lts.num_states()] };
    let mut lines = t.lines.clone();
    for s in 0..lts.num_states() {
        let mut mids: HashMap<(u8, u16), u32> = HashMap::new();
        for &(a, u) in &lts.succ[s] {
            match a.kind {
                ActionKind::StartRead | ActionKind::FinishRead => {
                    return Err(invalid(format!("state {s}: full-read action in an instant-read thread")));
                }
                ActionKind::InstantRead => {
                    let m = match mids.get(&(a.thread, a.register)) {
                        Some(&m) => m,
                        None => {
                            let m = out.add_state();
                            lines.push(t.lines[s]);
                            out.add_transition(s as u32, Action::start_read(a.thread, a.register), m);
                            mids.insert((a.thread, a.register), m);
                            m
                        }
                    };
                    out.add_transition(m, Action::finish_read(a.thread, a.register, a.value), u);
                }
                _ => out.add_transition(s as u32, a, u),
            }
        }
    }
    finish(t, out, lines, Style::FullRead)
}

fn finish(t: &ThreadLts, lts: Lts, lines: Vec<usize>, style: Style) -> Result<ThreadLts, Error> {
    let phase = phases(&lts)?;
    Ok(ThreadLts { thread: t.thread, style, lts, phase, domains: t.domains.clone(), lines })
}

/// Sorted outgoing transitions; `None` if two share an action.
fn det_succ(lts: &Lts, s: u32) -> Option<Vec<(Action, u32)>> {
    let mut v = lts.succ[s as usize].clone();
    v.sort();
    let labels: BTreeSet<Action> = v.iter().map(|(a, _)| *a).collect();
    (labels.len() == v.len()).then_some(v)
}

/// Whether the reachable parts of two deterministic LTSs are isomorphic.
///
/// Fails if either LTS has a state with two transitions carrying the same action.
pub fn isomorphic(a: &Lts, b: &Lts) -> Result<bool, Error> {
    let mut fwd: HashMap<u32, u32> = HashMap::from([(a.init, b.init)]);
    let mut back: HashMap<u32, u32> = HashMap::from([(b.init, a.init)]);
    let mut queue = VecDeque::from([(a.init, b.init)]);
    while let Some((x, y)) = queue.pop_front() {
        let (sx, sy) = match (det_succ(a, x), det_succ(b, y)) {
            (Some(sx), Some(sy)) => (sx, sy),
            _ => return Err(invalid("isomorphism test needs deterministic LTSs".into())),
        };
        if sx.len() != sy.len() {
            return Ok(false);
        }
        for (&(la, tx), &(lb, ty)) in sx.iter().zip(&sy) {
            if la != lb {
                return Ok(false);
            }
            match (fwd.get(&tx), back.get(&ty)) {
                (None, None) => {
                    fwd.insert(tx, ty);
                    back.insert(ty, tx);
                    queue.push_back((tx, ty));
                }
                (Some(&m), Some(&n)) if m == ty && n == tx => {}
                _ => return Ok(false),
            }
        }
    }
    Ok(true)
}
