//! Counterexample rendering, structured export and replay.
//!
//! Replay re-executes a counterexample against a freshly built model. The
//! structured form stores actions and register values only, so importing it
//! searches the model for a concrete path with the recorded labels.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{Action, ActionKind, ThreadId, Value};
use crate::check::{CexKind, Counterexample, Property, Step};
use crate::justness::{blockable, justness_closed, ConcurrencySpec};
use crate::lts::TransitionSystem;
use crate::model::{crit_enabled, kind_name, CompositeModel, MemoryModel};
use crate::registers::{Blocking, Style};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("initial state does not match the model for assignment {0:?}")]
    Initial(Vec<Value>),
    #[error("step {step}: `{action}` is not enabled")]
    NotEnabled { step: usize, action: String },
    #[error("trace does not end in a state enabling two crit actions")]
    NoCollision,
    #[error("cycle does not return to its first state")]
    OpenCycle,
    #[error("cycle is empty")]
    EmptyCycle,
    #[error("no pending trigger followed only by allowed actions")]
    NoTrigger,
    #[error("cycle is not closed under justness for {0}")]
    NotJust(ConcurrencySpec),
    #[error("final state enables a non-blockable action")]
    Incomplete,
    #[error("document does not match the model: {0}")]
    Mismatch(String),
}

pub fn style_name(s: Style) -> &'static str {
    match s {
        Style::InstantRead => "instant",
        Style::FullRead => "full",
    }
}

pub fn parse_style(s: &str) -> Result<Style, String> {
    match s {
        "instant" => Ok(Style::InstantRead),
        "full" => Ok(Style::FullRead),
        _ => Err(format!("unknown read style `{s}` (expected instant or full)")),
    }
}

pub fn blocking_name(b: Blocking) -> &'static str {
    match b {
        Blocking::None => "none",
        Blocking::BlockAll => "all",
        Blocking::BlockWritesAndReadsOfWrites => "writes-reads",
        Blocking::BlockWritesOnly => "writes",
    }
}

pub fn parse_blocking(s: &str) -> Result<Blocking, String> {
    match s {
        "none" => Ok(Blocking::None),
        "all" => Ok(Blocking::BlockAll),
        "writes-reads" => Ok(Blocking::BlockWritesAndReadsOfWrites),
        "writes" => Ok(Blocking::BlockWritesOnly),
        _ => Err(format!("unknown blocking variant `{s}` (expected none, all, writes-reads or writes)")),
    }
}

/// One line of narration for `a`.
pub fn describe(a: &Action, names: &[String]) -> String {
    let t = a.thread;
    let reg = || names.get(a.register as usize).cloned().unwrap_or_else(|| format!("r{}", a.register));
    match a.kind {
        ActionKind::StartWrite => format!("t{t}: write {}:={} (start)", reg(), a.value),
        ActionKind::OrderWrite => format!("t{t}: write {} (takes effect)", reg()),
        ActionKind::FinishWrite => format!("t{t}: write {} (finish)", reg()),
        ActionKind::InstantRead => format!("t{t}: read {} = {}", reg(), a.value),
        ActionKind::StartRead => format!("t{t}: read {} (start)", reg()),
        ActionKind::OrderRead => format!("t{t}: read {} (takes effect)", reg()),
        ActionKind::FinishRead => format!("t{t}: read {} = {} (finish)", reg(), a.value),
        ActionKind::Crit => format!("t{t}: crit"),
        ActionKind::NonCrit => format!("t{t}: noncrit"),
        ActionKind::LocalStep => format!("t{t}: silent loop (line {})", a.tag),
    }
}

/// Register snapshot: stored values, with the writers of registers under
/// an unfinished write in brackets.
pub fn snapshot(m: &CompositeModel, s: &[u32], names: &[String]) -> String {
    let mut out = String::new();
    for (r, name) in names.iter().enumerate() {
        let st = m.status(s, r as u16);
        if !out.is_empty() {
            out.push(' ');
        }
        let _ = write!(out, "{name}={}", st.stor);
        if st.wrts != 0 {
            let ws: Vec<String> = (0..m.num_threads()).filter(|&t| st.wrts & (1 << t) != 0).map(|t| format!("t{t}")).collect();
            let _ = write!(out, "[w {}]", ws.join(","));
        }
    }
    out
}

/// Human-readable trace with numbered steps and register snapshots.
pub fn render_human(m: &CompositeModel, cex: &Counterexample) -> String {
    let names = m.register_names();
    let mut out = String::new();
    let head = match (cex.property, cex.thread) {
        (Property::StarvationFreedom, Some(t)) => format!("{} violated: thread {t} starves", cex.property.long()),
        (p, _) => format!("{} violated", p.long()),
    };
    let _ = writeln!(out, "{head}");
    let init: Vec<String> = names.iter().zip(&cex.assignment).map(|(n, v)| format!("{n}={v}")).collect();
    let _ = writeln!(out, "initial values: {}", init.join(" "));
    let rows: Vec<(String, String)> = cex.steps.iter().map(|s| (describe(&s.action, &names), snapshot(m, &s.state, &names))).collect();
    let width = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0);
    for (i, (text, snap)) in rows.iter().enumerate() {
        if cex.cycle_start == Some(i) {
            let _ = writeln!(out, "  cycle:");
        }
        let _ = writeln!(out, "{:>4}. {text:<width$}   {snap}", i + 1);
    }
    match cex.kind {
        CexKind::SafetyTrace => {
            let last = cex.steps.last().map_or(&cex.initial, |s| &s.state);
            let crits: Vec<String> = crit_enabled(m, last).iter().map(|t| format!("crit_{t}")).collect();
            let _ = writeln!(out, "both {} enabled", crits.join(" and "));
        }
        CexKind::LivenessLasso => {
            let _ = writeln!(out, "— cycle repeats —");
        }
        CexKind::LivenessPath => {
            let _ = writeln!(out, "no further non-blockable action is enabled");
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepDoc {
    pub action: String,
    pub thread: ThreadId,
    pub register: Option<String>,
    pub value: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<u16>,
    /// Phase of the acting thread after the step.
    pub phase: String,
    /// Stored register values after the step.
    pub values: Vec<Value>,
}

/// Stable structured form of a counterexample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDoc {
    pub kind: CexKind,
    pub property: Property,
    pub algorithm: String,
    pub threads: usize,
    pub registers: String,
    pub concurrency: ConcurrencySpec,
    pub style: String,
    pub blocking: String,
    pub starving_thread: Option<ThreadId>,
    pub register_names: Vec<String>,
    pub init: Vec<Value>,
    pub steps: Vec<StepDoc>,
    pub cycle_start_index: Option<usize>,
}

pub fn phase_name(m: &CompositeModel, s: &[u32], t: ThreadId) -> &'static str {
    use crate::lang::Phase;
    match m.phase(s, t) {
        Phase::NonCritical => "noncritical",
        Phase::Entry => "entry",
        Phase::Critical => "critical",
        Phase::Exit => "exit",
    }
}

pub fn to_doc(m: &CompositeModel, c: ConcurrencySpec, cex: &Counterexample) -> TraceDoc {
    let names = m.register_names();
    TraceDoc {
        kind: cex.kind,
        property: cex.property,
        algorithm: m.name.clone(),
        threads: m.num_threads(),
        registers: kind_name(m.options.kind).to_string(),
        concurrency: c,
        style: style_name(m.options.style).to_string(),
        blocking: blocking_name(m.options.blocking).to_string(),
        starving_thread: cex.thread,
        register_names: names.clone(),
        init: cex.assignment.clone(),
        steps: cex
            .steps
            .iter()
            .map(|s| StepDoc {
                action: s.action.kind.mnemonic().to_string(),
                thread: s.action.thread,
                register: s.action.reg().map(|r| names[r as usize].clone()),
                value: s.action.val(),
                tag: (s.action.kind == ActionKind::LocalStep).then_some(s.action.tag),
                phase: phase_name(m, &s.state, s.action.thread).to_string(),
                values: m.values(&s.state),
            })
            .collect(),
        cycle_start_index: cex.cycle_start,
    }
}

impl TraceDoc {
    pub fn memory(&self) -> Result<MemoryModel, String> {
        format!("{}/{}", self.registers, self.concurrency).parse()
    }

    fn actions(&self, m: &CompositeModel) -> Result<Vec<Action>, ReplayError> {
        let names = m.register_names();
        if names != self.register_names {
            return Err(ReplayError::Mismatch("register names differ".into()));
        }
        self.steps
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let bad = || ReplayError::Mismatch(format!("step {}: malformed action", i + 1));
                let kind = ActionKind::from_mnemonic(&s.action).ok_or_else(bad)?;
                let reg = match &s.register {
                    Some(n) => names.iter().position(|x| x == n).ok_or_else(bad)? as u16,
                    None => 0,
                };
                if kind.has_register() != s.register.is_some() || kind.has_value() != s.value.is_some() {
                    return Err(bad());
                }
                Ok(Action { kind, thread: s.thread, register: reg, value: s.value.unwrap_or(0), tag: s.tag.unwrap_or(0) })
            })
            .collect()
    }

    /// Finds a concrete path of `m` with the recorded labels and register
    /// values, closing the cycle if there is one.
    pub fn reconstruct(&self, m: &CompositeModel) -> Result<Counterexample, ReplayError> {
        let actions = self.actions(m)?;
        let idx = m.assignments.iter().position(|a| *a == self.init).ok_or_else(|| ReplayError::Initial(self.init.clone()))?;
        let init = m.initial_states().swap_remove(idx);
        let states = search(m, &init, &actions, |i, s| m.values(s) == self.steps[i].values, self.cycle_start_index)?;
        Ok(Counterexample {
            property: self.property,
            kind: self.kind,
            thread: self.starving_thread,
            assignment: self.init.clone(),
            initial: init,
            steps: actions.into_iter().zip(states).map(|(action, state)| Step { action, state }).collect(),
            cycle_start: self.cycle_start_index,
        })
    }
}

type Layer = HashMap<Vec<u32>, Vec<u32>>;

fn forward(m: &CompositeModel, from: Vec<Vec<u32>>, actions: &[Action], offset: usize, ok: &dyn Fn(usize, &[u32]) -> bool) -> Result<Vec<Layer>, ReplayError> {
    let mut layers: Vec<Layer> = Vec::new();
    let mut frontier: Vec<Vec<u32>> = from;
    let mut scratch = Vec::new();
    for (i, a) in actions.iter().enumerate() {
        let mut next: Layer = HashMap::new();
        for s in &frontier {
            m.expand(s, &mut scratch, |b, t| {
                if b == *a && ok(offset + i, t) && !next.contains_key(t) {
                    next.insert(t.to_vec(), s.clone());
                }
            });
        }
        if next.is_empty() {
            return Err(ReplayError::NotEnabled { step: offset + i + 1, action: a.display(&m.register_names()).to_string() });
        }
        let mut keys: Vec<Vec<u32>> = next.keys().cloned().collect();
        keys.sort();
        frontier = keys;
        layers.push(next);
    }
    Ok(layers)
}

fn backtrack(layers: &[Layer], mut cur: Vec<u32>) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(layers.len());
    for layer in layers.iter().rev() {
        let prev = layer[&cur].clone();
        out.push(cur);
        cur = prev;
    }
    out.reverse();
    out
}

fn search(m: &CompositeModel, init: &[u32], actions: &[Action], ok: impl Fn(usize, &[u32]) -> bool, cycle_start: Option<usize>) -> Result<Vec<Vec<u32>>, ReplayError> {
    let split = cycle_start.unwrap_or(actions.len());
    let stem = forward(m, vec![init.to_vec()], &actions[..split], 0, &ok)?;
    let mut ends: Vec<Vec<u32>> = stem.last().map_or_else(|| vec![init.to_vec()], |l| l.keys().cloned().collect());
    ends.sort();
    if cycle_start.is_none() {
        let end = ends.into_iter().next().expect("nonempty");
        return Ok(backtrack(&stem, end));
    }
    let cycle = &actions[split..];
    if cycle.is_empty() {
        return Err(ReplayError::EmptyCycle);
    }
    for e in ends {
        if let Ok(layers) = forward(m, vec![e.clone()], cycle, split, &ok) {
            if layers.last().is_some_and(|l| l.contains_key(&e)) {
                let mut states = if stem.is_empty() { Vec::new() } else { backtrack(&stem, e.clone()) };
                states.extend(backtrack(&layers, e));
                return Ok(states);
            }
        }
    }
    Err(ReplayError::OpenCycle)
}

/// Re-executes `cex` on `m` and checks what it claims.
pub fn replay(m: &CompositeModel, c: ConcurrencySpec, cex: &Counterexample) -> Result<(), ReplayError> {
    let idx = m.assignments.iter().position(|a| *a == cex.assignment).ok_or_else(|| ReplayError::Initial(cex.assignment.clone()))?;
    if m.initial_states()[idx] != cex.initial {
        return Err(ReplayError::Initial(cex.assignment.clone()));
    }
    let mut buf = Vec::new();
    for (i, step) in cex.steps.iter().enumerate() {
        buf.clear();
        m.successors(&cex.state_before(i).to_vec(), &mut buf);
        if !buf.iter().any(|(a, t)| *a == step.action && *t == step.state) {
            return Err(ReplayError::NotEnabled { step: i + 1, action: step.action.display(&m.register_names()).to_string() });
        }
    }
    let last = cex.steps.last().map_or(&cex.initial, |s| &s.state);
    match cex.kind {
        CexKind::SafetyTrace => {
            if crit_enabled(m, last).len() < 2 {
                return Err(ReplayError::NoCollision);
            }
            return Ok(());
        }
        CexKind::LivenessLasso => {
            let start = cex.cycle_start.ok_or(ReplayError::EmptyCycle)?;
            if start >= cex.steps.len() {
                return Err(ReplayError::EmptyCycle);
            }
            if cex.state_before(start) != last.as_slice() {
                return Err(ReplayError::OpenCycle);
            }
            let states: Vec<Vec<u32>> = cex.cycle().iter().map(|s| s.state.clone()).collect();
            let labels: Vec<Action> = cex.cycle().iter().map(|s| s.action).collect();
            if !justness_closed(m, &states, &labels, c) {
                return Err(ReplayError::NotJust(c));
            }
        }
        CexKind::LivenessPath => {
            buf.clear();
            m.successors(last, &mut buf);
            if buf.iter().any(|(a, _)| !blockable(a)) {
                return Err(ReplayError::Incomplete);
            }
        }
    }
    let forbidden = |a: &Action| a.kind == ActionKind::Crit && cex.thread.is_none_or(|t| a.thread == t);
    let pending = |s: &[u32]| match cex.thread {
        Some(t) => m.pending(s, t),
        None => (0..m.num_threads() as ThreadId).any(|t| m.pending(s, t)),
    };
    if cex.cycle().iter().any(|s| forbidden(&s.action)) {
        return Err(ReplayError::NoTrigger);
    }
    // Latest point after which no forbidden crit occurs.
    let from = cex.steps.iter().rposition(|s| forbidden(&s.action)).map_or(0, |i| i + 1);
    if !(from..=cex.steps.len()).any(|i| pending(cex.state_before(i))) {
        return Err(ReplayError::NoTrigger);
    }
    Ok(())
}

/// Distinct threads acting in the cycle, and registers written by it.
pub fn cycle_summary(cex: &Counterexample) -> (HashSet<ThreadId>, HashSet<u16>) {
    let threads = cex.cycle().iter().map(|s| s.action.thread).collect();
    let writes = cex.cycle().iter().filter(|s| s.action.is_write()).map(|s| s.action.register).collect();
    (threads, writes)
}
