//! Mutual exclusion, deadlock freedom and starvation freedom on an explored
//! state graph, with counterexample extraction.
//!
//! Liveness violations are just paths that avoid `crit` after a trigger.
//! They are found by pruning strongly connected components of the graph
//! without the forbidden `crit` edges until every remaining component
//! interferes with all non-blockable actions enabled inside it.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::action::{Action, ThreadId, Value};
use crate::error::Error;
use crate::explore::{explore, Budget, Deadline, Graph, LabelInfo};
use crate::justness::ConcurrencySpec;
use crate::lang::Program;
use crate::model::{CompositeModel, MemoryModel, ModelOptions};
use crate::registers::{Blocking, Kind, Style};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Property {
    #[serde(rename = "me")]
    MutualExclusion,
    #[serde(rename = "df")]
    DeadlockFreedom,
    #[serde(rename = "sf")]
    StarvationFreedom,
}

impl Property {
    pub fn short(self) -> &'static str {
        match self {
            Property::MutualExclusion => "me",
            Property::DeadlockFreedom => "df",
            Property::StarvationFreedom => "sf",
        }
    }

    pub fn long(self) -> &'static str {
        match self {
            Property::MutualExclusion => "mutual exclusion",
            Property::DeadlockFreedom => "deadlock freedom",
            Property::StarvationFreedom => "starvation freedom",
        }
    }
}

/// Summary letter: `X` no mutual exclusion, `M` only mutual exclusion, `D`
/// also deadlock freedom, `S` also starvation freedom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    X,
    M,
    D,
    S,
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Letter {
    type Err = String;
    fn from_str(s: &str) -> Result<Letter, String> {
        match s {
            "X" => Ok(Letter::X),
            "M" => Ok(Letter::M),
            "D" => Ok(Letter::D),
            "S" => Ok(Letter::S),
            _ => Err(format!("unknown verdict letter `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CexKind {
    /// Ends in a state enabling two `crit` actions.
    SafetyTrace,
    /// Stem followed by a cycle repeated forever.
    LivenessLasso,
    /// Finite complete path: nothing but blockable actions enabled at the end.
    LivenessPath,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub action: Action,
    /// Composite state after the step.
    pub state: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub property: Property,
    pub kind: CexKind,
    /// The starving thread for starvation freedom.
    pub thread: Option<ThreadId>,
    /// Initial register values.
    pub assignment: Vec<Value>,
    pub initial: Vec<u32>,
    pub steps: Vec<Step>,
    /// Index of the first cycle step; the cycle runs to the end of `steps`.
    pub cycle_start: Option<usize>,
}

impl Counterexample {
    pub fn stem(&self) -> &[Step] {
        &self.steps[..self.cycle_start.unwrap_or(self.steps.len())]
    }

    pub fn cycle(&self) -> &[Step] {
        &self.steps[self.cycle_start.unwrap_or(self.steps.len())..]
    }

    /// State before step `i`.
    pub fn state_before(&self, i: usize) -> &[u32] {
        if i == 0 {
            &self.initial
        } else {
            &self.steps[i - 1].state
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Holds,
    Violated(Box<Counterexample>),
    /// Budget exhausted before a decision.
    Inconclusive(String),
    NotChecked,
}

impl Outcome {
    pub fn holds(&self) -> Option<bool> {
        match self {
            Outcome::Holds => Some(true),
            Outcome::Violated(_) => Some(false),
            _ => None,
        }
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            Outcome::Violated(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PropertySet {
    pub me: bool,
    pub df: bool,
    pub sf: bool,
}

impl PropertySet {
    pub const ALL: PropertySet = PropertySet { me: true, df: true, sf: true };

    pub fn only(p: Property) -> PropertySet {
        PropertySet { me: p == Property::MutualExclusion, df: p == Property::DeadlockFreedom, sf: p == Property::StarvationFreedom }
    }
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub memory: MemoryModel,
    pub me: Outcome,
    pub df: Outcome,
    pub sf: Outcome,
    pub states: usize,
    pub transitions: usize,
}

impl Verdict {
    /// The summary letter, if every needed property was decided.
    pub fn letter(&self) -> Option<Letter> {
        match self.me.holds()? {
            false => return Some(Letter::X),
            true => {}
        }
        if !self.df.holds()? {
            return Some(Letter::M);
        }
        Some(if self.sf.holds()? { Letter::S } else { Letter::D })
    }

    /// Starvation freedom implies deadlock freedom.
    pub fn consistent(&self) -> bool {
        !(self.sf.holds() == Some(true) && self.df.holds() == Some(false))
    }

    pub fn outcome(&self, p: Property) -> &Outcome {
        match p {
            Property::MutualExclusion => &self.me,
            Property::DeadlockFreedom => &self.df,
            Property::StarvationFreedom => &self.sf,
        }
    }
}

/// Survivors of the pruning fixpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Survivors {
    /// Component id per state; `NONE` if pruned, `TERMINAL` for states
    /// enabling only blockable actions.
    pub comp: Vec<u32>,
    pub components: u32,
}

impl Survivors {
    pub const NONE: u32 = u32::MAX;
    pub const TERMINAL: u32 = u32::MAX - 1;

    pub fn alive(&self, s: u32) -> bool {
        self.comp[s as usize] != Survivors::NONE
    }
}

/// Registers written and read, and threads acting, on a set of labels.
struct Cover {
    threads: u8,
    writes: Vec<bool>,
    reads: Vec<bool>,
}

impl Cover {
    fn new(regs: usize) -> Cover {
        Cover { threads: 0, writes: vec![false; regs], reads: vec![false; regs] }
    }

    fn add(&mut self, l: &LabelInfo) {
        self.threads |= 1 << l.thread;
        match l.start {
            1 => self.reads[l.register as usize] = true,
            2 => self.writes[l.register as usize] = true,
            _ => {}
        }
    }

    fn covers(&self, c: ConcurrencySpec, a: &LabelInfo) -> bool {
        if self.threads & (1 << a.thread) != 0 {
            return true;
        }
        let r = a.register as usize;
        match a.start {
            1 => (c >= ConcurrencySpec::S && self.writes[r]) || (c == ConcurrencySpec::A && self.reads[r]),
            2 => (c >= ConcurrencySpec::S && self.writes[r]) || (c >= ConcurrencySpec::I && self.reads[r]),
            _ => false,
        }
    }
}

fn num_registers(g: &Graph) -> usize {
    g.actions.iter().filter(|l| l.action.reg().is_some()).map(|l| l.register as usize + 1).max().unwrap_or(0)
}

/// Iterative Tarjan over the states with `sub[s] == id`, using only
/// allowed edges between such states. Returns nontrivial components.
fn sccs(g: &Graph, members: &[u32], sub: &[u32], id: u32, allowed: &dyn Fn(u16) -> bool, scratch: &mut TarjanScratch) -> Vec<Vec<u32>> {
    const UNSEEN: u32 = u32::MAX;
    let mut out = Vec::new();
    let mut counter = 0u32;
    for &m in members {
        scratch.index[m as usize] = UNSEEN;
    }
    for &root in members {
        if scratch.index[root as usize] != UNSEEN {
            continue;
        }
        let mut call: Vec<(u32, usize)> = vec![(root, g.edge_range(root).start)];
        scratch.index[root as usize] = counter;
        scratch.low[root as usize] = counter;
        counter += 1;
        scratch.stack.push(root);
        scratch.on_stack[root as usize] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let end = g.edge_range(v).end;
            let mut descended = false;
            while *pos < end {
                let (l, w) = g.edge(*pos);
                *pos += 1;
                if sub[w as usize] != id || !allowed(l) {
                    continue;
                }
                if scratch.index[w as usize] == UNSEEN {
                    scratch.index[w as usize] = counter;
                    scratch.low[w as usize] = counter;
                    counter += 1;
                    scratch.stack.push(w);
                    scratch.on_stack[w as usize] = true;
                    call.push((w, g.edge_range(w).start));
                    descended = true;
                    break;
                } else if scratch.on_stack[w as usize] {
                    let lw = scratch.index[w as usize];
                    if lw < scratch.low[v as usize] {
                        scratch.low[v as usize] = lw;
                    }
                }
            }
            if descended {
                continue;
            }
            call.pop();
            if let Some(&(p, _)) = call.last() {
                let lv = scratch.low[v as usize];
                if lv < scratch.low[p as usize] {
                    scratch.low[p as usize] = lv;
                }
            }
            if scratch.low[v as usize] == scratch.index[v as usize] {
                let mut comp = Vec::new();
                loop {
                    let w = scratch.stack.pop().expect("tarjan stack");
                    scratch.on_stack[w as usize] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                let nontrivial = comp.len() > 1 || g.edges(v).any(|(l, w)| w == v && allowed(l));
                if nontrivial {
                    out.push(comp);
                }
            }
        }
    }
    out
}

struct TarjanScratch {
    index: Vec<u32>,
    low: Vec<u32>,
    on_stack: Vec<bool>,
    stack: Vec<u32>,
}

/// Pruning fixpoint: states lying on a just cycle avoiding forbidden
/// labels, plus states where only blockable actions are enabled.
///
/// `lifo` selects the order in which pending components are processed;
/// the result does not depend on it.
pub fn liveness_core(g: &Graph, c: ConcurrencySpec, forbidden: &dyn Fn(&LabelInfo) -> bool, deadline: &Deadline, lifo: bool) -> Result<Survivors, Error> {
    let n = g.num_states();
    let regs = num_registers(g);
    let allowed_l: Vec<bool> = g.actions.iter().map(|l| !forbidden(l)).collect();
    let allowed = |l: u16| allowed_l[l as usize];
    let mut comp = vec![Survivors::NONE; n];
    for s in 0..n as u32 {
        if g.edges(s).all(|(l, _)| g.label(l).blockable) {
            comp[s as usize] = Survivors::TERMINAL;
        }
    }
    // Subproblem id per state; 0 means dead.
    let mut sub = vec![1u32; n];
    let mut next_id = 2u32;
    let mut work: VecDeque<(u32, Vec<u32>)> = VecDeque::from([(1, (0..n as u32).collect())]);
    let mut scratch = TarjanScratch { index: vec![0; n], low: vec![0; n], on_stack: vec![false; n], stack: Vec::new() };
    let mut components = 0u32;
    while let Some((id, members)) = if lifo { work.pop_back() } else { work.pop_front() } {
        deadline.check()?;
        let found = sccs(g, &members, &sub, id, &allowed, &mut scratch);
        for &m in &members {
            sub[m as usize] = 0;
        }
        for k in found {
            let kid = next_id;
            next_id += 1;
            for &s in &k {
                sub[s as usize] = kid;
            }
            let mut cover = Cover::new(regs);
            for &s in &k {
                for (l, w) in g.edges(s) {
                    if sub[w as usize] == kid && allowed(l) {
                        cover.add(g.label(l));
                    }
                }
            }
            let failing: Vec<u32> = k
                .iter()
                .copied()
                .filter(|&s| g.edges(s).any(|(l, _)| {
                    let info = g.label(l);
                    !info.blockable && !cover.covers(c, info)
                }))
                .collect();
            if failing.is_empty() {
                for &s in &k {
                    comp[s as usize] = components;
                }
                components += 1;
                continue;
            }
            for &s in &failing {
                sub[s as usize] = 0;
            }
            let rest: Vec<u32> = k.into_iter().filter(|&s| sub[s as usize] == kid).collect();
            if !rest.is_empty() {
                work.push_back((kid, rest));
            }
        }
    }
    Ok(Survivors { comp, components })
}

/// States that reach a survivor using allowed edges.
fn can_reach(g: &Graph, surv: &Survivors, allowed: &dyn Fn(u16) -> bool) -> Vec<bool> {
    let n = g.num_states();
    let mut indeg = vec![0u32; n + 1];
    for s in 0..n as u32 {
        for (l, w) in g.edges(s) {
            if allowed(l) {
                indeg[w as usize + 1] += 1;
            }
        }
    }
    for i in 0..n {
        indeg[i + 1] += indeg[i];
    }
    let mut fill = indeg.clone();
    let mut rev = vec![0u32; indeg[n] as usize];
    for s in 0..n as u32 {
        for (l, w) in g.edges(s) {
            if allowed(l) {
                rev[fill[w as usize] as usize] = s;
                fill[w as usize] += 1;
            }
        }
    }
    let mut seen = vec![false; n];
    let mut queue: Vec<u32> = (0..n as u32).filter(|&s| surv.alive(s)).collect();
    for &s in &queue {
        seen[s as usize] = true;
    }
    while let Some(s) = queue.pop() {
        for &p in &rev[indeg[s as usize] as usize..indeg[s as usize + 1] as usize] {
            if !seen[p as usize] {
                seen[p as usize] = true;
                queue.push(p);
            }
        }
    }
    seen
}

/// Shortest path using allowed edges from `from` to a state satisfying
/// `goal`, staying inside `inside`.
fn bfs(g: &Graph, from: u32, goal: &dyn Fn(u32) -> bool, inside: &dyn Fn(u32) -> bool, allowed: &dyn Fn(u16) -> bool) -> Option<Vec<(u16, u32)>> {
    let mut prev: std::collections::HashMap<u32, (u32, u16)> = std::collections::HashMap::new();
    let mut q = VecDeque::from([from]);
    prev.insert(from, (u32::MAX, 0));
    while let Some(s) = q.pop_front() {
        if goal(s) {
            let mut path = Vec::new();
            let mut cur = s;
            while cur != from {
                let (p, l) = prev[&cur];
                path.push((l, cur));
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for (l, w) in g.edges(s) {
            if allowed(l) && inside(w) && !prev.contains_key(&w) {
                prev.insert(w, (s, l));
                q.push_back(w);
            }
        }
    }
    None
}

/// Cycle through `q` inside its surviving component that takes one edge for
/// every thread, written register and read register occurring on internal edges.
fn covering_cycle(g: &Graph, surv: &Survivors, q: u32, allowed: &dyn Fn(u16) -> bool) -> Vec<(u16, u32)> {
    let k = surv.comp[q as usize];
    let inside = |s: u32| surv.comp[s as usize] == k;
    // Representative edges, found by a search of the component from q.
    let mut reps: Vec<(u32, u16, u32)> = Vec::new();
    let mut keys: std::collections::HashSet<(u8, u16)> = std::collections::HashSet::new();
    let mut seen = std::collections::HashSet::from([q]);
    let mut queue = VecDeque::from([q]);
    while let Some(s) = queue.pop_front() {
        for (l, w) in g.edges(s) {
            if !allowed(l) || !inside(w) {
                continue;
            }
            let info = g.label(l);
            let mut fresh = keys.insert((0, info.thread as u16));
            if info.start != 0 {
                fresh |= keys.insert((info.start, info.register));
            }
            if fresh {
                reps.push((s, l, w));
            }
            if seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    let mut cycle = Vec::new();
    let mut cur = q;
    for (u, l, v) in reps {
        let to_u = bfs(g, cur, &|s| s == u, &inside, allowed).expect("strongly connected");
        cycle.extend(to_u);
        cycle.push((l, v));
        cur = v;
    }
    if cur != q || cycle.is_empty() {
        let back = bfs(g, cur, &|s| s == q, &inside, allowed).expect("strongly connected");
        cycle.extend(back);
    }
    cycle
}

fn to_steps(g: &Graph, m: &CompositeModel, path: &[(u16, u32)]) -> Vec<Step> {
    let mut buf = Vec::new();
    path.iter()
        .map(|&(l, s)| {
            g.state(m, s, &mut buf);
            Step { action: g.label(l).action, state: buf.clone() }
        })
        .collect()
}

fn root_info(g: &Graph, m: &CompositeModel, root: u32) -> (Vec<Value>, Vec<u32>) {
    let i = g.roots.iter().position(|&r| r == root).expect("root");
    let mut init = Vec::new();
    g.state(m, root, &mut init);
    (m.assignments[i].clone(), init)
}

/// Mutual exclusion from the exploration result.
pub fn check_mutual_exclusion(g: &Graph, m: &CompositeModel) -> Outcome {
    match g.me_violation {
        None => Outcome::Holds,
        Some(s) => {
            let (root, path) = g.path_to(s);
            let (assignment, initial) = root_info(g, m, root);
            Outcome::Violated(Box::new(Counterexample {
                property: Property::MutualExclusion,
                kind: CexKind::SafetyTrace,
                thread: None,
                assignment,
                initial,
                steps: to_steps(g, m, &path),
                cycle_start: None,
            }))
        }
    }
}

fn liveness(
    g: &Graph,
    m: &CompositeModel,
    c: ConcurrencySpec,
    property: Property,
    thread: Option<ThreadId>,
    deadline: &Deadline,
) -> Result<Option<Counterexample>, Error> {
    let forbidden = |l: &LabelInfo| l.crit && thread.is_none_or(|t| l.thread == t);
    let surv = liveness_core(g, c, &forbidden, deadline, true)?;
    let allowed_l: Vec<bool> = g.actions.iter().map(|l| !forbidden(l)).collect();
    let allowed = |l: u16| allowed_l[l as usize];
    let mask = match thread {
        Some(t) => 1u8 << t,
        None => u8::MAX,
    };
    let reach = can_reach(g, &surv, &allowed);
    // Lowest id means shortest stem.
    let Some(p) = (0..g.num_states() as u32).find(|&s| g.pending[s as usize] & mask != 0 && reach[s as usize]) else {
        return Ok(None);
    };
    let (root, stem) = g.path_to(p);
    let to_surv = bfs(g, p, &|s| surv.alive(s), &|_| true, &allowed).expect("reachable survivor");
    let q = to_surv.last().map_or(p, |&(_, s)| s);
    let (assignment, initial) = root_info(g, m, root);
    let mut steps = to_steps(g, m, &stem);
    steps.extend(to_steps(g, m, &to_surv));
    let (kind, cycle_start) = if surv.comp[q as usize] == Survivors::TERMINAL {
        (CexKind::LivenessPath, None)
    } else {
        let start = steps.len();
        steps.extend(to_steps(g, m, &covering_cycle(g, &surv, q, &allowed)));
        (CexKind::LivenessLasso, Some(start))
    };
    Ok(Some(Counterexample { property, kind, thread, assignment, initial, steps, cycle_start }))
}

pub fn check_deadlock_freedom(g: &Graph, m: &CompositeModel, c: ConcurrencySpec, deadline: &Deadline) -> Result<Outcome, Error> {
    Ok(match liveness(g, m, c, Property::DeadlockFreedom, None, deadline)? {
        None => Outcome::Holds,
        Some(cex) => Outcome::Violated(Box::new(cex)),
    })
}

pub fn check_starvation_freedom(g: &Graph, m: &CompositeModel, c: ConcurrencySpec, deadline: &Deadline) -> Result<Outcome, Error> {
    for t in 0..m.num_threads() as ThreadId {
        if let Some(cex) = liveness(g, m, c, Property::StarvationFreedom, Some(t), deadline)? {
            return Ok(Outcome::Violated(Box::new(cex)));
        }
    }
    Ok(Outcome::Holds)
}

/// Options for a batch of checks sharing one explored graph.
#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub style: Style,
    pub blocking: Blocking,
    pub properties: PropertySet,
    pub budget: Budget,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { style: Style::InstantRead, blocking: Blocking::None, properties: PropertySet::ALL, budget: Budget::default() }
    }
}

fn inconclusive(e: Error) -> Result<Outcome, Error> {
    match e {
        Error::Budget(m) => Ok(Outcome::Inconclusive(m)),
        e => Err(e),
    }
}

/// Checks `p` with `n` threads on registers of `kind`, once per
/// concurrency relation in `cs`, sharing the state graph.
pub fn check_kind(p: &Program, n: usize, kind: Kind, cs: &[ConcurrencySpec], opts: &CheckOptions) -> Result<Vec<Verdict>, Error> {
    let mems: Vec<MemoryModel> = cs.iter().map(|&c| MemoryModel::new(kind, c)).collect::<Result<_, _>>()?;
    let model = CompositeModel::build(p, n, ModelOptions { kind, style: opts.style, blocking: opts.blocking })?;
    check_model(&model, &mems, opts)
}

pub fn check_model(model: &CompositeModel, mems: &[MemoryModel], opts: &CheckOptions) -> Result<Vec<Verdict>, Error> {
    let props = opts.properties;
    let deadline = opts.budget.deadline();
    let liveness_wanted = props.df || props.sf;
    let graph = match explore(model, &opts.budget, !liveness_wanted) {
        Ok(g) => g,
        Err(Error::Budget(msg)) => {
            let inc = |b: bool| if b { Outcome::Inconclusive(msg.clone()) } else { Outcome::NotChecked };
            // A safety violation may still lie within the budget.
            let me = match (props.me && liveness_wanted).then(|| explore(model, &opts.budget, true)) {
                Some(Ok(g)) if g.me_violation.is_some() => check_mutual_exclusion(&g, model),
                _ => inc(props.me),
            };
            return Ok(mems
                .iter()
                .map(|&memory| Verdict { memory, me: me.clone(), df: inc(props.df), sf: inc(props.sf), states: 0, transitions: 0 })
                .collect());
        }
        Err(e) => return Err(e),
    };
    let me = check_mutual_exclusion(&graph, model);
    let mut out = Vec::new();
    for &memory in mems {
        let c = memory.concurrency;
        let df = if !props.df {
            Outcome::NotChecked
        } else {
            check_deadlock_freedom(&graph, model, c, &deadline).or_else(inconclusive)?
        };
        let sf = if !props.sf {
            Outcome::NotChecked
        } else {
            check_starvation_freedom(&graph, model, c, &deadline).or_else(inconclusive)?
        };
        let v = Verdict {
            memory,
            me: if props.me { me.clone() } else { Outcome::NotChecked },
            df,
            sf,
            states: graph.num_states(),
            transitions: graph.num_edges(),
        };
        if !v.consistent() {
            return Err(Error::InvalidInput(format!("internal inconsistency: starvation freedom holds but deadlock freedom fails under {memory}")));
        }
        out.push(v);
    }
    Ok(out)
}

/// Single check under one memory model.
pub fn check(p: &Program, n: usize, memory: MemoryModel, opts: &CheckOptions) -> Result<Verdict, Error> {
    Ok(check_kind(p, n, memory.kind, &[memory.concurrency], opts)?.remove(0))
}

/// All six memory models; the atomic graph is shared by its four relations.
pub fn verdict_row(p: &Program, n: usize, opts: &CheckOptions) -> Result<Vec<Verdict>, Error> {
    let mut row = check_kind(p, n, Kind::Safe, &[ConcurrencySpec::T], opts)?;
    row.extend(check_kind(p, n, Kind::Regular, &[ConcurrencySpec::T], opts)?);
    row.extend(check_kind(p, n, Kind::Atomic, &ConcurrencySpec::ALL, opts)?);
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang;

    fn graph_of(src: &str, n: usize, kind: Kind) -> (CompositeModel, Graph) {
        let p = lang::parse(src).unwrap();
        let m = CompositeModel::build(&p, n, ModelOptions::instant(kind)).unwrap();
        let g = explore(&m, &Budget::default(), false).unwrap();
        (m, g)
    }

    const TRIVIAL: &str = "algorithm trivial\nthreads 1..\nbegin\n critical\nend\n";
    const SPIN: &str = "algorithm spin\nthreads 1\nlocal k = 0\nbegin\n while k == 0 do\n skip\n end\n critical\nend\n";

    #[test]
    fn trivial_violates_only_me() {
        let p = lang::parse(TRIVIAL).unwrap();
        for v in verdict_row(&p, 2, &CheckOptions::default()).unwrap() {
            assert_eq!(v.letter(), Some(Letter::X));
        }
        let single = check(&p, 1, MemoryModel::ALL[0], &CheckOptions::default()).unwrap();
        assert_eq!(single.letter(), Some(Letter::S));
    }

    #[test]
    fn local_self_loop_survives() {
        let (m, g) = graph_of(SPIN, 1, Kind::Atomic);
        let d = Budget::default().deadline();
        let s = liveness_core(&g, ConcurrencySpec::T, &|l| l.crit, &d, true).unwrap();
        assert!(s.components >= 1);
        let o = check_deadlock_freedom(&g, &m, ConcurrencySpec::T, &d).unwrap();
        let cex = o.counterexample().unwrap();
        assert_eq!(cex.kind, CexKind::LivenessLasso);
        assert_eq!(cex.cycle().len(), 1);
    }

    #[test]
    fn pruning_order_irrelevant() {
        let src = "algorithm p\nthreads 2\nregister flag[N]: bool = 0\nregister turn: thread = 0\nbegin\n flag[i] := 1\n turn := 1 - i\n await flag[1 - i] == 0 || turn == i\n critical\n flag[i] := 0\nend\n";
        for kind in [Kind::Safe, Kind::Atomic] {
            let (_, g) = graph_of(src, 2, kind);
            let d = Budget::default().deadline();
            for c in ConcurrencySpec::ALL {
                let a = liveness_core(&g, c, &|l| l.crit, &d, true).unwrap();
                let b = liveness_core(&g, c, &|l| l.crit, &d, false).unwrap();
                let alive = |s: &Survivors| s.comp.iter().map(|&x| x != Survivors::NONE).collect::<Vec<_>>();
                assert_eq!(alive(&a), alive(&b));
            }
        }
    }

    #[test]
    fn letters() {
        let v = |me, df, sf| Verdict { memory: MemoryModel::ALL[0], me, df, sf, states: 0, transitions: 0 };
        let cex = || {
            Outcome::Violated(Box::new(Counterexample {
                property: Property::MutualExclusion,
                kind: CexKind::SafetyTrace,
                thread: None,
                assignment: vec![],
                initial: vec![],
                steps: vec![],
                cycle_start: None,
            }))
        };
        assert_eq!(v(cex(), Outcome::NotChecked, Outcome::NotChecked).letter(), Some(Letter::X));
        assert_eq!(v(Outcome::Holds, cex(), cex()).letter(), Some(Letter::M));
        assert_eq!(v(Outcome::Holds, Outcome::Holds, cex()).letter(), Some(Letter::D));
        assert_eq!(v(Outcome::Holds, Outcome::Holds, Outcome::Holds).letter(), Some(Letter::S));
        assert_eq!(v(Outcome::Holds, Outcome::Inconclusive("t".into()), Outcome::Holds).letter(), None);
        assert!(!v(Outcome::Holds, cex(), Outcome::Holds).consistent());
    }
}
