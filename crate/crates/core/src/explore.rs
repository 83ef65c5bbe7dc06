//! Breadth-first construction of the reachable state graph.
//!
//! States are numbered in discovery order, so following parent pointers
//! gives shortest paths from the initial states. Edges are stored in
//! compressed rows with labels interned to 16-bit ids.

use std::hash::BuildHasher;
use std::time::{Duration, Instant};

use hashbrown::{DefaultHashBuilder, HashTable};

use crate::action::{Action, ActionKind, ThreadId};
use crate::error::Error;
use crate::model::CompositeModel;

/// Limits on exploration. Exceeding one yields [`Error::Budget`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_states: usize,
    pub time: Option<Duration>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_states: 40_000_000, time: None }
    }
}

impl Budget {
    /// Parses `states=N,seconds=S`; either part may be omitted.
    pub fn parse(s: &str) -> Result<Budget, String> {
        let mut b = Budget::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("bad budget item `{part}`"))?;
            match k {
                "states" => b.max_states = v.parse().map_err(|_| format!("bad state count `{v}`"))?,
                "seconds" => b.time = Some(Duration::from_secs_f64(v.parse().map_err(|_| format!("bad seconds `{v}`"))?)),
                _ => return Err(format!("unknown budget item `{k}`")),
            }
        }
        Ok(b)
    }

    pub fn deadline(&self) -> Deadline {
        Deadline { at: self.time.map(|t| Instant::now() + t), budget: *self }
    }
}

/// A running budget.
#[derive(Clone, Copy, Debug)]
pub struct Deadline {
    at: Option<Instant>,
    pub budget: Budget,
}

impl Deadline {
    pub fn check(&self) -> Result<(), Error> {
        match self.at {
            Some(at) if Instant::now() > at => Err(Error::Budget(format!("time limit of {:?} exceeded", self.budget.time.unwrap_or_default()))),
            _ => Ok(()),
        }
    }
}

/// What a label means to the checker.
#[derive(Clone, Copy, Debug)]
pub struct LabelInfo {
    pub action: Action,
    pub thread: ThreadId,
    pub crit: bool,
    pub blockable: bool,
    /// 1 for a read start, 2 for a write start, 0 otherwise.
    pub start: u8,
    pub register: u16,
}

/// Reachable state graph of a composite model.
pub struct Graph {
    pub words: usize,
    packed: Vec<u64>,
    offsets: Vec<u32>,
    targets: Vec<u32>,
    labels: Vec<u16>,
    pub actions: Vec<LabelInfo>,
    /// BFS parent and label, `u32::MAX` for initial states.
    parent: Vec<(u32, u16)>,
    /// Index of the initial state per assignment.
    pub roots: Vec<u32>,
    /// First state enabling two `crit` actions, if exploration found one.
    pub me_violation: Option<u32>,
    /// Exploration stopped at `me_violation`; the graph is incomplete.
    pub truncated: bool,
    /// Bit `t` set when thread `t` is pending.
    pub pending: Vec<u8>,
}

impl Graph {
    pub fn num_states(&self) -> usize {
        self.parent.len()
    }

    pub fn num_edges(&self) -> usize {
        self.targets.len()
    }

    pub fn edges(&self, s: u32) -> impl Iterator<Item = (u16, u32)> + '_ {
        let (lo, hi) = (self.offsets[s as usize] as usize, self.offsets[s as usize + 1] as usize);
        self.labels[lo..hi].iter().copied().zip(self.targets[lo..hi].iter().copied())
    }

    pub fn edge_range(&self, s: u32) -> std::ops::Range<usize> {
        self.offsets[s as usize] as usize..self.offsets[s as usize + 1] as usize
    }

    pub fn edge(&self, i: usize) -> (u16, u32) {
        (self.labels[i], self.targets[i])
    }

    pub fn state(&self, m: &CompositeModel, s: u32, out: &mut Vec<u32>) {
        let w = self.words;
        m.packing.unpack(&self.packed[s as usize * w..(s as usize + 1) * w], out);
    }

    pub fn parent(&self, s: u32) -> Option<(u32, u16)> {
        let p = self.parent[s as usize];
        (p.0 != u32::MAX).then_some(p)
    }

    /// Shortest path from an initial state to `s`: root index and labelled steps.
    pub fn path_to(&self, s: u32) -> (u32, Vec<(u16, u32)>) {
        let mut steps = Vec::new();
        let mut cur = s;
        while let Some((p, l)) = self.parent(cur) {
            steps.push((l, cur));
            cur = p;
        }
        steps.reverse();
        (cur, steps)
    }

    pub fn label(&self, l: u16) -> &LabelInfo {
        &self.actions[l as usize]
    }
}

struct Interner {
    actions: Vec<LabelInfo>,
    index: std::collections::HashMap<Action, u16>,
}

impl Interner {
    fn id(&mut self, a: Action) -> Result<u16, Error> {
        if let Some(&i) = self.index.get(&a) {
            return Ok(i);
        }
        if self.actions.len() >= u16::MAX as usize {
            return Err(Error::Budget("too many distinct actions".into()));
        }
        let i = self.actions.len() as u16;
        self.actions.push(LabelInfo {
            action: a,
            thread: a.thread,
            crit: a.kind == ActionKind::Crit,
            blockable: a.kind == ActionKind::NonCrit,
            start: if a.is_read() { 1 } else if a.is_write() { 2 } else { 0 },
            register: a.register,
        });
        self.index.insert(a, i);
        Ok(i)
    }
}

/// Explores every state reachable from the model's initial states.
///
/// With `stop_at_violation`, exploration ends at the first state enabling
/// two `crit` actions; that state is then the last one discovered and its
/// BFS path is a shortest witness.
pub fn explore(m: &CompositeModel, budget: &Budget, stop_at_violation: bool) -> Result<Graph, Error> {
    let deadline = budget.deadline();
    let w = m.packing.words;
    let n = m.num_threads();
    let hasher = DefaultHashBuilder::default();
    let mut table: HashTable<u32> = HashTable::new();
    let mut packed: Vec<u64> = Vec::new();
    let mut parent: Vec<(u32, u16)> = Vec::new();
    let mut pending: Vec<u8> = Vec::new();
    let mut offsets: Vec<u32> = vec![0];
    let mut targets: Vec<u32> = Vec::new();
    let mut labels: Vec<u16> = Vec::new();
    let mut interner = Interner { actions: Vec::new(), index: Default::default() };
    let mut me_violation = None;
    let mut key = vec![0u64; w];

    let is_violation = |s: &[u32]| (0..n).filter(|&t| m.threads[t].enables_crit(s[t])).count() >= 2;
    let pend_mask = |s: &[u32]| (0..n).fold(0u8, |acc, t| acc | ((m.threads[t].phase[s[t] as usize].is_pending() as u8) << t));

    // Returns (id, fresh).
    let mut intern = |s: &[u32], from: (u32, u16), packed: &mut Vec<u64>, parent: &mut Vec<(u32, u16)>, pending: &mut Vec<u8>| -> Result<(u32, bool), Error> {
        m.packing.pack(s, &mut key);
        let h = hasher.hash_one(&key[..]);
        let eq = |&id: &u32| packed[id as usize * w..(id as usize + 1) * w] == key[..];
        if let Some(&id) = table.find(h, eq) {
            return Ok((id, false));
        }
        let id = parent.len();
        if id >= budget.max_states {
            return Err(Error::Budget(format!("more than {} states", budget.max_states)));
        }
        packed.extend_from_slice(&key);
        parent.push(from);
        pending.push(pend_mask(s));
        let id = id as u32;
        table.insert_unique(h, id, |&i| hasher.hash_one(&packed[i as usize * w..(i as usize + 1) * w]));
        Ok((id, true))
    };

    let mut roots = Vec::new();
    for s in m.initial_states() {
        let (id, _) = intern(&s, (u32::MAX, 0), &mut packed, &mut parent, &mut pending)?;
        roots.push(id);
        if me_violation.is_none() && is_violation(&s) {
            me_violation = Some(id);
        }
    }
    let mut truncated = stop_at_violation && me_violation.is_some();
    let mut cur = Vec::new();
    let mut scratch = Vec::new();
    let mut succ: Vec<(Action, Vec<u32>)> = Vec::new();
    let mut i = 0usize;
    while i < parent.len() && !truncated {
        if i % 4096 == 0 {
            deadline.check()?;
        }
        m.packing.unpack(&packed[i * w..(i + 1) * w], &mut cur);
        succ.clear();
        m.expand(&cur, &mut scratch, |a, t| succ.push((a, t.to_vec())));
        for (a, t) in succ.drain(..) {
            let l = interner.id(a)?;
            let (id, fresh) = intern(&t, (i as u32, l), &mut packed, &mut parent, &mut pending)?;
            targets.push(id);
            labels.push(l);
            if fresh && me_violation.is_none() && is_violation(&t) {
                me_violation = Some(id);
                truncated = stop_at_violation;
            }
        }
        if targets.len() > u32::MAX as usize - 1024 {
            return Err(Error::Budget("too many transitions".into()));
        }
        offsets.push(targets.len() as u32);
        i += 1;
    }
    // Unexpanded states (only after truncation) get no edges.
    while offsets.len() < parent.len() + 1 {
        offsets.push(targets.len() as u32);
    }
    Ok(Graph {
        words: w,
        packed,
        offsets,
        targets,
        labels,
        actions: interner.actions,
        parent,
        roots,
        me_violation,
        truncated,
        pending,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang;
    use crate::model::ModelOptions;
    use crate::registers::Kind;

    #[test]
    fn trivial_two_threads() {
        let p = lang::parse("algorithm trivial\nthreads 1..\nbegin\n critical\nend\n").unwrap();
        let m = CompositeModel::build(&p, 2, ModelOptions::instant(Kind::Atomic)).unwrap();
        let g = explore(&m, &Budget::default(), false).unwrap();
        assert_eq!(g.num_states(), 4);
        assert_eq!(g.num_edges(), 8);
        assert_eq!(g.me_violation, Some(3));
        let (root, path) = g.path_to(3);
        assert_eq!(root, 0);
        assert_eq!(path.len(), 2);
    }

    #[test]
    fn budget_limits() {
        let p = lang::parse("algorithm trivial\nthreads 1..\nbegin\n critical\nend\n").unwrap();
        let m = CompositeModel::build(&p, 3, ModelOptions::instant(Kind::Atomic)).unwrap();
        let b = Budget { max_states: 5, time: None };
        assert!(matches!(explore(&m, &b, false), Err(Error::Budget(_))));
        assert_eq!(Budget::parse("states=10,seconds=2").unwrap().max_states, 10);
        assert!(Budget::parse("bogus=1").is_err());
    }
}
