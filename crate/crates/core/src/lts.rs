//! Explicit labelled transition systems, CSP-style product, paths and lassos.

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use crate::action::{Action, ActionKind};
use crate::error::Error;

/// Anything with an initial state and a successor function.
pub trait TransitionSystem {
    type State: Clone + Eq + Hash;
    fn initial(&self) -> Self::State;
    /// Appends the outgoing transitions of `s` to `out`, in a fixed order.
    fn successors(&self, s: &Self::State, out: &mut Vec<(Action, Self::State)>);
}

/// A finite LTS with states `0..succ.len()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lts {
    pub actions: BTreeSet<Action>,
    pub init: u32,
    pub succ: Vec<Vec<(Action, u32)>>,
}

impl Lts {
    pub fn new(actions: BTreeSet<Action>) -> Lts {
        Lts { actions, init: 0, succ: vec![Vec::new()] }
    }

    pub fn num_states(&self) -> usize {
        self.succ.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn add_state(&mut self) -> u32 {
        self.succ.push(Vec::new());
        (self.succ.len() - 1) as u32
    }

    pub fn add_transition(&mut self, from: u32, a: Action, to: u32) {
        self.actions.insert(a);
        self.succ[from as usize].push((a, to));
    }

    pub fn transitions(&self) -> impl Iterator<Item = (u32, Action, u32)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(s, v)| v.iter().map(move |&(a, t)| (s as u32, a, t)))
    }

    /// Labels of the outgoing transitions of `s`.
    pub fn enabled(&self, s: u32) -> Result<BTreeSet<Action>, Error> {
        let v = self
            .succ
            .get(s as usize)
            .ok_or_else(|| Error::InvalidInput(format!("unknown state {s}")))?;
        Ok(v.iter().map(|&(a, _)| a).collect())
    }

    /// Checks the structural invariants: endpoints exist and labels are in the alphabet.
    pub fn validate(&self) -> Result<(), Error> {
        if self.init as usize >= self.succ.len() {
            return Err(Error::InvalidInput("initial state out of range".into()));
        }
        for (s, a, t) in self.transitions() {
            if t as usize >= self.succ.len() {
                return Err(Error::InvalidInput(format!("transition {s} -> {t} leaves the state set")));
            }
            if !self.actions.contains(&a) {
                return Err(Error::InvalidInput(format!("label {a} not in the alphabet")));
            }
        }
        Ok(())
    }

    /// Keeps only states reachable from `init`, renumbered in BFS order.
    pub fn reachable_part(&self) -> Lts {
        let mut map = vec![u32::MAX; self.succ.len()];
        let mut order = vec![self.init];
        map[self.init as usize] = 0;
        let mut i = 0;
        while i < order.len() {
            let s = order[i];
            for &(_, t) in &self.succ[s as usize] {
                if map[t as usize] == u32::MAX {
                    map[t as usize] = order.len() as u32;
                    order.push(t);
                }
            }
            i += 1;
        }
        let succ = order
            .iter()
            .map(|&s| self.succ[s as usize].iter().map(|&(a, t)| (a, map[t as usize])).collect())
            .collect();
        Lts { actions: self.actions.clone(), init: 0, succ }
    }
}

impl TransitionSystem for Lts {
    type State = u32;
    fn initial(&self) -> u32 {
        self.init
    }
    fn successors(&self, s: &u32, out: &mut Vec<(Action, u32)>) {
        out.extend_from_slice(&self.succ[*s as usize]);
    }
}

/// Result of [`compose`]: the product and the component tuple of every state.
#[derive(Clone, Debug)]
pub struct Product {
    pub lts: Lts,
    pub tuples: Vec<Vec<u32>>,
}

/// Parallel composition synchronising on shared actions.
///
/// A joint step on `a` moves every component whose alphabet holds `a`;
/// the others stay put. Only the reachable part is built.
pub fn compose(components: &[Lts]) -> Result<Product, Error> {
    if components.is_empty() {
        return Err(Error::InvalidInput("empty component list".into()));
    }
    let mut owners: HashMap<Action, Vec<usize>> = HashMap::new();
    for (i, c) in components.iter().enumerate() {
        for &a in &c.actions {
            owners.entry(a).or_default().push(i);
        }
    }
    let alphabet: BTreeSet<Action> = owners.keys().copied().collect();
    let init: Vec<u32> = components.iter().map(|c| c.init).collect();
    let mut index: HashMap<Vec<u32>, u32> = HashMap::new();
    index.insert(init.clone(), 0);
    let mut tuples = vec![init];
    let mut succ: Vec<Vec<(Action, u32)>> = Vec::new();
    let mut i = 0;
    while i < tuples.len() {
        let cur = tuples[i].clone();
        let mut out = Vec::new();
        // The lowest participant drives the step; others must match.
        for (ci, c) in components.iter().enumerate() {
            for &(a, t) in &c.succ[cur[ci] as usize] {
                let parts = &owners[&a];
                if parts[0] != ci {
                    continue;
                }
                let mut partial: Vec<Vec<u32>> = vec![{
                    let mut v = cur.clone();
                    v[ci] = t;
                    v
                }];
                for &pj in &parts[1..] {
                    let mut next = Vec::new();
                    for p in &partial {
                        for &(b, u) in &components[pj].succ[cur[pj] as usize] {
                            if b == a {
                                let mut v = p.clone();
                                v[pj] = u;
                                next.push(v);
                            }
                        }
                    }
                    partial = next;
                }
                for v in partial {
                    let n = tuples.len() as u32;
                    let id = *index.entry(v.clone()).or_insert_with(|| {
                        tuples.push(v);
                        n
                    });
                    out.push((a, id));
                }
            }
        }
        succ.push(out);
        i += 1;
    }
    Ok(Product { lts: Lts { actions: alphabet, init: 0, succ }, tuples })
}

/// A finite path: `states.len() == labels.len() + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path<S> {
    pub states: Vec<S>,
    pub labels: Vec<Action>,
}

impl<S: Clone + Eq> Path<S> {
    pub fn single(s: S) -> Path<S> {
        Path { states: vec![s], labels: Vec::new() }
    }

    pub fn first(&self) -> &S {
        &self.states[0]
    }

    pub fn last(&self) -> &S {
        self.states.last().expect("path has at least one state")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn push(&mut self, a: Action, s: S) {
        self.labels.push(a);
        self.states.push(s);
    }

    /// Appends `other`, which must start where `self` ends.
    pub fn extend(&mut self, other: &Path<S>) {
        debug_assert!(other.first() == self.last());
        self.labels.extend_from_slice(&other.labels);
        self.states.extend_from_slice(&other.states[1..]);
    }

    /// Every step is a transition of `sys`.
    pub fn is_valid_in<T: TransitionSystem<State = S>>(&self, sys: &T) -> bool {
        if self.states.len() != self.labels.len() + 1 {
            return false;
        }
        let mut buf = Vec::new();
        self.labels.iter().enumerate().all(|(i, a)| {
            buf.clear();
            sys.successors(&self.states[i], &mut buf);
            buf.iter().any(|(b, t)| b == a && *t == self.states[i + 1])
        })
    }
}

/// Finite witness of an infinite path: `stem` followed by `cycle` forever.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lasso<S> {
    pub stem: Path<S>,
    pub cycle: Path<S>,
}

impl<S: Clone + Eq> Lasso<S> {
    pub fn is_valid_in<T: TransitionSystem<State = S>>(&self, sys: &T) -> bool {
        *self.stem.first() == sys.initial()
            && !self.cycle.is_empty()
            && self.cycle.first() == self.stem.last()
            && self.cycle.last() == self.cycle.first()
            && self.stem.is_valid_in(sys)
            && self.cycle.is_valid_in(sys)
    }
}

/// Drops everything but `crit` and `noncrit` labels.
pub fn project_weak_trace(labels: &[Action]) -> Vec<Action> {
    labels
        .iter()
        .copied()
        .filter(|a| matches!(a.kind, ActionKind::Crit | ActionKind::NonCrit))
        .collect()
}

/// Breadth-first search over `sys` returning a shortest path from the
/// initial state to a state satisfying `goal`.
pub fn bfs_path<T: TransitionSystem>(
    sys: &T,
    goal: impl Fn(&T::State) -> bool,
    limit: usize,
) -> Option<Path<T::State>> {
    let init = sys.initial();
    let mut seen: HashMap<T::State, usize> = HashMap::new();
    let mut nodes: Vec<(T::State, usize, Option<Action>)> = vec![(init.clone(), usize::MAX, None)];
    seen.insert(init, 0);
    let mut buf = Vec::new();
    let mut i = 0;
    while i < nodes.len() && i < limit {
        if goal(&nodes[i].0) {
            let mut states = Vec::new();
            let mut labels = Vec::new();
            let mut k = i;
            loop {
                states.push(nodes[k].0.clone());
                match nodes[k].2 {
                    Some(a) => labels.push(a),
                    None => break,
                }
                k = nodes[k].1;
            }
            states.reverse();
            labels.reverse();
            return Some(Path { states, labels });
        }
        buf.clear();
        sys.successors(&nodes[i].0, &mut buf);
        for (a, t) in buf.drain(..) {
            if !seen.contains_key(&t) {
                seen.insert(t.clone(), nodes.len());
                nodes.push((t, i, Some(a)));
            }
        }
        i += 1;
    }
    None
}
