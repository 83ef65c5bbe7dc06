//! Brute-force validators for the engine, meant for tiny configurations.
//!
//! Register processes here are transcribed from their process equations
//! with no canonicalisation, composed by a literal product over the union
//! alphabet, and compared with the engine up to strong bisimilarity.
//! The engine's own register code, composition and graph are not used on
//! the oracle side.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::hash::Hash;

use rand::{Rng, RngExt};

use crate::action::{Action, ActionKind, RegId, ThreadId, Value};
use crate::check::{check_kind, check_mutual_exclusion, CheckOptions, Letter, Verdict};
use crate::error::Error;
use crate::explore::{explore, Budget};
use crate::justness::ConcurrencySpec;
use crate::lang::{self, Program};
use crate::lts::{compose, Lts, TransitionSystem};
use crate::model::{CompositeModel, MemoryModel, ModelOptions};
use crate::registers::{register_lts, Blocking, Init, Kind, RegisterConfig, Style};

/// Register status with every access function stored explicitly.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RawStatus {
    pub stor: Value,
    pub rds: BTreeSet<ThreadId>,
    pub wrts: BTreeSet<ThreadId>,
    pub pend: BTreeSet<ThreadId>,
    pub rec: Vec<Value>,
    pub ovrl: Vec<bool>,
    pub posv: Vec<BTreeSet<Value>>,
}

impl RawStatus {
    pub fn initial(d: Value, threads: u8) -> RawStatus {
        let n = threads as usize;
        RawStatus {
            stor: d,
            rds: BTreeSet::new(),
            wrts: BTreeSet::new(),
            pend: BTreeSet::new(),
            rec: vec![d; n],
            ovrl: vec![false; n],
            posv: vec![BTreeSet::new(); n],
        }
    }

    fn usr(&self, t: ThreadId) -> RawStatus {
        let mut s = self.clone();
        s.rds.insert(t);
        s.pend.insert(t);
        s.ovrl[t as usize] = !self.wrts.is_empty();
        let mut p = BTreeSet::from([self.stor]);
        p.extend(self.wrts.iter().map(|&u| self.rec[u as usize]));
        s.posv[t as usize] = p;
        s
    }

    fn ufr(&self, t: ThreadId) -> RawStatus {
        let mut s = self.clone();
        s.rds.remove(&t);
        s
    }

    fn usw(&self, t: ThreadId, d: Value, full: bool) -> RawStatus {
        let mut s = self.clone();
        s.wrts.insert(t);
        s.pend.insert(t);
        s.rec[t as usize] = d;
        s.ovrl[t as usize] = !self.wrts.is_empty();
        for u in 0..s.ovrl.len() {
            if u != t as usize {
                s.ovrl[u] = true;
                if full {
                    s.posv[u].insert(d);
                }
            }
        }
        s
    }

    fn ufw(&self, t: ThreadId, d: Value) -> RawStatus {
        let mut s = self.clone();
        s.stor = d;
        s.wrts.remove(&t);
        s
    }

    fn uor(&self, t: ThreadId) -> RawStatus {
        let mut s = self.clone();
        s.pend.remove(&t);
        s.rec[t as usize] = self.stor;
        s
    }

    fn uow(&self, t: ThreadId, d: Value) -> RawStatus {
        let mut s = self.clone();
        s.stor = d;
        s.pend.remove(&t);
        s
    }

    /// The congruence of the swap property: equal on what the process of
    /// `kind` can observe.
    pub fn congruent(&self, o: &RawStatus, kind: Kind) -> bool {
        let base = self.stor == o.stor && self.rds == o.rds && self.wrts == o.wrts && self.rec == o.rec;
        base && match kind {
            Kind::Safe => self.ovrl == o.ovrl,
            Kind::Regular => self.pend == o.pend && self.posv == o.posv,
            Kind::Atomic => self.pend == o.pend,
        }
    }
}

/// One register process read off its summands.
#[derive(Clone, Copy, Debug)]
pub struct NaiveRegister {
    pub id: RegId,
    pub kind: Kind,
    pub style: Style,
    pub blocking: Blocking,
    pub domain: u8,
    pub threads: u8,
}

impl NaiveRegister {
    pub fn of_config(cfg: &RegisterConfig, threads: u8) -> NaiveRegister {
        NaiveRegister { id: cfg.id, kind: cfg.kind, style: cfg.style, blocking: cfg.blocking, domain: cfg.domain, threads }
    }

    fn may_start_read(&self, s: &RawStatus, t: ThreadId) -> bool {
        match self.blocking {
            Blocking::None => !s.rds.contains(&t) && !s.wrts.contains(&t),
            Blocking::BlockAll => s.rds.is_empty() && s.wrts.is_empty(),
            Blocking::BlockWritesAndReadsOfWrites | Blocking::BlockWritesOnly => !s.rds.contains(&t) && s.wrts.is_empty(),
        }
    }

    fn may_start_write(&self, s: &RawStatus, t: ThreadId) -> bool {
        match (self.style, self.blocking) {
            (Style::InstantRead, _) => !s.wrts.contains(&t),
            (Style::FullRead, Blocking::None) => !s.rds.contains(&t) && !s.wrts.contains(&t),
            (Style::FullRead, Blocking::BlockAll | Blocking::BlockWritesAndReadsOfWrites) => s.rds.is_empty() && s.wrts.is_empty(),
            (Style::FullRead, Blocking::BlockWritesOnly) => s.wrts.is_empty(),
        }
    }

    /// Every summand instance `(t, d)` whose condition holds, duplicates included.
    pub fn summands(&self, s: &RawStatus) -> Vec<(Action, RawStatus)> {
        let r = self.id;
        let full = self.style == Style::FullRead;
        let mut out = Vec::new();
        for t in 0..self.threads {
            let ti = t as usize;
            let rd = s.rds.contains(&t);
            let wr = s.wrts.contains(&t);
            let pe = s.pend.contains(&t);
            for d in 0..self.domain {
                if full {
                    if self.may_start_read(s, t) {
                        out.push((Action::start_read(t, r), s.usr(t)));
                    }
                    match self.kind {
                        Kind::Safe => {
                            if rd && !s.ovrl[ti] {
                                out.push((Action::finish_read(t, r, s.stor), s.ufr(t)));
                            }
                            if rd && s.ovrl[ti] {
                                out.push((Action::finish_read(t, r, d), s.ufr(t)));
                            }
                        }
                        Kind::Regular => {
                            if rd && s.posv[ti].contains(&d) {
                                out.push((Action::finish_read(t, r, d), s.ufr(t)));
                            }
                        }
                        Kind::Atomic => {
                            if rd && pe {
                                out.push((Action::order_read(t, r), s.uor(t)));
                            }
                            if rd && !pe {
                                out.push((Action::finish_read(t, r, s.rec[ti]), s.ufr(t)));
                            }
                        }
                    }
                } else {
                    let readable = match self.kind {
                        Kind::Safe => (s.wrts.is_empty() && d == s.stor) || !s.wrts.is_empty(),
                        Kind::Regular => d == s.stor || s.wrts.iter().any(|&u| s.rec[u as usize] == d),
                        Kind::Atomic => d == s.stor,
                    };
                    if !wr && readable {
                        out.push((Action::instant_read(t, r, d), s.clone()));
                    }
                }
                if self.may_start_write(s, t) {
                    out.push((Action::start_write(t, r, d), s.usw(t, d, full)));
                }
                match self.kind {
                    Kind::Safe => {
                        if wr && !s.ovrl[ti] {
                            out.push((Action::finish_write(t, r), s.ufw(t, s.rec[ti])));
                        }
                        if wr && s.ovrl[ti] {
                            out.push((Action::finish_write(t, r), s.ufw(t, d)));
                        }
                    }
                    Kind::Regular | Kind::Atomic => {
                        if wr && pe {
                            out.push((Action::order_write(t, r), s.uow(t, s.rec[ti])));
                        }
                        if wr && !pe {
                            out.push((Action::finish_write(t, r), s.ufw(t, s.stor)));
                        }
                    }
                }
            }
        }
        out
    }

    /// The full action set of the process.
    pub fn alphabet(&self) -> BTreeSet<Action> {
        let mut a = BTreeSet::new();
        for t in 0..self.threads {
            a.extend(thread_register_interface(t, self.id, self.domain, self.style));
            if self.kind != Kind::Safe {
                a.insert(Action::order_write(t, self.id));
            }
            if self.kind == Kind::Atomic && self.style == Style::FullRead {
                a.insert(Action::order_read(t, self.id));
            }
        }
        a
    }
}

/// Actions thread `t` shares with register `r`.
fn thread_register_interface(t: ThreadId, r: RegId, domain: u8, style: Style) -> Vec<Action> {
    let mut v = vec![Action::finish_write(t, r)];
    for d in 0..domain {
        v.push(Action::start_write(t, r, d));
        match style {
            Style::FullRead => v.push(Action::finish_read(t, r, d)),
            Style::InstantRead => v.push(Action::instant_read(t, r, d)),
        }
    }
    if style == Style::FullRead {
        v.push(Action::start_read(t, r));
    }
    v
}

/// Reachable LTS of a register process from `init`, with the status of each state.
pub fn naive_register_lts(reg: &NaiveRegister, init: Value, limit: usize) -> Result<(Lts, Vec<RawStatus>), Error> {
    let first = RawStatus::initial(init, reg.threads);
    let mut index = HashMap::from([(first.clone(), 0u32)]);
    let mut statuses = vec![first];
    let mut lts = Lts::new(reg.alphabet());
    let mut i = 0;
    while i < statuses.len() {
        let mut seen = BTreeSet::new();
        for (a, t) in reg.summands(&statuses[i]) {
            let id = match index.get(&t) {
                Some(&id) => id,
                None => {
                    if statuses.len() >= limit {
                        return Err(Error::Budget(format!("register process exceeds {limit} states")));
                    }
                    let id = lts.add_state();
                    index.insert(t.clone(), id);
                    statuses.push(t);
                    id
                }
            };
            if seen.insert((a, id)) {
                lts.add_transition(i as u32, a, id);
            }
        }
        i += 1;
    }
    Ok((lts, statuses))
}

/// Literal product of LTSs: an action moves every component that has it
/// in its alphabet, and is possible only if all of them can move.
#[derive(Clone, Debug)]
pub struct NaiveProduct {
    pub lts: Lts,
    pub tuples: Vec<Vec<u32>>,
}

pub fn naive_product_explorer(components: &[Lts], limit: usize) -> Result<NaiveProduct, Error> {
    if components.is_empty() {
        return Err(Error::InvalidInput("no components".into()));
    }
    let alphabet: BTreeSet<Action> = components.iter().flat_map(|c| c.actions.iter().copied()).collect();
    let init: Vec<u32> = components.iter().map(|c| c.init).collect();
    let mut index = HashMap::from([(init.clone(), 0u32)]);
    let mut tuples = vec![init];
    let mut lts = Lts::new(alphabet.clone());
    let mut i = 0;
    while i < tuples.len() {
        let cur = tuples[i].clone();
        for &a in &alphabet {
            let mut targets: Vec<Vec<u32>> = vec![cur.clone()];
            for (k, c) in components.iter().enumerate() {
                if !c.actions.contains(&a) {
                    continue;
                }
                let moves: Vec<u32> = c.succ[cur[k] as usize].iter().filter(|(b, _)| *b == a).map(|&(_, q)| q).collect();
                targets = targets
                    .iter()
                    .flat_map(|v| {
                        moves.iter().map(move |&q| {
                            let mut w = v.clone();
                            w[k] = q;
                            w
                        })
                    })
                    .collect();
            }
            for v in targets {
                let id = match index.get(&v) {
                    Some(&id) => id,
                    None => {
                        if tuples.len() >= limit {
                            return Err(Error::Budget(format!("product exceeds {limit} states")));
                        }
                        let id = lts.add_state();
                        index.insert(v.clone(), id);
                        tuples.push(v);
                        id
                    }
                };
                lts.add_transition(i as u32, a, id);
            }
        }
        i += 1;
    }
    Ok(NaiveProduct { lts, tuples })
}

/// A thread-register model built entirely from oracle parts.
#[derive(Clone, Debug)]
pub struct NaiveModel {
    pub product: NaiveProduct,
    pub threads: usize,
    pub kind: Kind,
    /// Status of every register state, per register.
    pub statuses: Vec<Vec<RawStatus>>,
}

impl NaiveModel {
    /// Whether some reachable state lets two threads do `crit`.
    pub fn mutual_exclusion_holds(&self) -> bool {
        self.product.lts.succ.iter().all(|es| {
            let crit: BTreeSet<ThreadId> = es.iter().filter(|(a, _)| a.kind == ActionKind::Crit).map(|(a, _)| a.thread).collect();
            crit.len() < 2
        })
    }

    /// Congruence on product states: thread parts equal, registers congruent.
    pub fn congruent(&self, a: u32, b: u32) -> bool {
        let (x, y) = (&self.product.tuples[a as usize], &self.product.tuples[b as usize]);
        let n = self.threads;
        x[..n] == y[..n]
            && self.statuses.iter().enumerate().all(|(r, st)| st[x[n + r] as usize].congruent(&st[y[n + r] as usize], self.kind))
    }
}

/// Thread LTSs of `p` with alphabets widened to their full register interface.
pub fn thread_components(p: &Program, n: usize, style: Style) -> Result<(Vec<Lts>, Vec<(u8, Init)>), Error> {
    let compiled = lang::compile(p, n, style)?;
    let regs: Vec<(u8, Init)> = compiled.layout.registers.iter().map(|r| (r.domain, r.init)).collect();
    let threads = compiled
        .threads
        .into_iter()
        .map(|t| {
            let mut lts = t.lts;
            for (r, &(domain, _)) in regs.iter().enumerate() {
                lts.actions.extend(thread_register_interface(t.thread, r as RegId, domain, style));
            }
            lts
        })
        .collect();
    Ok((threads, regs))
}

fn resolve(regs: &[(u8, Init)], init: &[Value]) -> Result<(), Error> {
    let ok = init.len() == regs.len() && regs.iter().zip(init).all(|(&(dom, i), &d)| d < dom && (i == Init::Any || i == Init::Value(d)));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig("initial assignment does not fit the register declarations".into()))
    }
}

/// Builds the model of `p` from oracle registers and the literal product.
pub fn naive_model(p: &Program, n: usize, opts: ModelOptions, init: &[Value], limit: usize) -> Result<NaiveModel, Error> {
    let (mut comps, regs) = thread_components(p, n, opts.style)?;
    resolve(&regs, init)?;
    let mut statuses = Vec::new();
    for (r, &(domain, _)) in regs.iter().enumerate() {
        let reg = NaiveRegister { id: r as RegId, kind: opts.kind, style: opts.style, blocking: opts.blocking, domain, threads: n as u8 };
        let (lts, st) = naive_register_lts(&reg, init[r], limit)?;
        comps.push(lts);
        statuses.push(st);
    }
    let product = naive_product_explorer(&comps, limit)?;
    Ok(NaiveModel { product, threads: n, kind: opts.kind, statuses })
}

/// Reachable state graph of the engine for one initial assignment, as an LTS.
pub fn engine_lts(p: &Program, n: usize, opts: ModelOptions, init: &[Value], budget: &Budget) -> Result<(Lts, Option<bool>), Error> {
    let m = CompositeModel::build_with_init(p, n, opts, init)?;
    let g = explore(&m, budget, false)?;
    let mut lts = Lts::new(g.actions.iter().map(|l| l.action).collect());
    for _ in 1..g.num_states() {
        lts.add_state();
    }
    for s in 0..g.num_states() as u32 {
        for (l, t) in g.edges(s) {
            lts.add_transition(s, g.label(l).action, t);
        }
    }
    lts.init = g.roots[0];
    let me = check_mutual_exclusion(&g, &m).holds();
    Ok((lts, me))
}

/// Number of strong bisimulation classes of each state of the disjoint
/// union of `a` and `b`, by naive signature refinement.
fn bisim_classes(a: &Lts, b: &Lts) -> (Vec<usize>, usize) {
    let off = a.num_states();
    let total = off + b.num_states();
    let edges = |s: usize| -> Vec<(Action, usize)> {
        if s < off {
            a.succ[s].iter().map(|&(x, t)| (x, t as usize)).collect()
        } else {
            b.succ[s - off].iter().map(|&(x, t)| (x, t as usize + off)).collect()
        }
    };
    let all: Vec<Vec<(Action, usize)>> = (0..total).map(edges).collect();
    let mut block = vec![0usize; total];
    let mut count = 1;
    loop {
        let mut ids: HashMap<(usize, BTreeSet<(Action, usize)>), usize> = HashMap::new();
        let next: Vec<usize> = (0..total)
            .map(|s| {
                let sig: BTreeSet<(Action, usize)> = all[s].iter().map(|&(x, t)| (x, block[t])).collect();
                let k = ids.len();
                *ids.entry((block[s], sig)).or_insert(k)
            })
            .collect();
        let c = ids.len();
        block = next;
        if c == count {
            return (block, c);
        }
        count = c;
    }
}

/// Strong bisimilarity of the initial states of `a` and `b`.
pub fn bisimilar(a: &Lts, b: &Lts) -> bool {
    let (block, _) = bisim_classes(a, b);
    block[a.init as usize] == block[a.num_states() + b.init as usize]
}

/// Outcome of comparing the engine with the oracle on one configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductAgreement {
    pub engine_states: usize,
    pub engine_transitions: usize,
    /// Literal product of the compiled threads and the engine's register LTSs.
    pub compose_states: usize,
    pub compose_transitions: usize,
    pub naive_states: usize,
    pub naive_transitions: usize,
    pub bisimilar: bool,
    pub engine_me: Option<bool>,
    pub naive_me: bool,
}

impl ProductAgreement {
    pub fn agrees(&self) -> bool {
        self.engine_states == self.compose_states
            && self.engine_transitions == self.compose_transitions
            && self.bisimilar
            && self.engine_me == Some(self.naive_me)
    }
}

/// Compares the engine with the oracle on `p` for a single initial assignment.
///
/// The engine graph must match the literal product of the same thread and
/// register LTSs exactly, and be strongly bisimilar to the model built from
/// oracle registers.
pub fn product_agreement(p: &Program, n: usize, opts: ModelOptions, init: &[Value], limit: usize) -> Result<ProductAgreement, Error> {
    let budget = Budget { max_states: limit, ..Budget::default() };
    let (engine, engine_me) = engine_lts(p, n, opts, init, &budget)?;
    let (mut comps, regs) = thread_components(p, n, opts.style)?;
    resolve(&regs, init)?;
    for (r, &(domain, _)) in regs.iter().enumerate() {
        let cfg = RegisterConfig { id: r as RegId, domain, init: Init::Value(init[r]), kind: opts.kind, style: opts.style, blocking: opts.blocking };
        comps.push(register_lts(&cfg, n as u8)?.0);
    }
    let composed = naive_product_explorer(&comps, limit)?;
    let naive = naive_model(p, n, opts, init, limit)?;
    Ok(ProductAgreement {
        engine_states: engine.num_states(),
        engine_transitions: engine.num_transitions(),
        compose_states: composed.lts.num_states(),
        compose_transitions: composed.lts.num_transitions(),
        naive_states: naive.product.lts.num_states(),
        naive_transitions: naive.product.lts.num_transitions(),
        bisimilar: bisimilar(&engine, &naive.product.lts),
        engine_me,
        naive_me: naive.mutual_exclusion_holds(),
    })
}

/// [`product_agreement`] over every assignment of the `any` registers.
pub fn product_agreement_all(p: &Program, n: usize, opts: ModelOptions, limit: usize) -> Result<Vec<ProductAgreement>, Error> {
    let m = CompositeModel::build(p, n, opts)?;
    m.assignments.iter().map(|a| product_agreement(p, n, opts, a, limit)).collect()
}

/// Checks that [`compose`] and [`naive_product_explorer`] build the same LTS.
pub fn compose_agrees(components: &[Lts], limit: usize) -> Result<bool, Error> {
    let a = naive_product_explorer(components, limit)?;
    let b = compose(components)?;
    let same_counts = a.lts.num_states() == b.lts.num_states() && a.lts.num_transitions() == b.lts.num_transitions();
    Ok(same_counts && a.tuples.iter().collect::<BTreeSet<_>>() == b.tuples.iter().collect::<BTreeSet<_>>() && bisimilar(&a.lts, &b.lts))
}

fn letter_of(v: &Verdict) -> Result<Letter, Error> {
    v.letter().ok_or_else(|| Error::Budget(format!("inconclusive under {}", v.memory)))
}

/// Letters from two backends for the same question.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LetterPair {
    pub left: Letter,
    pub right: Letter,
}

impl LetterPair {
    pub fn agrees(&self) -> bool {
        self.left == self.right
    }
}

/// Verdict letter under full-read (left) and instant-read (right) models.
pub fn style_agreement(p: &Program, n: usize, memory: MemoryModel, budget: Budget) -> Result<LetterPair, Error> {
    let run = |style| -> Result<Letter, Error> {
        let opts = CheckOptions { style, budget, ..CheckOptions::default() };
        letter_of(&check_kind(p, n, memory.kind, &[memory.concurrency], &opts)?[0])
    };
    Ok(LetterPair { left: run(Style::FullRead)?, right: run(Style::InstantRead)? })
}

/// The full-read register variant that avoids the overlaps `c` rules out.
pub fn blocking_variant(c: ConcurrencySpec) -> Option<Blocking> {
    match c {
        ConcurrencySpec::T => None,
        ConcurrencySpec::S => Some(Blocking::BlockWritesOnly),
        ConcurrencySpec::I => Some(Blocking::BlockWritesAndReadsOfWrites),
        ConcurrencySpec::A => Some(Blocking::BlockAll),
    }
}

/// Verdict letter under instant-read atomic registers (left) and under the
/// blocking full-read atomic variant for `c` (right), both with relation `c`.
pub fn blocking_agreement(p: &Program, n: usize, c: ConcurrencySpec, budget: Budget) -> Result<LetterPair, Error> {
    let blocking = blocking_variant(c).ok_or_else(|| Error::InvalidConfig("no blocking variant for relation T".into()))?;
    let instant = CheckOptions { budget, ..CheckOptions::default() };
    let blocked = CheckOptions { style: Style::FullRead, blocking, budget, ..CheckOptions::default() };
    let left = letter_of(&check_kind(p, n, Kind::Atomic, &[c], &instant)?[0])?;
    let right = letter_of(&check_kind(p, n, Kind::Atomic, &[c], &blocked)?[0])?;
    Ok(LetterPair { left, right })
}

/// Action equivalence: identity, except instant reads by the same thread
/// of the same register.
pub fn equivalent(a: &Action, b: &Action) -> bool {
    a == b || (a.kind == ActionKind::InstantRead && b.kind == ActionKind::InstantRead && a.thread == b.thread && a.register == b.register)
}

/// Pairs exempt from the swap property.
pub fn swap_exempt(a: &Action, b: &Action) -> bool {
    use ActionKind::*;
    a.register == b.register && matches!((a.kind, b.kind), (OrderRead, OrderWrite) | (OrderWrite, OrderRead) | (OrderWrite, OrderWrite))
}

/// Counts and failures from a fuzz run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FuzzReport {
    pub consistency_checked: usize,
    pub swaps_checked: usize,
    pub swaps_skipped: usize,
    pub failures: Vec<String>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

const WALK_LENGTH: usize = 400;

/// Random walks from `roots`, checking thread-consistency on sampled
/// triples `(s, a, b)`: `a` enabled at `s` and `s -b-> s'` with
/// different threads must leave some action equivalent to `a` enabled at `s'`.
///
/// With `congruent`, also checks the swap property on sampled paths
/// `s0 -a-> s1 -b-> s2`.
pub fn fuzz_walks<T, R>(
    sys: &T,
    roots: &[T::State],
    samples: usize,
    congruent: Option<&dyn Fn(&T::State, &T::State) -> bool>,
    rng: &mut R,
) -> FuzzReport
where
    T: TransitionSystem,
    T::State: Clone + Eq + Hash + std::fmt::Debug,
    R: Rng + ?Sized,
{
    let mut rep = FuzzReport::default();
    let succ = |s: &T::State| {
        let mut v = Vec::new();
        sys.successors(s, &mut v);
        v
    };
    let mut cur = roots[rng.random_range(0..roots.len())].clone();
    let mut steps = 0;
    let mut idle = 0;
    while rep.consistency_checked < samples && idle < samples * 4 + 1000 {
        let out = succ(&cur);
        if out.is_empty() || steps >= WALK_LENGTH {
            cur = roots[rng.random_range(0..roots.len())].clone();
            steps = 0;
            idle += 1;
            continue;
        }
        let (b, next) = out[rng.random_range(0..out.len())].clone();
        let others: Vec<&Action> = out.iter().map(|(a, _)| a).filter(|a| a.thread != b.thread).collect();
        if others.is_empty() {
            idle += 1;
        } else {
            let a = *others[rng.random_range(0..others.len())];
            rep.consistency_checked += 1;
            if !succ(&next).iter().any(|(c, _)| equivalent(&a, c)) {
                rep.failures.push(format!("thread-consistency: {a} enabled at {cur:?}, lost after {b}"));
            }
            if let Some(cong) = congruent {
                check_swap(&succ, cong, &cur, &mut rep, rng);
            }
        }
        cur = next;
        steps += 1;
    }
    rep
}

fn check_swap<S, R>(
    succ: &dyn Fn(&S) -> Vec<(Action, S)>,
    cong: &dyn Fn(&S, &S) -> bool,
    s0: &S,
    rep: &mut FuzzReport,
    rng: &mut R,
) where
    S: Clone + std::fmt::Debug,
    R: Rng + ?Sized,
{
    let first = succ(s0);
    let (a, s1) = first[rng.random_range(0..first.len())].clone();
    let second: Vec<(Action, S)> = succ(&s1).into_iter().filter(|(b, _)| b.thread != a.thread).collect();
    if second.is_empty() {
        return;
    }
    let (b, s2) = second[rng.random_range(0..second.len())].clone();
    if swap_exempt(&a, &b) {
        rep.swaps_skipped += 1;
        return;
    }
    rep.swaps_checked += 1;
    let ok = first.iter().filter(|(x, _)| *x == b).any(|(_, s3)| succ(s3).iter().any(|(y, s4)| *y == a && cong(&s2, s4)));
    if !ok {
        rep.failures.push(format!("swap: {a} then {b} from {s0:?} cannot be reordered"));
    }
}

/// Thread-consistency on every model, plus the swap property when the
/// registers are full-read atomic.
pub fn consistency_fuzz<R: Rng + ?Sized>(model: &CompositeModel, samples: usize, rng: &mut R) -> FuzzReport {
    let roots = model.initial_states();
    let o = model.options;
    let n = model.num_threads();
    let cong = |x: &Vec<u32>, y: &Vec<u32>| {
        x[..n] == y[..n]
            && (0..model.registers.len()).all(|r| {
                let t = model.table_of(r as RegId);
                t.model.congruent(&t.statuses[x[n + r] as usize], &t.statuses[y[n + r] as usize])
            })
    };
    let swap = o.style == Style::FullRead && o.kind == Kind::Atomic;
    fuzz_walks(model, &roots, samples, swap.then_some(&cong as &dyn Fn(&Vec<u32>, &Vec<u32>) -> bool), rng)
}

/// Breadth-first list of the states of `lts` reachable from its initial state.
pub fn reachable_states(lts: &Lts) -> Vec<u32> {
    let mut seen = vec![false; lts.num_states()];
    let mut q = VecDeque::from([lts.init]);
    let mut out = Vec::new();
    seen[lts.init as usize] = true;
    while let Some(s) = q.pop_front() {
        out.push(s);
        for &(_, t) in &lts.succ[s as usize] {
            if !seen[t as usize] {
                seen[t as usize] = true;
                q.push_back(t);
            }
        }
    }
    out
}
