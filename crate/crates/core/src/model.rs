//! Thread-register models: compiled threads composed with register processes.
//!
//! A composite state is a vector of thread-local states followed by one
//! register status id per register. Status ids index a table shared by all
//! registers of the same shape; the table holds every status reachable from
//! any initial value together with its transitions.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::action::{Action, RegId, ThreadId, Value};
use crate::error::Error;
use crate::justness::ConcurrencySpec;
use crate::lang::{self, Layout, Phase, Program, ThreadLts};
use crate::lts::TransitionSystem;
use crate::registers::{Blocking, Init, Kind, RegisterConfig, RegisterModel, RegisterStatus, Style};

/// One of the six memory models: a register kind paired with a
/// concurrency relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MemoryModel {
    pub kind: Kind,
    pub concurrency: ConcurrencySpec,
}

impl MemoryModel {
    pub const ALL: [MemoryModel; 6] = [
        MemoryModel { kind: Kind::Safe, concurrency: ConcurrencySpec::T },
        MemoryModel { kind: Kind::Regular, concurrency: ConcurrencySpec::T },
        MemoryModel { kind: Kind::Atomic, concurrency: ConcurrencySpec::T },
        MemoryModel { kind: Kind::Atomic, concurrency: ConcurrencySpec::S },
        MemoryModel { kind: Kind::Atomic, concurrency: ConcurrencySpec::I },
        MemoryModel { kind: Kind::Atomic, concurrency: ConcurrencySpec::A },
    ];

    /// Safe and regular registers are only paired with `T`.
    pub fn new(kind: Kind, concurrency: ConcurrencySpec) -> Result<MemoryModel, Error> {
        if kind != Kind::Atomic && concurrency != ConcurrencySpec::T {
            return Err(Error::InvalidConfig(format!("{} registers are only checked with concurrency relation T", kind_name(kind))));
        }
        Ok(MemoryModel { kind, concurrency })
    }

    /// Column label, e.g. `safe/T`.
    pub fn label(&self) -> String {
        format!("{}/{}", kind_name(self.kind), self.concurrency)
    }
}

impl fmt::Display for MemoryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub fn kind_name(k: Kind) -> &'static str {
    match k {
        Kind::Safe => "safe",
        Kind::Regular => "regular",
        Kind::Atomic => "atomic",
    }
}

pub fn parse_kind(s: &str) -> Result<Kind, String> {
    match s {
        "safe" => Ok(Kind::Safe),
        "regular" => Ok(Kind::Regular),
        "atomic" => Ok(Kind::Atomic),
        _ => Err(format!("unknown register kind `{s}` (expected safe, regular or atomic)")),
    }
}

impl FromStr for MemoryModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (k, c) = s.split_once('/').ok_or_else(|| format!("expected KIND/RELATION, got `{s}`"))?;
        MemoryModel::new(parse_kind(k)?, c.parse()?).map_err(|e| e.to_string())
    }
}

/// Register and thread encoding used to build a composite model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModelOptions {
    pub kind: Kind,
    pub style: Style,
    pub blocking: Blocking,
}

impl ModelOptions {
    pub fn instant(kind: Kind) -> ModelOptions {
        ModelOptions { kind, style: Style::InstantRead, blocking: Blocking::None }
    }
}

/// Every status of one register shape reachable from any initial value.
#[derive(Clone, Debug)]
pub struct StatusTable {
    pub model: RegisterModel,
    pub statuses: Vec<RegisterStatus>,
    /// Transitions per status, labelled for register 0, sorted by action.
    pub succ: Vec<Vec<(Action, u32)>>,
    /// Id of the initial status per initial value.
    pub initial: Vec<u32>,
}

impl StatusTable {
    pub fn build(model: RegisterModel) -> StatusTable {
        let mut index: HashMap<RegisterStatus, u32> = HashMap::new();
        let mut statuses = Vec::new();
        let mut initial = Vec::new();
        for d in 0..model.domain {
            let s = model.initial(d);
            let id = *index.entry(s).or_insert_with(|| {
                statuses.push(s);
                (statuses.len() - 1) as u32
            });
            initial.push(id);
        }
        let mut succ = Vec::new();
        let mut buf = Vec::new();
        let mut i = 0;
        while i < statuses.len() {
            buf.clear();
            model.step(0, &statuses[i], &mut buf);
            let mut out: Vec<(Action, u32)> = buf
                .iter()
                .map(|&(a, s)| {
                    let id = *index.entry(s).or_insert_with(|| {
                        statuses.push(s);
                        (statuses.len() - 1) as u32
                    });
                    (a, id)
                })
                .collect();
            out.sort();
            succ.push(out);
            i += 1;
        }
        StatusTable { model, statuses, succ, initial }
    }

    /// Transitions of status `id` carrying action `a` (labelled for register 0).
    pub fn matching(&self, id: u32, a: &Action) -> &[(Action, u32)] {
        let v = &self.succ[id as usize];
        let lo = v.partition_point(|(b, _)| b < a);
        let hi = lo + v[lo..].partition_point(|(b, _)| b == a);
        &v[lo..hi]
    }
}

/// Bit layout of packed composite states.
#[derive(Clone, Debug)]
pub struct Packing {
    /// (word, shift, width) per component.
    fields: Vec<(usize, u32, u32)>,
    pub words: usize,
}

impl Packing {
    fn new(sizes: &[usize]) -> Result<Packing, Error> {
        let mut fields = Vec::new();
        let (mut word, mut used) = (0usize, 0u32);
        for &n in sizes {
            let bits = (usize::BITS - n.saturating_sub(1).leading_zeros()).max(1);
            if bits > 64 {
                return Err(Error::InvalidConfig("component too large to pack".into()));
            }
            if used + bits > 64 {
                word += 1;
                used = 0;
            }
            fields.push((word, used, bits));
            used += bits;
        }
        Ok(Packing { fields, words: word + 1 })
    }

    pub fn pack(&self, s: &[u32], out: &mut [u64]) {
        out.fill(0);
        for (&(w, sh, _), &v) in self.fields.iter().zip(s) {
            out[w] |= (v as u64) << sh;
        }
    }

    pub fn unpack(&self, p: &[u64], out: &mut Vec<u32>) {
        out.clear();
        for &(w, sh, bits) in &self.fields {
            let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
            out.push(((p[w] >> sh) & mask) as u32);
        }
    }
}

/// A thread-register model with one initial state per assignment of the
/// registers declared with `any`.
#[derive(Clone, Debug)]
pub struct CompositeModel {
    pub name: String,
    pub options: ModelOptions,
    pub layout: Layout,
    pub threads: Vec<ThreadLts>,
    pub registers: Vec<RegisterConfig>,
    /// Index into `tables` per register.
    shape: Vec<usize>,
    pub tables: Vec<StatusTable>,
    /// Register values per initial state, one entry per register.
    pub assignments: Vec<Vec<Value>>,
    pub packing: Packing,
}

impl CompositeModel {
    /// Composes all threads of `p` for `n` threads, with every `any`
    /// register enumerated.
    pub fn build(p: &Program, n: usize, opts: ModelOptions) -> Result<CompositeModel, Error> {
        let compiled = lang::compile(p, n, opts.style)?;
        CompositeModel::from_threads(&p.name, compiled.layout, compiled.threads, opts, None)
    }

    /// Like [`CompositeModel::build`] with a single concrete assignment of initial values.
    pub fn build_with_init(p: &Program, n: usize, opts: ModelOptions, init: &[Value]) -> Result<CompositeModel, Error> {
        let compiled = lang::compile(p, n, opts.style)?;
        CompositeModel::from_threads(&p.name, compiled.layout, compiled.threads, opts, Some(init.to_vec()))
    }

    pub fn from_threads(
        name: &str,
        layout: Layout,
        threads: Vec<ThreadLts>,
        opts: ModelOptions,
        init: Option<Vec<Value>>,
    ) -> Result<CompositeModel, Error> {
        let n = threads.len() as u8;
        if threads.iter().any(|t| t.style != opts.style) {
            return Err(Error::InvalidConfig("thread and register read styles differ".into()));
        }
        for (i, t) in threads.iter().enumerate() {
            if t.thread as usize != i {
                return Err(Error::InvalidConfig(format!("thread {i} compiled with id {}", t.thread)));
            }
        }
        let mut registers = Vec::new();
        let mut shapes: Vec<RegisterModel> = Vec::new();
        let mut shape = Vec::new();
        for (id, r) in layout.registers.iter().enumerate() {
            let cfg = RegisterConfig { id: id as RegId, domain: r.domain, init: r.init, kind: opts.kind, style: opts.style, blocking: opts.blocking };
            let m = RegisterModel::of_config(&cfg, n)?;
            let k = match shapes.iter().position(|x| *x == m) {
                Some(k) => k,
                None => {
                    shapes.push(m);
                    shapes.len() - 1
                }
            };
            shape.push(k);
            registers.push(cfg);
        }
        let tables: Vec<StatusTable> = shapes.into_iter().map(StatusTable::build).collect();
        let assignments = match init {
            Some(v) => {
                let ok = v.len() == registers.len()
                    && v.iter().zip(&registers).all(|(&d, r)| (d < r.domain && matches!(r.init, Init::Any)) || r.init == Init::Value(d));
                if !ok {
                    return Err(Error::InvalidConfig("initial assignment does not fit the register declarations".into()));
                }
                vec![v]
            }
            None => init_assignments(&registers),
        };
        let mut sizes: Vec<usize> = threads.iter().map(|t| t.lts.num_states()).collect();
        sizes.extend(shape.iter().map(|&k| tables[k].statuses.len()));
        let packing = Packing::new(&sizes)?;
        Ok(CompositeModel { name: name.to_string(), options: opts, layout, threads, registers, shape, tables, assignments, packing })
    }

    pub fn num_threads(&self) -> usize {
        self.threads.len()
    }

    pub fn register_names(&self) -> Vec<String> {
        self.layout.register_names()
    }

    pub fn table_of(&self, reg: RegId) -> &StatusTable {
        &self.tables[self.shape[reg as usize]]
    }

    /// Initial composite states, one per assignment.
    pub fn initial_states(&self) -> Vec<Vec<u32>> {
        self.assignments
            .iter()
            .map(|a| {
                let mut s: Vec<u32> = self.threads.iter().map(|t| t.lts.init).collect();
                for (r, &d) in a.iter().enumerate() {
                    s.push(self.table_of(r as RegId).initial[d as usize]);
                }
                s
            })
            .collect()
    }

    pub fn status<'a>(&'a self, s: &[u32], reg: RegId) -> &'a RegisterStatus {
        let n = self.threads.len();
        &self.table_of(reg).statuses[s[n + reg as usize] as usize]
    }

    pub fn phase(&self, s: &[u32], t: ThreadId) -> Phase {
        self.threads[t as usize].phase[s[t as usize] as usize]
    }

    pub fn pending(&self, s: &[u32], t: ThreadId) -> bool {
        self.phase(s, t).is_pending()
    }

    /// Calls `emit` for every transition from `s`, threads in ascending
    /// order, then register-local steps by register.
    pub fn expand(&self, s: &[u32], scratch: &mut Vec<u32>, mut emit: impl FnMut(Action, &[u32])) {
        let n = self.threads.len();
        scratch.clear();
        scratch.extend_from_slice(s);
        for (t, th) in self.threads.iter().enumerate() {
            for &(a, q) in &th.lts.succ[s[t] as usize] {
                match a.reg() {
                    None => {
                        scratch[t] = q;
                        emit(a, scratch);
                    }
                    Some(r) => {
                        let ri = n + r as usize;
                        let table = self.table_of(r);
                        for &(_, st) in table.matching(s[ri], &a.with_register(0)) {
                            scratch[t] = q;
                            scratch[ri] = st;
                            emit(a, scratch);
                        }
                        scratch[ri] = s[ri];
                    }
                }
            }
            scratch[t] = s[t];
        }
        for r in 0..self.registers.len() {
            let ri = n + r;
            let table = &self.tables[self.shape[r]];
            for &(a, st) in &table.succ[s[ri] as usize] {
                if a.is_register_local() {
                    scratch[ri] = st;
                    emit(a.with_register(r as RegId), scratch);
                }
            }
            scratch[ri] = s[ri];
        }
    }

    /// Stored value of every register.
    pub fn values(&self, s: &[u32]) -> Vec<Value> {
        (0..self.registers.len()).map(|r| self.status(s, r as RegId).stor).collect()
    }
}

impl TransitionSystem for CompositeModel {
    type State = Vec<u32>;

    fn initial(&self) -> Vec<u32> {
        self.initial_states().swap_remove(0)
    }

    fn successors(&self, s: &Vec<u32>, out: &mut Vec<(Action, Vec<u32>)>) {
        let mut scratch = Vec::new();
        self.expand(s, &mut scratch, |a, t| out.push((a, t.to_vec())));
    }
}

/// All assignments of initial values, `any` registers enumerated in
/// lexicographic order.
pub fn init_assignments(regs: &[RegisterConfig]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for r in regs {
        let choices: Vec<Value> = match r.init {
            Init::Value(d) => vec![d],
            Init::Any => (0..r.domain).collect(),
        };
        out = out
            .into_iter()
            .flat_map(|prefix| {
                choices.iter().map(move |&d| {
                    let mut v = prefix.clone();
                    v.push(d);
                    v
                })
            })
            .collect();
    }
    out
}

/// Actions a thread LTS enables in local state `q`.
pub fn local_enabled(t: &ThreadLts, q: u32) -> Vec<Action> {
    t.lts.succ[q as usize].iter().map(|(a, _)| *a).collect()
}

/// Crit actions enabled at `s`.
pub fn crit_enabled(m: &CompositeModel, s: &[u32]) -> Vec<ThreadId> {
    (0..m.num_threads() as ThreadId).filter(|&t| m.threads[t as usize].enables_crit(s[t as usize])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIVIAL: &str = "algorithm trivial\nthreads 1..\nbegin\n critical\nend\n";

    #[test]
    fn packing_round_trip() {
        let p = Packing::new(&[5, 1, 70000, 3, 1 << 30, 1 << 30, 2]).unwrap();
        let s = vec![4, 0, 69999, 2, (1 << 30) - 1, 7, 1];
        let mut w = vec![0; p.words];
        p.pack(&s, &mut w);
        let mut back = Vec::new();
        p.unpack(&w, &mut back);
        assert_eq!(back, s);
    }

    #[test]
    fn trivial_model_interleaves() {
        let p = lang::parse(TRIVIAL).unwrap();
        let m = CompositeModel::build(&p, 2, ModelOptions::instant(Kind::Atomic)).unwrap();
        let init = m.initial();
        let mut out = Vec::new();
        m.successors(&init, &mut out);
        assert_eq!(out.iter().map(|(a, _)| *a).collect::<Vec<_>>(), vec![Action::noncrit(0), Action::noncrit(1)]);
    }

    #[test]
    fn any_registers_enumerated() {
        let src = "algorithm k\nthreads 2\nregister r[N]: bool = any\nregister t: bool = 0\nbegin\n r[i] := 1\n critical\nend\n";
        let p = lang::parse(src).unwrap();
        let m = CompositeModel::build(&p, 2, ModelOptions::instant(Kind::Regular)).unwrap();
        assert_eq!(m.assignments, vec![vec![0, 0, 0], vec![0, 1, 0], vec![1, 0, 0], vec![1, 1, 0]]);
        let one = CompositeModel::build_with_init(&p, 2, ModelOptions::instant(Kind::Regular), &[1, 0, 0]).unwrap();
        assert_eq!(one.initial_states().len(), 1);
        assert!(CompositeModel::build_with_init(&p, 2, ModelOptions::instant(Kind::Regular), &[1, 0, 1]).is_err());
    }

    #[test]
    fn memory_model_rules() {
        assert!(MemoryModel::new(Kind::Safe, ConcurrencySpec::S).is_err());
        assert_eq!("atomic/I".parse::<MemoryModel>().unwrap().concurrency, ConcurrencySpec::I);
        assert_eq!(MemoryModel::ALL[1].label(), "regular/T");
    }
}
