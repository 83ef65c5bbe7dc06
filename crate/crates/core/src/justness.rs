//! Concurrency relations, action equivalence and the justness test on cycles.
//!
//! `interferes(c, a, b)` is the complement of the concurrency relation: a
//! just path must eventually perform some `b` interfering with every
//! non-blockable action `a` that stays enabled.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::action::{Action, ActionKind, ThreadId};
use crate::lts::TransitionSystem;

/// Which register actions of different threads interfere.
///
/// Ordered by inclusion of their interference relations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConcurrencySpec {
    /// Only actions of the same thread.
    T,
    /// Also a read or write against a write to the same register.
    S,
    /// Also a write against a read of the same register.
    I,
    /// Also a read against a read of the same register.
    A,
}

impl ConcurrencySpec {
    pub const ALL: [ConcurrencySpec; 4] = [ConcurrencySpec::T, ConcurrencySpec::S, ConcurrencySpec::I, ConcurrencySpec::A];
}

impl fmt::Display for ConcurrencySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ConcurrencySpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "T" | "t" => Ok(ConcurrencySpec::T),
            "S" | "s" => Ok(ConcurrencySpec::S),
            "I" | "i" => Ok(ConcurrencySpec::I),
            "A" | "a" => Ok(ConcurrencySpec::A),
            _ => Err(format!("unknown concurrency relation `{s}` (expected T, S, I or A)")),
        }
    }
}

pub fn is_read(a: &Action) -> bool {
    a.is_read()
}

pub fn is_write(a: &Action) -> bool {
    a.is_write()
}

/// `a` interferes with `b` under `c`: they are not concurrent.
pub fn interferes(c: ConcurrencySpec, a: &Action, b: &Action) -> bool {
    if a.thread == b.thread {
        return true;
    }
    let same_reg = (a.is_read() || a.is_write()) && (b.is_read() || b.is_write()) && a.register == b.register;
    if !same_reg {
        return false;
    }
    match c {
        ConcurrencySpec::T => false,
        ConcurrencySpec::S => b.is_write(),
        ConcurrencySpec::I => b.is_write() || a.is_write(),
        ConcurrencySpec::A => true,
    }
}

/// `a ≡ b`: identity, except that instant reads of one thread and register
/// are equivalent regardless of value.
pub fn equivalent(a: &Action, b: &Action) -> bool {
    if a.kind == ActionKind::InstantRead && b.kind == ActionKind::InstantRead {
        return a.thread == b.thread && a.register == b.register;
    }
    a == b
}

/// Members of the blockable set: leaving the non-critical section.
pub fn blockable(a: &Action) -> bool {
    a.kind == ActionKind::NonCrit
}

/// Interference coverage offered by a set of labels.
///
/// Stores, for the labels of a cycle, the threads that act, the registers
/// written and the registers read. Deciding whether some label interferes
/// with `a` needs nothing else.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Coverage {
    pub threads: u8,
    pub writes: BTreeSet<u16>,
    pub reads: BTreeSet<u16>,
}

impl Coverage {
    pub fn add(&mut self, b: &Action) {
        self.threads |= 1 << b.thread;
        if b.is_write() {
            self.writes.insert(b.register);
        }
        if b.is_read() {
            self.reads.insert(b.register);
        }
    }

    pub fn of<'a>(labels: impl IntoIterator<Item = &'a Action>) -> Coverage {
        let mut c = Coverage::default();
        for b in labels {
            c.add(b);
        }
        c
    }

    /// Some recorded label interferes with `a` under `c`.
    pub fn covers(&self, c: ConcurrencySpec, a: &Action) -> bool {
        if self.threads & (1 << a.thread) != 0 {
            return true;
        }
        let r = a.register;
        if a.is_read() {
            (c >= ConcurrencySpec::S && self.writes.contains(&r)) || (c == ConcurrencySpec::A && self.reads.contains(&r))
        } else if a.is_write() {
            (c >= ConcurrencySpec::S && self.writes.contains(&r)) || (c >= ConcurrencySpec::I && self.reads.contains(&r))
        } else {
            false
        }
    }
}

/// Whether repeating a cycle through `states` with `labels` forever gives a
/// just path: every non-blockable action enabled at a cycle state is
/// interfered with by some cycle label.
pub fn justness_closed<T: TransitionSystem>(sys: &T, states: &[T::State], labels: &[Action], c: ConcurrencySpec) -> bool {
    let mut buf = Vec::new();
    for s in states {
        buf.clear();
        sys.successors(s, &mut buf);
        for (a, _) in &buf {
            if !blockable(a) && !labels.iter().any(|b| interferes(c, a, b)) {
                return false;
            }
        }
    }
    true
}

/// Actions that the threads acting only finitely often on a lasso leave
/// enabled in their final local state.
///
/// `local_enabled(t)` lists the actions enabled by thread `t`'s own LTS in
/// its state at the end of the stem; it is consulted only for threads
/// absent from the cycle.
pub fn thread_enabled_actions(cycle: &[Action], threads: usize, local_enabled: impl Fn(ThreadId) -> Vec<Action>) -> BTreeSet<Action> {
    let mut active = 0u16;
    for a in cycle {
        active |= 1 << a.thread;
    }
    (0..threads as ThreadId).filter(|t| active & (1 << t) == 0).flat_map(local_enabled).collect()
}

/// Just-path test from thread-enabled actions and occurrence counts.
///
/// `infinite` holds the actions occurring infinitely often on the path.
/// This is an independent characterisation, used to cross-check lassos
/// found by the checker.
pub fn just_by_characterisation(c: ConcurrencySpec, thread_enabled: &BTreeSet<Action>, infinite: &[Action]) -> bool {
    let starts = |r: u16| infinite.iter().filter(move |b| (b.is_read() || b.is_write()) && b.register == r);
    thread_enabled.iter().filter(|a| !blockable(a)).all(|a| {
        let in_start = a.is_read() || a.is_write();
        match c {
            ConcurrencySpec::T => false,
            _ if !in_start => false,
            ConcurrencySpec::S => starts(a.register).any(|b| b.is_write()),
            ConcurrencySpec::I => {
                if a.is_write() {
                    starts(a.register).next().is_some()
                } else {
                    starts(a.register).any(|b| b.is_write())
                }
            }
            ConcurrencySpec::A => starts(a.register).next().is_some(),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ConcurrencySpec::*;

    fn sample() -> Vec<Action> {
        let mut v = Vec::new();
        for t in 0..2 {
            for r in 0..2 {
                v.push(Action::start_read(t, r));
                v.push(Action::order_read(t, r));
                v.push(Action::finish_write(t, r));
                v.push(Action::order_write(t, r));
                for d in 0..2 {
                    v.push(Action::instant_read(t, r, d));
                    v.push(Action::finish_read(t, r, d));
                    v.push(Action::start_write(t, r, d));
                }
            }
            v.push(Action::crit(t));
            v.push(Action::noncrit(t));
            v.push(Action::local(t, 3));
        }
        v
    }

    #[test]
    fn spec_examples() {
        let x = 0;
        assert!(!interferes(T, &Action::instant_read(0, x, 1), &Action::start_write(1, x, 0)));
        assert!(interferes(S, &Action::instant_read(0, x, 1), &Action::start_write(1, x, 0)));
        assert!(interferes(I, &Action::start_write(0, x, 1), &Action::instant_read(1, x, 0)));
        assert!(!interferes(S, &Action::start_write(0, x, 1), &Action::instant_read(1, x, 0)));
        assert!(interferes(A, &Action::instant_read(0, x, 1), &Action::instant_read(1, x, 0)));
        assert!(is_read(&Action::instant_read(0, x, 1)));
        assert!(!is_write(&Action::finish_write(0, x)));
        assert!(equivalent(&Action::instant_read(0, x, 0), &Action::instant_read(0, x, 2)));
        assert!(!equivalent(&Action::instant_read(0, x, 0), &Action::instant_read(1, x, 0)));
    }

    #[test]
    fn monotone_irreflexive_congruent() {
        let v = sample();
        for a in &v {
            for b in &v {
                for w in ConcurrencySpec::ALL.windows(2) {
                    assert!(!interferes(w[0], a, b) || interferes(w[1], a, b), "{a} {b}");
                }
                for c in ConcurrencySpec::ALL {
                    if equivalent(a, b) {
                        assert!(interferes(c, a, b));
                    }
                    for a2 in v.iter().filter(|x| equivalent(a, x)) {
                        for b2 in v.iter().filter(|x| equivalent(b, x)) {
                            assert_eq!(interferes(c, a, b), interferes(c, a2, b2));
                        }
                    }
                    assert_eq!(Coverage::of([b]).covers(c, a), interferes(c, a, b), "{c} {a} {b}");
                }
            }
        }
    }

    #[test]
    fn characterisation_matches_coverage_on_lasso_tails() {
        // For a thread absent from the cycle, the characterisation and the
        // direct label test must agree on its enabled start actions.
        let v = sample();
        for c in ConcurrencySpec::ALL {
            for a in v.iter().filter(|a| a.thread == 0 && !blockable(a)) {
                for b in v.iter().filter(|b| b.thread == 1) {
                    let direct = Coverage::of([b]).covers(c, a);
                    let chr = just_by_characterisation(c, &BTreeSet::from([*a]), &[*b]);
                    assert_eq!(direct, chr, "{c} {a} {b}");
                }
            }
        }
    }
}
