//! Transition labels.
//!
//! Every label carries the thread it belongs to. Register actions also carry
//! the register id, and reads/writes that move data carry a value.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Thread identifier, `0..N`.
pub type ThreadId = u8;
/// Register identifier, index into the model's register table.
pub type RegId = u16;
/// Domain value. Domains are `0..size`.
pub type Value = u8;

/// Upper bound on thread count supported by the packed register status.
pub const MAX_THREADS: usize = 8;
/// Upper bound on register domain size.
pub const MAX_DOMAIN: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionKind {
    StartRead,
    OrderRead,
    FinishRead,
    InstantRead,
    StartWrite,
    OrderWrite,
    FinishWrite,
    Crit,
    NonCrit,
    LocalStep,
}

impl ActionKind {
    pub const ALL: [ActionKind; 10] = [
        ActionKind::StartRead,
        ActionKind::OrderRead,
        ActionKind::FinishRead,
        ActionKind::InstantRead,
        ActionKind::StartWrite,
        ActionKind::OrderWrite,
        ActionKind::FinishWrite,
        ActionKind::Crit,
        ActionKind::NonCrit,
        ActionKind::LocalStep,
    ];

    pub fn has_register(self) -> bool {
        !matches!(self, ActionKind::Crit | ActionKind::NonCrit | ActionKind::LocalStep)
    }

    pub fn has_value(self) -> bool {
        matches!(
            self,
            ActionKind::FinishRead | ActionKind::InstantRead | ActionKind::StartWrite
        )
    }

    /// Short mnemonic used in traces: `sr`, `fr`, `r`, `sw`, ...
    pub fn mnemonic(self) -> &'static str {
        match self {
            ActionKind::StartRead => "sr",
            ActionKind::OrderRead => "or",
            ActionKind::FinishRead => "fr",
            ActionKind::InstantRead => "r",
            ActionKind::StartWrite => "sw",
            ActionKind::OrderWrite => "ow",
            ActionKind::FinishWrite => "fw",
            ActionKind::Crit => "crit",
            ActionKind::NonCrit => "noncrit",
            ActionKind::LocalStep => "local",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<ActionKind> {
        ActionKind::ALL.into_iter().find(|k| k.mnemonic() == s)
    }
}

/// A structured label.
///
/// Fields that do not apply to the kind are kept at zero (`register`, `value`)
/// so that derived equality and ordering are structural.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    pub thread: ThreadId,
    pub register: RegId,
    pub value: Value,
    /// Distinguishes internal steps of one thread (LocalStep only).
    pub tag: u16,
}

impl Action {
    fn mk(kind: ActionKind, thread: ThreadId, register: RegId, value: Value) -> Action {
        Action { kind, thread, register, value, tag: 0 }
    }
    pub fn start_read(t: ThreadId, r: RegId) -> Action {
        Action::mk(ActionKind::StartRead, t, r, 0)
    }
    pub fn order_read(t: ThreadId, r: RegId) -> Action {
        Action::mk(ActionKind::OrderRead, t, r, 0)
    }
    pub fn finish_read(t: ThreadId, r: RegId, d: Value) -> Action {
        Action::mk(ActionKind::FinishRead, t, r, d)
    }
    pub fn instant_read(t: ThreadId, r: RegId, d: Value) -> Action {
        Action::mk(ActionKind::InstantRead, t, r, d)
    }
    pub fn start_write(t: ThreadId, r: RegId, d: Value) -> Action {
        Action::mk(ActionKind::StartWrite, t, r, d)
    }
    pub fn order_write(t: ThreadId, r: RegId) -> Action {
        Action::mk(ActionKind::OrderWrite, t, r, 0)
    }
    pub fn finish_write(t: ThreadId, r: RegId) -> Action {
        Action::mk(ActionKind::FinishWrite, t, r, 0)
    }
    pub fn crit(t: ThreadId) -> Action {
        Action::mk(ActionKind::Crit, t, 0, 0)
    }
    pub fn noncrit(t: ThreadId) -> Action {
        Action::mk(ActionKind::NonCrit, t, 0, 0)
    }
    pub fn local(t: ThreadId, tag: u16) -> Action {
        Action { kind: ActionKind::LocalStep, thread: t, register: 0, value: 0, tag }
    }

    /// `thr(a)`.
    pub fn thr(&self) -> ThreadId {
        self.thread
    }

    /// `reg(a)`, `None` for thread-local actions.
    pub fn reg(&self) -> Option<RegId> {
        self.kind.has_register().then_some(self.register)
    }

    pub fn val(&self) -> Option<Value> {
        self.kind.has_value().then_some(self.value)
    }

    /// Start of a read, or an instantaneous read.
    pub fn is_read(&self) -> bool {
        matches!(self.kind, ActionKind::StartRead | ActionKind::InstantRead)
    }

    /// Start of a write.
    pub fn is_write(&self) -> bool {
        self.kind == ActionKind::StartWrite
    }

    /// Actions performed by a register on its own (ordering points).
    pub fn is_register_local(&self) -> bool {
        matches!(self.kind, ActionKind::OrderRead | ActionKind::OrderWrite)
    }

    /// Same action on another register id.
    pub fn with_register(mut self, r: RegId) -> Action {
        self.register = r;
        self
    }

    /// Renders with register names resolved through `names`.
    pub fn display<'a>(&'a self, names: &'a [String]) -> ActionDisplay<'a> {
        ActionDisplay { a: self, names: Some(names) }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        ActionDisplay { a: self, names: None }.fmt(f)
    }
}

pub struct ActionDisplay<'a> {
    a: &'a Action,
    names: Option<&'a [String]>,
}

impl fmt::Display for ActionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.a;
        let m = a.kind.mnemonic();
        match a.kind {
            ActionKind::Crit | ActionKind::NonCrit => write!(f, "{m}_{}", a.thread),
            ActionKind::LocalStep => write!(f, "local_{}({})", a.thread, a.tag),
            _ => {
                write!(f, "{m}(t{},", a.thread)?;
                match self.names.and_then(|n| n.get(a.register as usize)) {
                    Some(n) => write!(f, "{n}")?,
                    None => write!(f, "r{}", a.register)?,
                }
                if let Some(v) = a.val() {
                    write!(f, ",{v}")?;
                }
                write!(f, ")")
            }
        }
    }
}
