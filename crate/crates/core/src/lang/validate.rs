//! Checks of the thread rules on an arbitrary thread LTS.

use serde::Serialize;

use crate::action::ActionKind;
use crate::registers::Style;

use super::build::{phases, ThreadLts};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rule {
    /// Only own actions; no register-internal ordering steps.
    OwnActions,
    /// Reads of every domain value are enabled together.
    ReadTotality,
    /// A started operation is followed only by its finish.
    AwaitResponse,
    /// A finish happens only right after the matching start.
    MatchedFinish,
    /// `crit` and `noncrit` alternate, `noncrit` first.
    Alternation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    pub state: u32,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Report {
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

pub fn validate_thread_properties(t: &ThreadLts) -> Report {
    let lts = &t.lts;
    let n = lts.num_states();
    let mut r = Report::default();
    let mut add = |rule, state: usize, message: String| r.violations.push(Violation { rule, state: state as u32, message });
    let mut preds: Vec<Vec<(crate::action::Action, u32)>> = vec![Vec::new(); n];
    for (s, a, u) in lts.transitions() {
        preds[u as usize].push((a, s));
    }
    for s in 0..n {
        let succ = &lts.succ[s];
        for &(a, u) in succ {
            if a.thread != t.thread || matches!(a.kind, ActionKind::OrderRead | ActionKind::OrderWrite) {
                add(Rule::OwnActions, s, format!("action {} is not a thread action of thread {}", a.display(&[]), t.thread));
            }
            let style_ok = match (t.style, a.kind) {
                (Style::FullRead, ActionKind::InstantRead) | (Style::InstantRead, ActionKind::StartRead | ActionKind::FinishRead) => false,
                _ => true,
            };
            if !style_ok {
                add(Rule::OwnActions, s, format!("{} does not belong to this read style", a.kind.mnemonic()));
            }
            let follow = match a.kind {
                ActionKind::StartRead => Some(ActionKind::FinishRead),
                ActionKind::StartWrite => Some(ActionKind::FinishWrite),
                _ => None,
            };
            if let Some(k) = follow {
                let next = &lts.succ[u as usize];
                if next.is_empty() || next.iter().any(|(b, _)| b.kind != k || b.register != a.register || b.thread != a.thread) {
                    add(Rule::AwaitResponse, u as usize, format!("after {} only its response may be enabled", a.kind.mnemonic()));
                }
            }
        }
        for kind in [ActionKind::FinishRead, ActionKind::FinishWrite] {
            let start = if kind == ActionKind::FinishRead { ActionKind::StartRead } else { ActionKind::StartWrite };
            for &(a, _) in succ.iter().filter(|(a, _)| a.kind == kind) {
                let matched = s as u32 != lts.init
                    && !preds[s].is_empty()
                    && preds[s].iter().all(|(b, _)| b.kind == start && b.register == a.register && b.thread == a.thread);
                if !matched {
                    add(Rule::MatchedFinish, s, format!("{} enabled without a matching start just before", a.kind.mnemonic()));
                    break;
                }
            }
        }
        for kind in [ActionKind::FinishRead, ActionKind::InstantRead] {
            let mut regs: Vec<u16> = succ.iter().filter(|(a, _)| a.kind == kind).map(|(a, _)| a.register).collect();
            regs.sort();
            regs.dedup();
            for reg in regs {
                let dom = t.domains.get(reg as usize).copied().unwrap_or(0);
                for d in 0..dom {
                    if !succ.iter().any(|(a, _)| a.kind == kind && a.register == reg && a.value == d) {
                        add(Rule::ReadTotality, s, format!("read of register {reg} cannot return {d}"));
                    }
                }
            }
        }
    }
    if let Err(e) = phases(lts) {
        add(Rule::Alternation, lts.init as usize, e.to_string());
    }
    r
}
