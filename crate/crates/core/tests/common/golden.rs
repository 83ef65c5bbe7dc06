//! Known counterexamples, each checked by structure after replay.
//!
//! Every check returns `Err` with a reason instead of panicking, so the
//! acceptance report can print a line per failure.

use std::collections::BTreeSet;

use mxcheck::action::{Action, ActionKind, RegId, ThreadId, Value};
use mxcheck::check::{check_model, CexKind, CheckOptions, Counterexample, Property, PropertySet};
use mxcheck::justness::{just_by_characterisation, thread_enabled_actions, ConcurrencySpec};
use mxcheck::model::{local_enabled, CompositeModel, MemoryModel, ModelOptions};
use mxcheck::registers::Kind;
use mxcheck::trace::replay;
use mxcheck::zoo;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($c:expr, $($msg:tt)+) => {
        if !$c {
            return Err(format!($($msg)+));
        }
    };
}

pub const ALL: [(&str, fn() -> Check); 5] = [
    ("dekker safe/T DF", dekker_safe_deadlock),
    ("aravind atomic/S DF", aravind_atomic_s_deadlock),
    ("dijkstra safe/T DF", dijkstra_safe_deadlock),
    ("kessels regular/T ME", kessels_regular_exclusion),
    ("dekker atomic/S SF", dekker_atomic_s_starvation),
];

fn model(name: &str, n: usize, kind: Kind) -> Result<CompositeModel, String> {
    let p = zoo::builtin(name, n).map_err(|e| e.to_string())?;
    CompositeModel::build(&p, n, ModelOptions::instant(kind)).map_err(|e| e.to_string())
}

pub fn witness(m: &CompositeModel, mem: &str, prop: Property) -> Result<Counterexample, String> {
    let mem: MemoryModel = mem.parse()?;
    let opts = CheckOptions { properties: PropertySet::only(prop), ..CheckOptions::default() };
    let v = check_model(m, &[mem], &opts).map_err(|e| e.to_string())?.remove(0);
    let cex = v.outcome(prop).counterexample().ok_or_else(|| format!("{} holds under {mem}", prop.short()))?.clone();
    replay(m, mem.concurrency, &cex).map_err(|e| format!("replay: {e}"))?;
    if cex.kind != CexKind::SafetyTrace {
        ensure!(characterisation_holds(m, mem.concurrency, &cex), "cycle is not just by the thread-enabled characterisation");
    }
    Ok(cex)
}

/// Just-path test from thread-enabled actions, independent of the closure test.
pub fn characterisation_holds(m: &CompositeModel, c: ConcurrencySpec, cex: &Counterexample) -> bool {
    let last = cex.steps.last().map_or(&cex.initial, |s| &s.state);
    let cycle: Vec<Action> = cex.cycle().iter().map(|s| s.action).collect();
    let te = thread_enabled_actions(&cycle, m.num_threads(), |t| local_enabled(&m.threads[t as usize], last[t as usize]));
    just_by_characterisation(c, &te, &cycle)
}

pub fn reg(m: &CompositeModel, name: &str) -> Result<RegId, String> {
    m.register_names().iter().position(|n| n == name).map(|i| i as RegId).ok_or_else(|| format!("no register {name}"))
}

/// A read of `r` by `reader` during one write interval of `r` that returns
/// the value being written, followed within the same interval by a read
/// returning the value stored before the write.
pub fn new_old_inversion(m: &CompositeModel, cex: &Counterexample, r: RegId, reader: ThreadId) -> bool {
    let steps = &cex.steps;
    for (i, s) in steps.iter().enumerate() {
        let a = s.action;
        if a.kind != ActionKind::StartWrite || a.register != r || a.thread == reader {
            continue;
        }
        let old: Value = m.values(cex.state_before(i))[r as usize];
        let new = a.value;
        let end = steps[i + 1..]
            .iter()
            .position(|x| x.action.kind == ActionKind::FinishWrite && x.action.register == r && x.action.thread == a.thread)
            .map_or(steps.len(), |k| i + 1 + k);
        let reads: Vec<Value> = steps[i + 1..end]
            .iter()
            .filter(|x| x.action.kind == ActionKind::InstantRead && x.action.register == r && x.action.thread == reader)
            .map(|x| x.action.value)
            .collect();
        if new != old {
            if let Some(p) = reads.iter().position(|&v| v == new) {
                if reads[p + 1..].contains(&old) {
                    return true;
                }
            }
        }
    }
    false
}

/// Dekker on safe registers deadlocks after a new-old inversion on a flag.
pub fn dekker_safe_deadlock() -> Check {
    let m = model("dekker", 2, Kind::Safe)?;
    let cex = witness(&m, "safe/T", Property::DeadlockFreedom)?;
    ensure!(cex.kind == CexKind::LivenessLasso, "expected a lasso, got {:?}", cex.kind);
    let mut inverted = false;
    for t in 0..2 {
        inverted |= new_old_inversion(&m, &cex, reg(&m, &format!("flag[{}]", 1 - t))?, t);
    }
    ensure!(inverted, "no new-old inversion on flag");
    ensure!(cex.cycle().iter().all(|s| s.action.kind != ActionKind::Crit), "the cycle enters the critical section");
    Ok(())
}

/// Aravind under atomic/S: one thread keeps rewriting its stage while
/// another waits to read it.
pub fn aravind_atomic_s_deadlock() -> Check {
    let m = model("aravind", 3, Kind::Atomic)?;
    let cex = witness(&m, "atomic/S", Property::DeadlockFreedom)?;
    let cycle = cex.cycle();
    ensure!(!cycle.is_empty(), "empty cycle");
    let looper = cycle[0].action.thread;
    ensure!(cycle.iter().all(|s| s.action.thread == looper), "more than one thread acts in the cycle");
    let stage = reg(&m, &format!("stage[{looper}]"))?;
    let written: Vec<Value> = cycle.iter().filter(|s| s.action.kind == ActionKind::StartWrite && s.action.register == stage).map(|s| s.action.value).collect();
    ensure!(written.contains(&0) && written.contains(&1), "stage[{looper}] not written both ways: {written:?}");
    let last = &cycle.last().unwrap().state;
    let mut blocked = false;
    for t in (0..3).filter(|&t| t != looper) {
        let raised = m.values(last)[reg(&m, &format!("stage[{t}]"))? as usize] == 1;
        let waits = local_enabled(&m.threads[t as usize], last[t as usize]).iter().any(|a| a.kind == ActionKind::InstantRead && a.register == stage);
        blocked |= raised && waits;
    }
    ensure!(blocked, "no raised thread waits on stage[{looper}]");
    Ok(())
}

/// Dijkstra on safe registers with `k = 2` initially: two overlapping
/// writes to `k` can leave it at 2, and threads 0 and 1 loop forever.
pub fn dijkstra_safe_deadlock() -> Check {
    let p = zoo::builtin("dijkstra", 3).map_err(|e| e.to_string())?;
    let init = [1, 1, 1, 1, 1, 1, 2];
    let m = CompositeModel::build_with_init(&p, 3, ModelOptions::instant(Kind::Safe), &init).map_err(|e| e.to_string())?;
    let k = reg(&m, "k")?;
    ensure!(m.assignments[0][k as usize] == 2, "k is not initially 2");
    let cex = witness(&m, "safe/T", Property::DeadlockFreedom)?;
    ensure!(cex.steps.iter().all(|s| s.action.thread != 2 || s.action.kind == ActionKind::NonCrit), "thread 2 does more than stay idle");
    let cycle = cex.cycle();
    let writers: BTreeSet<ThreadId> = cycle.iter().filter(|s| s.action.kind == ActionKind::StartWrite && s.action.register == k).map(|s| s.action.thread).collect();
    ensure!(writers == BTreeSet::from([0, 1]), "writers of k in the cycle: {writers:?}");
    let overlapping = cycle.iter().any(|s| s.action.kind == ActionKind::StartWrite && s.action.register == k && m.status(&s.state, k).wrts.count_ones() == 2);
    ensure!(overlapping, "writes to k never overlap");
    let restored = cycle.iter().any(|s| s.action.kind == ActionKind::FinishWrite && s.action.register == k && m.values(&s.state)[k as usize] == 2);
    ensure!(restored, "no overlapping write leaves k = 2");
    Ok(())
}

/// Kessels on regular registers: from all-zero registers, thread 1 reads
/// `r[1]` new then old and both threads reach the critical section.
pub fn kessels_regular_exclusion() -> Check {
    let m = model("kessels", 2, Kind::Regular)?;
    let cex = witness(&m, "regular/T", Property::MutualExclusion)?;
    ensure!(cex.kind == CexKind::SafetyTrace, "expected a safety trace, got {:?}", cex.kind);
    ensure!(cex.assignment.iter().all(|&v| v == 0), "registers do not all start at 0: {:?}", cex.assignment);
    ensure!(new_old_inversion(&m, &cex, reg(&m, "r[1]")?, 1), "thread 1 does not read r[1] new then old");
    let last = &cex.steps.last().ok_or("empty trace")?.state;
    ensure!((0..2).all(|t| m.threads[t].enables_crit(last[t])), "not both threads at the critical section");
    Ok(())
}

/// Dekker under atomic/S: one thread starves while the other completes
/// full rounds.
pub fn dekker_atomic_s_starvation() -> Check {
    let m = model("dekker", 2, Kind::Atomic)?;
    let cex = witness(&m, "atomic/S", Property::StarvationFreedom)?;
    let starving = cex.thread.ok_or("no starving thread recorded")?;
    let cycle = cex.cycle();
    ensure!(cycle.iter().all(|s| s.action.thread != starving), "the starving thread acts in the cycle");
    let other = 1 - starving;
    for kind in [ActionKind::NonCrit, ActionKind::Crit] {
        ensure!(cycle.iter().any(|s| s.action.thread == other && s.action.kind == kind), "thread {other} never does {kind:?} in the cycle");
    }
    Ok(())
}
