//! Helpers shared by the integration tests.
#![allow(dead_code)]

pub mod golden;

use std::collections::BTreeSet;

/// Independent oracle: every total order of the operations that respects
/// real-time precedence, with each read returning the latest preceding write.
pub fn linearizations(script: &mxcheck::scenario::Script, init: u8) -> BTreeSet<Vec<u8>> {
    use mxcheck::scenario::OpKind;
    let ops = &script.ops;
    let n = ops.len();
    let mut out = BTreeSet::new();
    let mut order = Vec::new();
    let mut used = vec![false; n];
    fn rec(
        ops: &[mxcheck::scenario::Operation],
        order: &mut Vec<usize>,
        used: &mut Vec<bool>,
        init: u8,
        out: &mut BTreeSet<Vec<u8>>,
    ) {
        let n = ops.len();
        if order.len() == n {
            let mut cur = init;
            let mut vals = vec![0u8; n];
            for &i in order.iter() {
                match ops[i].kind {
                    OpKind::Write(v) => cur = v,
                    OpKind::Read => vals[i] = cur,
                }
            }
            out.insert((0..n).filter(|&i| ops[i].kind == OpKind::Read).map(|i| vals[i]).collect());
            return;
        }
        for i in 0..n {
            // i may go next only if every op that ended before i began is placed.
            if !used[i] && (0..n).all(|j| used[j] || ops[j].end > ops[i].begin) {
                used[i] = true;
                order.push(i);
                rec(ops, order, used, init, out);
                order.pop();
                used[i] = false;
            }
        }
    }
    rec(ops, &mut order, &mut used, init, &mut out);
    out
}
