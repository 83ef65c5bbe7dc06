//! Read-value sets for the two classic timing diagrams: a single writer
//! racing three readers, and three overlapping writers with five reads.

use std::collections::BTreeSet;

use mxcheck::registers::{Blocking, Init, Kind, RegisterConfig, Style};
use mxcheck::scenario::{enumerate_scenario_outcomes, Script};

mod common;

use common::linearizations;

const SINGLE_WRITER: &str = "
w1 write t0 0 0 1
a  read  t1   2 4
b  read  t2   3 5
c  read  t1   6 8
w2 write t0 2 7 13
d  read  t2   9 12
e  read  t1   10 11
";

const MULTI_WRITER: &str = "
w1 write t0 0 0 1
w2 write t1 1 2 7
a  read  t2   3 4
b  read  t0   5 8
w3 write t2 2 6 11
c  read  t1   9 12
d  read  t0   13 14
e  read  t2   15 16
";

fn run(text: &str, kind: Kind, style: Style) -> (Vec<String>, BTreeSet<Vec<u8>>) {
    let cfg = RegisterConfig { id: 0, domain: 3, init: Init::Value(1), kind, style, blocking: Blocking::None };
    let o = enumerate_scenario_outcomes(&cfg, 3, &Script::parse(text).unwrap()).unwrap();
    (o.reads, o.tuples)
}

/// Projects (a,b,c,d,e) tuples onto the positions in `keep`.
fn project(t: &BTreeSet<Vec<u8>>, keep: &[usize]) -> BTreeSet<Vec<u8>> {
    t.iter().map(|v| keep.iter().map(|&i| v[i]).collect()).collect()
}

fn product(sets: &[&[u8]]) -> BTreeSet<Vec<u8>> {
    let mut out = BTreeSet::from([vec![]]);
    for s in sets {
        out = out
            .into_iter()
            .flat_map(|p| s.iter().map(move |&x| {
                let mut q = p.clone();
                q.push(x);
                q
            }))
            .collect();
    }
    out
}

#[test]
fn single_writer_atomic_has_five_outcomes() {
    for style in [Style::FullRead, Style::InstantRead] {
        let (reads, t) = run(SINGLE_WRITER, Kind::Atomic, style);
        assert_eq!(reads, ["a", "b", "c", "d", "e"]);
        let cde = project(&t, &[2, 3, 4]);
        let mut want = product(&[&[0], &[0, 2], &[0, 2]]);
        want.insert(vec![2, 2, 2]);
        assert_eq!(cde, want, "{style:?}");
        assert_eq!(project(&t, &[0, 1]), BTreeSet::from([vec![0, 0]]));
    }
}

#[test]
fn single_writer_regular_has_eight_outcomes() {
    for style in [Style::FullRead, Style::InstantRead] {
        let (_, t) = run(SINGLE_WRITER, Kind::Regular, style);
        assert_eq!(project(&t, &[2, 3, 4]), product(&[&[0, 2], &[0, 2], &[0, 2]]));
    }
}

#[test]
fn single_writer_safe_has_twenty_seven_outcomes() {
    for style in [Style::FullRead, Style::InstantRead] {
        let (_, t) = run(SINGLE_WRITER, Kind::Safe, style);
        let cde = project(&t, &[2, 3, 4]);
        assert_eq!(cde.len(), 27);
        assert_eq!(cde, product(&[&[0, 1, 2], &[0, 1, 2], &[0, 1, 2]]));
    }
}

#[test]
fn multi_writer_safe() {
    for style in [Style::FullRead, Style::InstantRead] {
        let (_, t) = run(MULTI_WRITER, Kind::Safe, style);
        let all = [0u8, 1, 2];
        let want: BTreeSet<Vec<u8>> = product(&[&all, &all, &all, &all])
            .into_iter()
            .map(|mut v| {
                v.push(v[3]);
                v
            })
            .collect();
        assert_eq!(t, want, "{style:?}");
    }
}

#[test]
fn multi_writer_regular() {
    for style in [Style::FullRead, Style::InstantRead] {
        let (_, t) = run(MULTI_WRITER, Kind::Regular, style);
        assert_eq!(project(&t, &[0]), product(&[&[0, 1]]));
        assert_eq!(project(&t, &[1]), product(&[&[0, 1, 2]]));
        assert_eq!(project(&t, &[2]), product(&[&[1, 2]]));
        assert_eq!(project(&t, &[3, 4]), BTreeSet::from([vec![1, 1], vec![2, 2]]));
    }
}

#[test]
fn multi_writer_atomic_last_reads_agree() {
    for style in [Style::FullRead, Style::InstantRead] {
        let (_, t) = run(MULTI_WRITER, Kind::Atomic, style);
        assert!(t.iter().all(|v| v[3] == v[4]));
        let (_, reg) = run(MULTI_WRITER, Kind::Regular, style);
        assert!(t.is_subset(&reg));
    }
}

#[test]
fn atomic_outcomes_match_linearizations() {
    for text in [SINGLE_WRITER, MULTI_WRITER] {
        let script = Script::parse(text).unwrap();
        let want = linearizations(&script, 1);
        for style in [Style::FullRead, Style::InstantRead] {
            let (_, t) = run(text, Kind::Atomic, style);
            assert_eq!(t, want, "{style:?}");
        }
    }
}

#[test]
fn multi_writer_atomic_orders_agree() {
    let (_, t) = run(MULTI_WRITER, Kind::Atomic, Style::FullRead);
    for v in &t {
        if v[0] == 1 && v[1] == 2 {
            assert_eq!(v[2], 2);
        }
    }
    assert!(t.iter().any(|v| v[2] != v[3]));
}
