//! Acceptance report: one PASS/FAIL line per criterion, then a single
//! assertion that all of them passed.
//!
//! Tolerances are exact unless stated on the criterion. The only budget
//! deviation is the 4-bit robust row at three threads, explored with at
//! most `ROBUST_STATES` states; its atomic cells are then inconclusive and
//! the two-thread instance stands in for the T and S columns.

mod common;

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use mxcheck::action::Action;
use mxcheck::check::{verdict_row, CheckOptions, Letter, Outcome, Property, Verdict};
use mxcheck::explore::Budget;
use mxcheck::justness::{equivalent, interferes, ConcurrencySpec};
use mxcheck::lang::compile_thread;
use mxcheck::lang::transform::{full_to_instant, instant_to_full, isomorphic};
use mxcheck::model::{CompositeModel, MemoryModel, ModelOptions};
use mxcheck::oracle::{blocking_agreement, consistency_fuzz, fuzz_walks, naive_model, product_agreement_all, style_agreement};
use mxcheck::registers::{Blocking, Init, Kind, RegisterConfig, Style};
use mxcheck::scenario::{enumerate_scenario_outcomes, Script, MULTI_WRITER, SINGLE_WRITER};
use mxcheck::zoo::{self, Entry};
use mxcheck::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{golden, linearizations};

const ROBUST: &str = "szymanski-4bit-robust";
const ROBUST_STATES: usize = 5_000_000;
/// Largest oracle product attempted; larger configurations are skipped.
const ORACLE_LIMIT: usize = 100_000;
const FUZZ_SAMPLES: usize = 10_000;
const MIN_COMPLETE_THREE_THREAD_ROWS: usize = 15;
const KINDS: [Kind; 3] = [Kind::Safe, Kind::Regular, Kind::Atomic];
const STYLES: [Style; 2] = [Style::InstantRead, Style::FullRead];

/// Writes straight to stderr so the report shows without `--nocapture`.
macro_rules! say {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stderr().lock(), $($t)*);
    }};
}

struct Row {
    entry: &'static Entry,
    verdicts: Vec<Verdict>,
}

impl Row {
    fn letters(&self) -> Vec<Option<Letter>> {
        self.verdicts.iter().map(Verdict::letter).collect()
    }

    fn complete(&self) -> bool {
        self.letters().iter().all(Option::is_some)
    }

    fn shown(&self) -> String {
        self.letters().iter().map(|l| l.map_or("?".to_string(), |l| l.to_string())).collect()
    }
}

struct Report {
    results: Vec<(usize, bool)>,
}

impl Report {
    fn record(&mut self, n: usize, problems: &[String], summary: String) {
        let pass = problems.is_empty();
        say!("criterion {n}: {} {summary}", if pass { "PASS" } else { "FAIL" });
        for p in problems.iter().take(20) {
            say!("    {p}");
        }
        self.results.push((n, pass));
    }
}

fn rows() -> Vec<Row> {
    zoo::list()
        .iter()
        .map(|e| {
            let t0 = Instant::now();
            let budget = if e.name == ROBUST { Budget { max_states: ROBUST_STATES, time: None } } else { Budget::default() };
            let p = e.program().unwrap();
            let verdicts = verdict_row(&p, e.default_threads, &CheckOptions { budget, ..CheckOptions::default() }).unwrap();
            let row = Row { entry: e, verdicts };
            say!("  {:<26} N={} {} (expected {}) {:.1}s", e.name, e.default_threads, row.shown(), e.expected, t0.elapsed().as_secs_f64());
            row
        })
        .collect()
}

fn row_mismatches(row: &Row, allow_inconclusive: &[usize]) -> Vec<String> {
    let want = row.entry.expected_row();
    let mut out = Vec::new();
    for (col, got) in row.letters().into_iter().enumerate() {
        match got {
            Some(l) if l == want[col] => {}
            None if allow_inconclusive.contains(&col) => {}
            _ => out.push(format!("{} {}: got {}, expected {}", row.entry.name, MemoryModel::ALL[col], row.shown(), row.entry.expected)),
        }
    }
    out
}

fn criterion_1(r: &mut Report, rows: &[Row]) {
    let two: Vec<&Row> = rows.iter().filter(|x| x.entry.two_thread()).collect();
    let problems: Vec<String> = two.iter().flat_map(|x| row_mismatches(x, &[])).collect();
    let exact = two.iter().filter(|x| row_mismatches(x, &[]).is_empty()).count();
    r.record(1, &problems, format!("{exact}/{} two-thread rows match exactly", two.len()));
}

fn criterion_2(r: &mut Report, rows: &[Row]) {
    let three: Vec<&Row> = rows.iter().filter(|x| !x.entry.two_thread()).collect();
    let mut problems = Vec::new();
    for x in &three {
        let allowed: &[usize] = if x.entry.name == ROBUST { &[2, 3, 4, 5] } else { &[] };
        problems.extend(row_mismatches(x, allowed));
    }
    let complete = three.iter().filter(|x| x.complete()).count();
    if complete < MIN_COMPLETE_THREE_THREAD_ROWS {
        problems.push(format!("only {complete} complete rows, need {MIN_COMPLETE_THREE_THREAD_ROWS}"));
    }
    // The robust algorithm at two threads for the atomic T and S columns.
    let p = zoo::builtin(ROBUST, 2).unwrap();
    let small = verdict_row(&p, 2, &CheckOptions::default()).unwrap();
    let want = zoo::find(ROBUST).unwrap().expected_row();
    for col in [2, 3] {
        if small[col].letter() != Some(want[col]) {
            problems.push(format!("{ROBUST} N=2 {}: got {:?}, expected {}", MemoryModel::ALL[col], small[col].letter(), want[col]));
        }
    }
    r.record(
        2,
        &problems,
        format!("{complete}/{} three-thread rows complete and exact; {ROBUST} safe/regular exact at N=3, atomic T/S exact at N=2", three.len()),
    );
}

fn scenario(text: &str, kind: Kind, style: Style) -> BTreeSet<Vec<u8>> {
    let cfg = RegisterConfig { id: 0, domain: 3, init: Init::Value(1), kind, style, blocking: Blocking::None };
    enumerate_scenario_outcomes(&cfg, 3, &Script::parse(text).unwrap()).unwrap().tuples
}

fn project(t: &BTreeSet<Vec<u8>>, keep: &[usize]) -> BTreeSet<Vec<u8>> {
    t.iter().map(|v| keep.iter().map(|&i| v[i]).collect()).collect()
}

fn product(sets: &[&[u8]]) -> BTreeSet<Vec<u8>> {
    let mut out = BTreeSet::from([vec![]]);
    for s in sets {
        out = out.into_iter().flat_map(|p| s.iter().map(move |&x| [p.clone(), vec![x]].concat())).collect();
    }
    out
}

fn criterion_3(r: &mut Report) {
    let mut problems = Vec::new();
    let mut check = |what: &str, got: BTreeSet<Vec<u8>>, want: BTreeSet<Vec<u8>>| {
        if got != want {
            problems.push(format!("{what}: got {got:?}, expected {want:?}"));
        }
    };
    let all: &[u8] = &[0, 1, 2];
    for style in STYLES {
        let s = scenario(SINGLE_WRITER, Kind::Safe, style);
        let g = scenario(SINGLE_WRITER, Kind::Regular, style);
        let a = scenario(SINGLE_WRITER, Kind::Atomic, style);
        for (k, t) in [("safe", &s), ("regular", &g), ("atomic", &a)] {
            check(&format!("single-writer {k} {style:?} a,b"), project(t, &[0, 1]), BTreeSet::from([vec![0, 0]]));
        }
        check(&format!("single-writer safe {style:?} c,d,e"), project(&s, &[2, 3, 4]), product(&[all, all, all]));
        check(&format!("single-writer regular {style:?} c,d,e"), project(&g, &[2, 3, 4]), product(&[&[0, 2], &[0, 2], &[0, 2]]));
        let atomic_cde = BTreeSet::from([vec![0, 0, 0], vec![0, 0, 2], vec![0, 2, 0], vec![0, 2, 2], vec![2, 2, 2]]);
        check(&format!("single-writer atomic {style:?} c,d,e"), project(&a, &[2, 3, 4]), atomic_cde);

        let ms = scenario(MULTI_WRITER, Kind::Safe, style);
        let safe_want = product(&[all, all, all, all]).into_iter().map(|v| [v.clone(), vec![v[3]]].concat()).collect();
        check(&format!("multi-writer safe {style:?}"), ms, safe_want);
        let mg = scenario(MULTI_WRITER, Kind::Regular, style);
        check(&format!("multi-writer regular {style:?} a"), project(&mg, &[0]), product(&[&[0, 1]]));
        check(&format!("multi-writer regular {style:?} b"), project(&mg, &[1]), product(&[all]));
        check(&format!("multi-writer regular {style:?} c"), project(&mg, &[2]), product(&[&[1, 2]]));
        check(&format!("multi-writer regular {style:?} d,e"), project(&mg, &[3, 4]), BTreeSet::from([vec![1, 1], vec![2, 2]]));

        for text in [SINGLE_WRITER, MULTI_WRITER] {
            let lin = linearizations(&Script::parse(text).unwrap(), 1);
            check(&format!("atomic {style:?} vs linearizations"), scenario(text, Kind::Atomic, style), lin);
        }
    }
    r.record(3, &problems, "read-value sets of both timing diagrams, both read styles".into());
}

fn criterion_4(r: &mut Report, rows: &[Row]) {
    let mut problems = Vec::new();
    let mut checked = 0;
    for x in rows.iter().filter(|x| x.complete()) {
        for v in x.verdicts.iter().filter(|v| matches!(v.memory.concurrency, ConcurrencySpec::I | ConcurrencySpec::A)) {
            checked += 1;
            for p in [Property::DeadlockFreedom, Property::StarvationFreedom] {
                if v.outcome(p).holds() != Some(false) {
                    problems.push(format!("{} {}: {} does not fail", x.entry.name, v.memory, p.short()));
                }
            }
        }
    }
    r.record(4, &problems, format!("DF and SF fail in all {checked} atomic/I and atomic/A cells of complete rows"));
}

fn criterion_5(r: &mut Report) {
    let mut problems = Vec::new();
    for (name, f) in golden::ALL {
        if let Err(e) = f() {
            problems.push(format!("{name}: {e}"));
        }
    }
    r.record(5, &problems, format!("{} known counterexamples replay with the expected structure", golden::ALL.len()));
}

fn action_universe() -> Vec<Action> {
    let mut out = Vec::new();
    for t in 0..3 {
        out.extend([Action::crit(t), Action::noncrit(t), Action::local(t, 0), Action::local(t, 1)]);
        for r in 0..2 {
            out.extend([Action::start_read(t, r), Action::order_read(t, r), Action::order_write(t, r), Action::finish_write(t, r)]);
            for d in 0..2 {
                out.extend([Action::finish_read(t, r, d), Action::instant_read(t, r, d), Action::start_write(t, r, d)]);
            }
        }
    }
    out
}

fn relation_properties(problems: &mut Vec<String>) -> String {
    let u = action_universe();
    let cs = ConcurrencySpec::ALL;
    for a in &u {
        for c in cs {
            if !interferes(c, a, a) {
                problems.push(format!("relations: {a} concurrent with itself under {c}"));
            }
        }
        for b in &u {
            for w in cs.windows(2) {
                if interferes(w[0], a, b) && !interferes(w[1], a, b) {
                    problems.push(format!("relations: {a}, {b} interfere under {} but not {}", w[0], w[1]));
                }
            }
            if !equivalent(a, b) {
                continue;
            }
            for x in &u {
                for c in cs {
                    if interferes(c, a, x) != interferes(c, b, x) || interferes(c, x, a) != interferes(c, x, b) {
                        problems.push(format!("relations: {a} and {b} are equivalent but differ against {x} under {c}"));
                    }
                }
            }
        }
    }
    format!("{} actions", u.len())
}

fn fuzz(problems: &mut Vec<String>) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut models, mut swaps) = (0, 0);
    for e in zoo::list() {
        let p = e.program().unwrap();
        for kind in KINDS {
            for style in STYLES {
                let m = CompositeModel::build(&p, e.default_threads, ModelOptions { kind, style, blocking: Blocking::None }).unwrap();
                let rep = consistency_fuzz(&m, FUZZ_SAMPLES, &mut rng);
                models += 1;
                swaps += rep.swaps_checked;
                if !rep.passed() || rep.consistency_checked != FUZZ_SAMPLES {
                    problems.push(format!("fuzz {} {kind:?} {style:?}: {rep:?}", e.name));
                }
            }
        }
    }
    // Raw statuses, where the swap property holds only up to congruence.
    for name in ["peterson", "dekker", "kessels"] {
        let p = zoo::builtin(name, 2).unwrap();
        let o = ModelOptions { kind: Kind::Atomic, style: Style::FullRead, blocking: Blocking::None };
        let m = naive_model(&p, 2, o, &[0, 0, 0], ORACLE_LIMIT).or_else(|_| naive_model(&p, 2, o, &[0, 0, 0, 0], ORACLE_LIMIT)).unwrap();
        let cong = |a: &u32, b: &u32| m.congruent(*a, *b);
        let rep = fuzz_walks(&m.product.lts, &[m.product.lts.init], FUZZ_SAMPLES, Some(&cong), &mut rng);
        swaps += rep.swaps_checked;
        if !rep.passed() || rep.swaps_checked == 0 {
            problems.push(format!("raw swap fuzz {name}: {rep:?}"));
        }
    }
    format!("{models} models x {FUZZ_SAMPLES} samples, {swaps} swaps")
}

fn round_trips(problems: &mut Vec<String>) -> String {
    let mut threads = 0;
    for e in zoo::list() {
        let p = e.program().unwrap();
        let n = e.default_threads;
        for i in 0..n as u8 {
            let full = compile_thread(&p, n, i, Style::FullRead).unwrap();
            let inst = compile_thread(&p, n, i, Style::InstantRead).unwrap();
            let there = isomorphic(&full_to_instant(&full).unwrap().lts, &inst.lts).unwrap();
            let back = isomorphic(&instant_to_full(&inst).unwrap().lts, &full.lts).unwrap();
            if !(there && back) {
                problems.push(format!("round trip {} thread {i}: to instant {there}, to full {back}", e.name));
            }
            threads += 1;
        }
    }
    format!("{threads} threads round-trip")
}

fn verdict_sanity(rows: &[Row], problems: &mut Vec<String>) -> String {
    let mut lassos = 0;
    for x in rows {
        let p = x.entry.program().unwrap();
        let n = x.entry.default_threads;
        for v in &x.verdicts {
            if !v.consistent() {
                problems.push(format!("{} {}: SF holds but DF fails", x.entry.name, v.memory));
            }
            let m = CompositeModel::build(&p, n, ModelOptions::instant(v.memory.kind)).unwrap();
            for prop in [Property::DeadlockFreedom, Property::StarvationFreedom] {
                if let Outcome::Violated(cex) = v.outcome(prop) {
                    lassos += 1;
                    if !golden::characterisation_holds(&m, v.memory.concurrency, cex) {
                        problems.push(format!("{} {} {}: witness not just by characterisation", x.entry.name, v.memory, prop.short()));
                    }
                }
            }
        }
    }
    format!("SF implies DF in every verdict, {lassos} liveness witnesses just")
}

fn oracle_products(problems: &mut Vec<String>) -> String {
    let (mut agreed, mut skipped) = (0, 0);
    for e in zoo::list() {
        let p = e.program().unwrap();
        for kind in KINDS {
            for style in STYLES {
                let o = ModelOptions { kind, style, blocking: Blocking::None };
                match product_agreement_all(&p, e.default_threads, o, ORACLE_LIMIT) {
                    Ok(all) => {
                        for a in all {
                            if a.agrees() {
                                agreed += 1;
                            } else {
                                problems.push(format!("oracle {} {kind:?} {style:?}: {a:?}", e.name));
                            }
                        }
                    }
                    Err(Error::Budget(_)) => skipped += 1,
                    Err(err) => problems.push(format!("oracle {} {kind:?} {style:?}: {err}", e.name)),
                }
            }
        }
    }
    if agreed == 0 {
        problems.push("oracle: nothing within the limit".into());
    }
    format!("{agreed} initial assignments agree with the oracle product, {skipped} configurations over {ORACLE_LIMIT} states skipped")
}

fn criterion_6(r: &mut Report, rows: &[Row]) {
    let mut problems = Vec::new();
    let parts = [
        relation_properties(&mut problems),
        fuzz(&mut problems),
        round_trips(&mut problems),
        verdict_sanity(rows, &mut problems),
        oracle_products(&mut problems),
    ];
    r.record(6, &problems, parts.join("; "));
}

fn criterion_7(r: &mut Report) {
    let mut problems = Vec::new();
    let mut pairs = 0;
    for name in ["peterson", "dekker", "kessels", "attiya-welch"] {
        let e = zoo::find(name).unwrap();
        let p = e.program().unwrap();
        for m in MemoryModel::ALL {
            let lp = style_agreement(&p, 2, m, Budget::default()).unwrap();
            pairs += 1;
            if !lp.agrees() || lp.left != e.expected(m) {
                problems.push(format!("{name} {m}: full-read {}, instant-read {}, expected {}", lp.left, lp.right, e.expected(m)));
            }
        }
        for c in [ConcurrencySpec::S, ConcurrencySpec::I, ConcurrencySpec::A] {
            let lp = blocking_agreement(&p, 2, c, Budget::default()).unwrap();
            pairs += 1;
            if !lp.agrees() {
                problems.push(format!("{name} atomic/{c}: instant {}, blocking {}", lp.left, lp.right));
            }
        }
    }
    r.record(7, &problems, format!("{pairs} backend pairs agree"));
}

#[test]
fn acceptance() {
    let mut r = Report { results: Vec::new() };
    let rows = rows();
    criterion_1(&mut r, &rows);
    criterion_2(&mut r, &rows);
    criterion_3(&mut r);
    criterion_4(&mut r, &rows);
    criterion_5(&mut r);
    criterion_6(&mut r, &rows);
    criterion_7(&mut r);
    let failed: Vec<usize> = r.results.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
