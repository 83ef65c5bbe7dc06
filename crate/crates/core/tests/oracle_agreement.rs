//! The engine against the brute-force oracle: literal products, register
//! processes without canonicalisation, and random-walk property checks.

use mxcheck::action::Action;
use mxcheck::lts::Lts;
use mxcheck::model::{CompositeModel, ModelOptions};
use mxcheck::oracle::{
    compose_agrees, consistency_fuzz, fuzz_walks, naive_model, naive_register_lts, product_agreement, product_agreement_all,
    thread_components, NaiveRegister,
};
use mxcheck::registers::{register_lts, Blocking, Init, Kind, RegisterConfig, Style};
use mxcheck::zoo;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LIMIT: usize = 400_000;
const KINDS: [Kind; 3] = [Kind::Safe, Kind::Regular, Kind::Atomic];
const STYLES: [Style; 2] = [Style::InstantRead, Style::FullRead];

fn opts(kind: Kind, style: Style) -> ModelOptions {
    ModelOptions { kind, style, blocking: Blocking::None }
}

#[test]
fn peterson_atomic_turn_zero_matches_naive_enumeration() {
    let p = zoo::builtin("peterson", 2).unwrap();
    let a = product_agreement(&p, 2, ModelOptions::instant(Kind::Atomic), &[0, 0, 0], LIMIT).unwrap();
    assert!(a.agrees(), "{a:?}");
    assert_eq!(a.engine_me, Some(true));
    assert!(a.naive_states >= a.engine_states);
}

#[test]
fn small_algorithms_agree_in_every_register_model() {
    for name in ["peterson", "dekker", "kessels", "attiya-welch", "anderson"] {
        let p = zoo::builtin(name, 2).unwrap();
        for kind in KINDS {
            for style in STYLES {
                for a in product_agreement_all(&p, 2, opts(kind, style), LIMIT).unwrap() {
                    assert!(a.agrees(), "{name} {kind:?} {style:?}: {a:?}");
                }
            }
        }
    }
}

#[test]
fn blocking_variants_agree() {
    for name in ["peterson", "dekker"] {
        let p = zoo::builtin(name, 2).unwrap();
        for blocking in [Blocking::BlockAll, Blocking::BlockWritesAndReadsOfWrites, Blocking::BlockWritesOnly] {
            let o = ModelOptions { kind: Kind::Atomic, style: Style::FullRead, blocking };
            for a in product_agreement_all(&p, 2, o, LIMIT).unwrap() {
                assert!(a.agrees(), "{name} {blocking:?}: {a:?}");
            }
        }
    }
}

#[test]
fn three_thread_algorithm_agrees() {
    let p = zoo::builtin("burns-lynch", 3).unwrap();
    for kind in KINDS {
        for a in product_agreement_all(&p, 3, ModelOptions::instant(kind), LIMIT).unwrap() {
            assert!(a.agrees(), "{kind:?}: {a:?}");
        }
    }
}

#[test]
fn oracle_sees_mutual_exclusion_violation() {
    let p = zoo::builtin("peterson", 2).unwrap();
    let m = naive_model(&p, 2, ModelOptions::instant(Kind::Safe), &[0, 0, 0], LIMIT).unwrap();
    let any_violation = (0..2u8).any(|t| {
        let m = naive_model(&p, 2, ModelOptions::instant(Kind::Safe), &[0, 0, t], LIMIT).unwrap();
        !m.mutual_exclusion_holds()
    });
    assert!(m.product.lts.num_states() > 0);
    assert!(any_violation);
}

#[test]
fn compose_matches_literal_product() {
    let p = zoo::builtin("peterson", 2).unwrap();
    for kind in KINDS {
        let (mut comps, regs) = thread_components(&p, 2, Style::InstantRead).unwrap();
        for (r, &(domain, _)) in regs.iter().enumerate() {
            let cfg = RegisterConfig { id: r as u16, domain, init: Init::Value(0), kind, style: Style::InstantRead, blocking: Blocking::None };
            comps.push(register_lts(&cfg, 2).unwrap().0);
        }
        assert!(compose_agrees(&comps, LIMIT).unwrap());
    }
}

#[test]
fn register_only_products_agree() {
    for kind in KINDS {
        for style in STYLES {
            for threads in 1..=2u8 {
                for domain in 1..=3u8 {
                    let cfg = RegisterConfig { id: 0, domain, init: Init::Value(0), kind, style, blocking: Blocking::None };
                    let (lts, _) = register_lts(&cfg, threads).unwrap();
                    assert!(compose_agrees(&[lts], LIMIT).unwrap());
                }
            }
        }
    }
}

#[test]
fn thread_consistency_holds_for_every_corpus_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for e in zoo::list() {
        let n = e.default_threads;
        let p = e.program().unwrap();
        for kind in KINDS {
            for style in STYLES {
                let m = CompositeModel::build(&p, n, opts(kind, style)).unwrap();
                let rep = consistency_fuzz(&m, 10_000, &mut rng);
                assert!(rep.passed(), "{} {kind:?} {style:?}: {:?}", e.name, &rep.failures[..rep.failures.len().min(3)]);
                assert_eq!(rep.consistency_checked, 10_000, "{} {kind:?} {style:?}", e.name);
                if kind == Kind::Atomic && style == Style::FullRead {
                    assert!(rep.swaps_checked > 1000, "{}: {rep:?}", e.name);
                }
            }
        }
    }
}

#[test]
fn swap_property_on_raw_full_read_atomic_statuses() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in ["peterson", "dekker", "kessels"] {
        let p = zoo::builtin(name, 2).unwrap();
        let m = naive_model(&p, 2, ModelOptions { kind: Kind::Atomic, style: Style::FullRead, blocking: Blocking::None }, &[0, 0, 0], LIMIT)
            .or_else(|_| naive_model(&p, 2, ModelOptions { kind: Kind::Atomic, style: Style::FullRead, blocking: Blocking::None }, &[0, 0, 0, 0], LIMIT))
            .unwrap();
        let cong = |a: &u32, b: &u32| m.congruent(*a, *b);
        let rep = fuzz_walks(&m.product.lts, &[m.product.lts.init], 10_000, Some(&cong), &mut rng);
        assert!(rep.passed(), "{name}: {:?}", &rep.failures[..rep.failures.len().min(3)]);
        assert!(rep.swaps_checked > 1000 && rep.swaps_skipped > 0, "{name}: {rep:?}");
    }
}

/// A register whose reads by thread 0 vanish once another thread starts writing.
fn broken_register() -> Lts {
    let reg = NaiveRegister { id: 0, kind: Kind::Atomic, style: Style::InstantRead, blocking: Blocking::None, domain: 2, threads: 2 };
    let (mut lts, statuses) = naive_register_lts(&reg, 0, LIMIT).unwrap();
    for (s, st) in statuses.iter().enumerate() {
        if st.wrts.contains(&1) {
            lts.succ[s].retain(|(a, _)| !(a.thread == 0 && a.kind == mxcheck::ActionKind::InstantRead));
        }
    }
    lts
}

#[test]
fn mutation_breaks_thread_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lts = broken_register();
    let rep = fuzz_walks(&lts, &[lts.init], 10_000, None, &mut rng);
    assert!(!rep.passed());
    assert!(rep.failures.iter().all(|f| f.starts_with("thread-consistency")), "{:?}", rep.failures[0]);
    assert!(rep.failures.iter().any(|f| f.contains(&Action::instant_read(0, 0, 0).to_string())), "{:?}", rep.failures[0]);
    let (good, _) = naive_register_lts(
        &NaiveRegister { id: 0, kind: Kind::Atomic, style: Style::InstantRead, blocking: Blocking::None, domain: 2, threads: 2 },
        0,
        LIMIT,
    )
    .unwrap();
    assert!(fuzz_walks(&good, &[good.init], 10_000, None, &mut rng).passed());
}
