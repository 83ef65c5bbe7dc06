//! Witnesses for four known failures, checked by structure after replay.

mod common;

use common::golden;

#[test]
fn dekker_safe_deadlock_through_new_old_inversion() {
    golden::dekker_safe_deadlock().unwrap();
}

#[test]
fn aravind_atomic_s_deadlock_loops_on_stage_writes() {
    golden::aravind_atomic_s_deadlock().unwrap();
}

#[test]
fn dijkstra_safe_deadlock_restores_k() {
    golden::dijkstra_safe_deadlock().unwrap();
}

#[test]
fn kessels_regular_mutual_exclusion_via_new_old_inversion() {
    golden::kessels_regular_exclusion().unwrap();
}

#[test]
fn dekker_atomic_s_starvation_lets_one_thread_cycle() {
    golden::dekker_atomic_s_starvation().unwrap();
}
