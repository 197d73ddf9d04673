//! Controller-level properties: replay determinism, delta frugality, and
//! serial semantics of scenario processing.

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use mstpath_core::controller::{replay_ops, run_scenario, ControlOp, ControllerState, ScenarioEvent};
use mstpath_core::mst::{compute_mst, orient_tree};
use mstpath_core::ruleplan::{serialize_entries, synthesize_rules, LpmKey};
use mstpath_core::testgen::{random_topology, TopoSpec};
use mstpath_core::topology::{NodeId, Topology};

fn random_topo(rng: &mut StdRng) -> Topology {
    let spec = TopoSpec::new(2 + rng.gen_range(0..5), rng.gen_range(0..3), 1 + rng.gen_range(0..4));
    random_topology(rng, spec)
}

#[test]
fn replay_reproduces_tables_byte_identically() {
    let mut rng = StdRng::seed_from_u64(0xc7_0001);
    for _ in 0..30 {
        let t = random_topo(&mut rng);
        let switches: Vec<NodeId> = t.switches().map(|s| s.id.clone()).collect();
        let mut state = ControllerState::new(t.clone());
        for _ in 0..rng.gen_range(1..4) {
            let root = switches[rng.gen_range(0..switches.len())].clone();
            state.dynamic_set_root(&root).unwrap();
        }
        let replayed = replay_ops(&t, state.op_log()).unwrap();
        assert_eq!(&replayed, state.runtimes());
        for (id, rt) in state.runtimes() {
            assert_eq!(
                serialize_entries(&rt.table),
                serialize_entries(&replayed[id].table),
            );
        }
    }
}

#[test]
fn set_root_ops_match_key_and_action_differences() {
    // Delta frugality: ops logged = |key symmetric difference| + |changed actions|.
    let mut rng = StdRng::seed_from_u64(0xc7_0002);
    for _ in 0..30 {
        let t = random_topo(&mut rng);
        let switches: Vec<NodeId> = t.switches().map(|s| s.id.clone()).collect();
        let mut state = ControllerState::new(t.clone());

        let first = switches[rng.gen_range(0..switches.len())].clone();
        let before = state.current_plan();
        let ops = state.dynamic_set_root(&first).unwrap();
        let after = state.current_plan();

        let mut expected = 0usize;
        for switch in &switches {
            let old: BTreeMap<LpmKey, _> = before
                .entries(switch)
                .unwrap_or(&[])
                .iter()
                .map(|e| (e.key, e.action))
                .collect();
            let new: BTreeMap<LpmKey, _> = after
                .entries(switch)
                .unwrap_or(&[])
                .iter()
                .map(|e| (e.key, e.action))
                .collect();
            let old_keys: BTreeSet<_> = old.keys().collect();
            let new_keys: BTreeSet<_> = new.keys().collect();
            expected += old_keys.symmetric_difference(&new_keys).count();
            expected += old
                .iter()
                .filter(|(k, action)| new.get(*k).is_some_and(|na| na != *action))
                .count();
        }
        assert_eq!(ops.len(), expected);

        // a second set_root to any node leaves tables consistent with fresh synthesis
        let second = switches[rng.gen_range(0..switches.len())].clone();
        state.dynamic_set_root(&second).unwrap();
        let tree = orient_tree(&t, &compute_mst(&t).unwrap(), &second).unwrap();
        assert_eq!(state.current_plan(), synthesize_rules(&t, &tree).unwrap());
    }
}

#[test]
fn injections_between_set_roots_observe_the_earlier_plan() {
    let mut rng = StdRng::seed_from_u64(0xc7_0003);
    for _ in 0..15 {
        let t = random_topo(&mut rng);
        let hosts: Vec<NodeId> = t.hosts().map(|h| h.id.clone()).collect();
        let switches: Vec<NodeId> = t.switches().map(|s| s.id.clone()).collect();
        let origin = hosts[rng.gen_range(0..hosts.len())].clone();
        let target = hosts[rng.gen_range(0..hosts.len())].clone();
        let dst = t.node(&target).unwrap().host_ipv4().unwrap();
        let r1 = switches[rng.gen_range(0..switches.len())].clone();
        let r2 = switches[rng.gen_range(0..switches.len())].clone();

        let events = vec![
            ScenarioEvent::SetRoot { node: r1.clone(), time: None },
            ScenarioEvent::Inject { origin: origin.clone(), dst, ttl: 64, time: None },
            ScenarioEvent::Checkpoint { label: "mid".into(), time: None },
            ScenarioEvent::SetRoot { node: r2, time: None },
            ScenarioEvent::Inject { origin: origin.clone(), dst, ttl: 64, time: None },
        ];
        let report = run_scenario(&t, &events).unwrap();
        assert!(report.all_delivered());

        // the mid checkpoint captures exactly the plan of the first root
        let tree = orient_tree(&t, &compute_mst(&t).unwrap(), &r1).unwrap();
        let plan = synthesize_rules(&t, &tree).unwrap();
        let snapshot = &report.snapshots[0];
        for (switch, table) in &snapshot.tables {
            assert_eq!(plan.entries(switch).unwrap(), table.as_slice());
        }

        // re-running the scenario is deterministic, and replaying either op
        // log lands on the same final tables
        let fresh = run_scenario(&t, &events).unwrap();
        assert_eq!(fresh.op_log, report.op_log, "scenario runs are deterministic");
        let replayed: BTreeMap<NodeId, _> = replay_ops(&t, &report.op_log)
            .unwrap()
            .into_iter()
            .map(|(id, rt)| (id, rt.table))
            .collect();
        let replayed_fresh: BTreeMap<NodeId, _> = replay_ops(&t, &fresh.op_log)
            .unwrap()
            .into_iter()
            .map(|(id, rt)| (id, rt.table))
            .collect();
        assert_eq!(replayed, replayed_fresh);
    }
}

#[test]
fn replay_rejects_corrupted_logs() {
    let mut rng = StdRng::seed_from_u64(0xc7_0004);
    let t = random_topo(&mut rng);
    let switches: Vec<NodeId> = t.switches().map(|s| s.id.clone()).collect();
    let mut state = ControllerState::new(t.clone());
    state.dynamic_set_root(&switches[0]).unwrap();

    let mut log: Vec<ControlOp> = state.op_log().to_vec();
    let dup = log[0].clone();
    log.push(dup);
    assert!(replay_ops(&t, &log).is_err(), "duplicate insert must be rejected");
}
