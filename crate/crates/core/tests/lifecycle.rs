use anchor_registry::commitments::keygen;
use anchor_registry::eventlog::{get_logs, read_jsonl, tree_topic, write_jsonl, LogQuery};
use anchor_registry::reconstruction::reconstruct;
use anchor_registry::registry::{GovernanceKind, OperatorId, Registry};
use anchor_registry::verification::authenticate_tree;
use anchor_registry::workload::Workload;

const OP: OperatorId = OperatorId([0x0a; 20]);

#[test]
fn jsonl_round_trip_still_verifies() {
    let mut reg = Registry::new([OP]).unwrap().with_seed([2; 32]);
    let mut work = Workload::new(5, OP);
    let mut roots = Vec::new();
    for _ in 0..8 {
        roots.push(work.grow_tree(&mut reg, 4, 40, 0.1).unwrap());
    }
    let report = work.run(&mut reg, 300);
    assert!(report.clean(), "{report:?}");

    let mut bytes = Vec::new();
    write_jsonl(&mut bytes, reg.events()).unwrap();
    let log = read_jsonl(bytes.as_slice()).unwrap();
    assert_eq!(log, reg.events());

    let forest = reconstruct(&log).unwrap();
    assert_eq!(forest.len(), log.len());
    let outsider = keygen(&[0xff; 32]).unwrap();
    for (root, user) in &roots {
        let key = work.key_of_user(*user);
        assert!(authenticate_tree(key, root, &forest).unwrap().authenticated);
        assert!(!authenticate_tree(&outsider, root, &forest).unwrap().authenticated);

        let tid = reg.record(root).unwrap().tree_id;
        let slice = get_logs(&log, &LogQuery::tree(tree_topic(&tid)));
        assert_eq!(slice.len(), forest.tree(&tid).unwrap().nodes.len());
    }
}

#[test]
fn per_tree_slice_reconstructs_the_same_tree() {
    let mut reg = Registry::new([OP]).unwrap();
    let mut work = Workload::new(9, OP);
    let (root, _) = work.grow_tree(&mut reg, 5, 60, 0.0).unwrap();
    let (other, _) = work.grow_tree(&mut reg, 5, 60, 0.0).unwrap();
    let victim = reg.events().iter().rev().find(|e| e.tree_id_plain == reg.record(&root).unwrap().tree_id_plain).unwrap().ar_id_plain.clone();
    work.governance(&mut reg, GovernanceKind::Void, &victim).unwrap();

    let full = reconstruct(reg.events()).unwrap();
    let tid = reg.record(&root).unwrap().tree_id;
    let slice = get_logs(reg.events(), &LogQuery::tree(tree_topic(&tid)));
    let alone = reconstruct(&slice).unwrap();
    assert_eq!(alone.tree(&tid), full.tree(&tid));
    assert!(full.is_suppressed(&victim));
    assert!(!full.is_suppressed(&other));
}
