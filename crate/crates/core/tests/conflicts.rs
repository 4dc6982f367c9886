#[path = "support/oracles.rs"]
mod oracles;

use std::collections::BTreeSet;

use cactus_core::conflict::{
    conflict_eligible, detect_conflicts, ensure_current, rank_conflicts, resolve_conflict, Resolution,
};
use cactus_core::objective::{ObjectiveFunction, ObjectiveKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn function_from_seed(seed: u64) -> ObjectiveFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    oracles::random_function(&mut rng, 10, 200)
}

#[test]
fn eligibility_matches_table_for_every_combination() {
    let labels = [None, Some("A"), Some("B")];
    for ka in oracles::KINDS {
        for kb in oracles::KINDS {
            for la in labels {
                for lb in labels {
                    let got = conflict_eligible(ka, la, kb, lb);
                    assert_eq!(got, conflict_eligible(kb, lb, ka, la), "{ka:?}/{kb:?} not symmetric");
                    assert_eq!(
                        got,
                        oracles::table_eligible_raw(ka, la, kb, lb),
                        "{ka:?}:{la:?} vs {kb:?}:{lb:?}"
                    );
                }
            }
        }
    }
}

#[test]
fn metric_objectives_never_conflict() {
    for m in oracles::KINDS.iter().filter(|k| k.is_metric()) {
        for other in oracles::KINDS {
            assert!(!conflict_eligible(*m, None, other, Some("A")));
            assert!(!conflict_eligible(other, None, *m, None));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn detection_matches_brute_force(seed in any::<u64>()) {
        let of = function_from_seed(seed);
        let expected = oracles::brute_conflicts(&of);
        let ranked = rank_conflicts(&detect_conflicts(&of));
        let got: Vec<(usize, usize, Vec<String>)> = ranked
            .iter()
            .map(|c| (c.left, c.right, c.conflicted_ids.iter().cloned().collect()))
            .collect();
        prop_assert_eq!(&got, &expected);
        for c in &ranked {
            prop_assert_eq!(c.severity, c.conflicted_ids.len());
            prop_assert!(ensure_current(&of, c).is_ok());
        }
    }

    #[test]
    fn resolution_removes_conflict_and_nothing_else(seed in any::<u64>(), pick in any::<prop::sample::Index>(), action in 0..3usize) {
        let of = function_from_seed(seed);
        let ranked = rank_conflicts(&detect_conflicts(&of));
        prop_assume!(!ranked.is_empty());
        let c = &ranked[pick.index(ranked.len())];
        let action = [Resolution::MoveToLeft, Resolution::MoveToRight, Resolution::RemoveFromBoth][action].clone();
        let next = resolve_conflict(&of, c, &action).unwrap();

        // Untouched objectives survive unchanged and in order.
        let untouched_before: Vec<_> = of.objectives.iter().enumerate()
            .filter(|(i, _)| *i != c.left && *i != c.right).map(|(_, o)| o.clone()).collect();
        let stripped: BTreeSet<usize> = match action {
            Resolution::MoveToLeft => [c.right].into(),
            Resolution::MoveToRight => [c.left].into(),
            _ => [c.left, c.right].into(),
        };
        let mut expected = Vec::new();
        let mut kept = Vec::new();
        for (i, o) in of.objectives.iter().enumerate() {
            let mut o = o.clone();
            if stripped.contains(&i) {
                o.ids.retain(|id| !c.conflicted_ids.contains(id));
                if o.ids.is_empty() {
                    continue;
                }
            }
            kept.push(i);
            expected.push(o);
        }
        prop_assert_eq!(&next.objectives, &expected);
        for o in &untouched_before {
            prop_assert!(next.objectives.contains(o));
        }
        prop_assert_eq!(next.objectives.len() + stripped.iter().filter(|&&i| of.objectives[i].ids.is_subset(&c.conflicted_ids)).count(), of.objectives.len());

        // Re-detection: the pair is clean and no other pair got worse.
        let before = detect_conflicts(&of);
        for d in detect_conflicts(&next).conflicts {
            let (a, b) = (kept[d.left], kept[d.right]);
            prop_assert!((a, b) != (c.left, c.right), "resolved pair still conflicts");
            let old = before.get(a, b).map_or(0, |x| x.severity);
            prop_assert!(d.severity <= old, "pair ({}, {}) grew from {} to {}", a, b, old, d.severity);
        }

        // The old conflict handle is now stale.
        prop_assert_eq!(resolve_conflict(&next, c, &Resolution::RemoveFromBoth).unwrap_err().code(), "StaleConflict");
    }
}

#[test]
fn export_writes_sorted_ids_and_leaves_function_unchanged() {
    let of = ObjectiveFunction::new("f", "d")
        .with_objective(cactus_core::ObjectiveSpec::instance_set(ObjectiveKind::Critical, None, ["z", "b", "q"], 0.5))
        .with_objective(cactus_core::ObjectiveSpec::instance_set(ObjectiveKind::Ignore, None, ["q", "z", "x"], 0.5));
    let c = rank_conflicts(&detect_conflicts(&of)).remove(0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.txt");
    let out = resolve_conflict(&of, &c, &Resolution::Export(path.clone())).unwrap();
    assert_eq!(out, of);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "# conflict critical x ignore\nq\nz\n");
    let bad = resolve_conflict(&of, &c, &Resolution::Export(dir.path().join("no/such/dir.txt")));
    assert_eq!(bad.unwrap_err().code(), "IoError");
}

#[test]
fn hashes_are_stable_and_distinct() {
    let of = function_from_seed(42);
    let report = detect_conflicts(&of);
    let hashes: BTreeSet<String> = report.conflicts.iter().map(|c| c.hash(&of)).collect();
    assert_eq!(hashes.len(), report.len());
    for c in &report.conflicts {
        let h = c.hash(&of);
        assert_eq!(h.len(), 16);
        assert_eq!(report.find_by_hash(&of, &h), Some(c));
    }
}
