//! Hand-worked heuristic cases, shared by the oracle tests and the acceptance run.

use std::collections::BTreeMap;

use ctsim_core::disease::Symptom;

use super::oracle::{self, Case, Msg};
use super::props::{compare_with_oracle, HeuristicCase};

fn empty(today: u32) -> Case {
    Case { today, tests: vec![], symptoms: vec![], messages: vec![], previous: BTreeMap::new() }
}

fn days(from: u32, to: u32, v: u8) -> Vec<(u32, u8)> {
    (from..=to).map(|d| (d, v)).collect()
}

/// Hand-worked cases for the oracle itself.
pub fn oracle_hand_traces() {
    // Loss of taste two days ago: high risk over the last eight days.
    let mut c = empty(20);
    c.symptoms = vec![(18, vec![Symptom::LossOfTaste])];
    let (r, z) = oracle::compute(&c);
    let mut want: BTreeMap<u32, u8> = days(7, 12, 0).into_iter().collect();
    want.extend(days(13, 20, 12));
    assert_eq!((r, z), (want, 3));

    // Same, with a negative test today: days 16..=20 cleared, no recommendation.
    c.tests = vec![(20, -1)];
    let (r, z) = oracle::compute(&c);
    assert_eq!(z, 0);
    assert_eq!(r[&20], 0);
    assert_eq!(r[&16], 0);
    assert_eq!(r[&15], 12);

    // A positive overrides everything.
    c.tests.push((10, 1));
    let (r, z) = oracle::compute(&c);
    assert_eq!(z, 3);
    assert!(r.values().all(|&v| v == 15));

    // Top-level message received on day 18: moderate risk from day 18.
    let mut c = empty(20);
    c.messages = vec![Msg { encounter_day: 17, risk: 15, received_day: 18 }];
    let (r, z) = oracle::compute(&c);
    assert_eq!(z, 2);
    assert_eq!((r[&17], r[&18], r[&20]), (0, 10, 10));
}

/// The library and the oracle on hand-built inputs with known answers.
pub fn library_matches_hand_traces() {
    let mut symptoms = vec![0u32; 14];
    symptoms[2] = 1 << 20; // loss of taste
    let case = HeuristicCase { today: 20, tests: vec![0; 14], symptoms, messages: vec![], previous: vec![0; 14] };
    let (lib, z, or, oz) = compare_with_oracle(&case);
    assert_eq!((z, oz), (3, 3));
    assert_eq!(lib, or);
    assert_eq!(lib[&13], 12);
    assert_eq!(lib[&12], 0);

    let case = HeuristicCase {
        today: 20,
        tests: vec![0; 14],
        symptoms: vec![0; 14],
        messages: vec![(17, 12, 19)],
        previous: vec![0; 14],
    };
    let (lib, z, or, oz) = compare_with_oracle(&case);
    assert_eq!((lib.clone(), z), (or, oz));
    assert_eq!((lib[&19], lib[&18], z), (6, 0, 1));
}
