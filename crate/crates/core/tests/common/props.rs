//! Property checks for the tracing protocol, shared by the property tests and
//! the acceptance suite. Each runs `cases` random cases and reports the first
//! failure.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::OnceLock;

use ctsim_core::dct::{
    capture_encounter, cluster_inbox, heuristic_compute_risk, perceived_distance, propagate_updates, Cluster,
    EncounterMessage, HeuristicInputs, HeuristicParams, Outgoing, Received, RiskHistory, UpdateMessage,
};
use ctsim_core::disease::{Symptom, SymptomSet};
use ctsim_core::mobility::Encounter;
use ctsim_core::population::{assign_apps, generate_population, AgentId, LocationId, Population, RegionConfig};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn report<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

type Round = (Vec<(u32, u8)>, Vec<(usize, u8)>);

/// Several days of fresh messages and updates: every id stays in exactly one
/// cluster and clusters agree with the latest risk of their messages.
pub fn cluster_conservation(cases: u32) -> Result<(), String> {
    let round = (
        prop::collection::vec((0u32..4, 0u8..16), 0..40),
        prop::collection::vec((0usize..1000, 0u8..16), 0..25),
    );
    let strat = prop::collection::vec(round, 1..6);
    report(runner(cases).run(&strat, |rounds: Vec<Round>| {
        let mut clusters: Vec<Cluster> = Vec::new();
        let mut truth: BTreeMap<u64, (u32, u8)> = BTreeMap::new();
        let mut next_id = 0u64;
        for (fresh_spec, upd_spec) in rounds {
            let fresh: Vec<EncounterMessage> = fresh_spec
                .iter()
                .map(|&(day, risk)| {
                    next_id += 1;
                    EncounterMessage { id: next_id, encounter_day: day, risk }
                })
                .collect();
            let known: Vec<u64> = truth.keys().copied().collect();
            let updates: Vec<UpdateMessage> = upd_spec
                .iter()
                .filter(|_| !known.is_empty())
                .map(|&(k, r)| {
                    let id = known[k % known.len()];
                    UpdateMessage { id, new_risk: r, sent_day: 9, old_risk: truth[&id].1, encounter_day: truth[&id].0 }
                })
                .collect();
            let n_before = clusters.len();
            let stats = cluster_inbox(&mut clusters, &fresh, &updates);
            for m in &fresh {
                truth.insert(m.id, (m.encounter_day, m.risk));
            }
            for u in &updates {
                truth.get_mut(&u.id).unwrap().1 = u.new_risk;
            }
            prop_assert_eq!(stats.dropped_updates, 0);
            if updates.is_empty() {
                let fresh_keys: HashSet<(u32, u8)> = fresh.iter().map(|m| (m.encounter_day, m.risk)).collect();
                prop_assert_eq!(stats.created, fresh_keys.len());
                prop_assert!(clusters.len() >= n_before);
            }

            let mut seen: HashMap<u64, usize> = HashMap::new();
            for c in &clusters {
                prop_assert!(!c.messages.is_empty());
                for id in &c.messages {
                    *seen.entry(*id).or_default() += 1;
                    let (day, risk) = truth[id];
                    prop_assert_eq!(c.encounter_day, day);
                    prop_assert_eq!(c.risk, risk);
                }
            }
            prop_assert_eq!(seen.len(), truth.len());
            prop_assert!(seen.values().all(|&n| n == 1));
        }
        Ok(())
    }))
}

/// One day of fresh messages opens at most one cluster per risk level for
/// each encounter day.
pub fn clusters_per_day(cases: u32) -> Result<(), String> {
    let strat = prop::collection::vec((0u32..3, 0u8..16), 0..300);
    report(runner(cases).run(&strat, |spec: Vec<(u32, u8)>| {
        let mut clusters = Vec::new();
        let fresh: Vec<EncounterMessage> = spec
            .iter()
            .enumerate()
            .map(|(i, &(d, r))| EncounterMessage { id: i as u64, encounter_day: d, risk: r })
            .collect();
        cluster_inbox(&mut clusters, &fresh, &[]);
        let mut per_day: BTreeMap<u32, usize> = BTreeMap::new();
        for c in &clusters {
            *per_day.entry(c.encounter_day).or_default() += 1;
        }
        prop_assert!(per_day.values().all(|&n| n <= 16), "{:?}", per_day);
        Ok(())
    }))
}

/// Updates go out only when the risk for the encounter day changed since the
/// last message, never twice with the same value.
pub fn update_rule(cases: u32) -> Result<(), String> {
    let strat = (
        prop::collection::vec(0u32..10, 1..30),
        prop::collection::vec(prop::collection::vec(0u8..16, 14), 1..12),
    );
    report(runner(cases).run(&strat, |(days, histories): (Vec<u32>, Vec<Vec<u8>>)| {
        let start = 10u32;
        let mut out: Vec<Outgoing> = days
            .iter()
            .enumerate()
            .map(|(i, &back)| Outgoing { id: i as u64, peer: AgentId(i as u32), encounter_day: start - back, last_sent: 0 })
            .collect();
        let mut last: Vec<u8> = vec![0; out.len()];
        for (k, h) in histories.iter().enumerate() {
            let today = start + k as u32;
            let hist = RiskHistory(h.clone());
            let ups = propagate_updates(&mut out, &hist, today);
            let mut ids = HashSet::new();
            for (peer, u) in &ups {
                let i = u.id as usize;
                prop_assert!(ids.insert(u.id), "two updates for one message");
                prop_assert_eq!(*peer, AgentId(i as u32));
                prop_assert_ne!(u.new_risk, u.old_risk);
                prop_assert_eq!(u.old_risk, last[i]);
                prop_assert_eq!(Some(u.new_risk), hist.at(today, u.encounter_day));
                last[i] = u.new_risk;
            }
            // Nothing changed since: nothing to resend.
            prop_assert!(propagate_updates(&mut out, &hist, today).is_empty());
            for (i, o) in out.iter().enumerate() {
                if let Some(now) = hist.at(today, o.encounter_day) {
                    prop_assert_eq!(last[i], now);
                }
            }
        }
        Ok(())
    }))
}

fn shared_population() -> &'static (Population, f64) {
    static POP: OnceLock<(Population, f64)> = OnceLock::new();
    POP.get_or_init(|| {
        let cfg = RegionConfig { population_size: 3000, ..RegionConfig::default() };
        let pop = generate_population(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let phones = pop.agents.iter().filter(|a| a.has_smartphone).count() as f64 / pop.len() as f64;
        (pop, phones)
    })
}

/// Close, long encounters between random agents are captured at rate
/// (adoption × smartphone share)².
pub fn captured_fraction(cases: u32) -> Result<(), String> {
    const PAIRS: usize = 3000;
    let (base, phones) = shared_population();
    let n = base.len();
    let pop = std::cell::RefCell::new(base.clone());
    let strat = (0.0f64..=1.0, any::<u64>());
    report(runner(cases).run(&strat, |(adoption, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pop = pop.borrow_mut();
        assign_apps(&mut pop, adoption, &mut rng);
        let mut hits = 0usize;
        for _ in 0..PAIRS {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let enc = Encounter {
                a: AgentId(i as u32),
                b: AgentId(j as u32),
                day: 0,
                start_min: 0,
                duration_min: 30,
                true_distance: rng.random_range(0.0..1.0),
                location: LocationId(0),
            };
            let (ai, aj) = (&pop.agents[i], &pop.agents[j]);
            if capture_encounter(&enc, (ai.has_app, aj.has_app), (ai.bluetooth_noise, aj.bluetooth_noise), &mut rng)
                .is_some()
            {
                hits += 1;
            }
        }
        let q = adoption * phones;
        let want = q * q;
        let got = hits as f64 / PAIRS as f64;
        // Pair sampling noise plus the spread of the realized app share.
        let pair_sd = (want * (1.0 - want) / PAIRS as f64).sqrt();
        let share_sd = 2.0 * q * (q * (1.0 - q) / n as f64).sqrt();
        let tol = 5.0 * (pair_sd + share_sd) + 1e-3;
        prop_assert!((got - want).abs() <= tol, "adoption {adoption}: got {got}, want {want} ± {tol}");
        Ok(())
    }))
}

/// Perceived distance stays within 0.5·d² of the truth: 2 m at 2 m, 0.5 m at 1 m.
pub fn bluetooth_bounds(cases: u32) -> Result<(), String> {
    let strat = (0.0f64..=2.0, 0.0f64..=1.0, 0.0f64..=1.0, any::<u64>());
    report(runner(cases).run(&strat, |(d, ni, nj, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for true_m in [d, 1.0, 2.0] {
            let p = perceived_distance(true_m, ni, nj, &mut rng);
            prop_assert!(p >= 0.0);
            prop_assert!((p - true_m).abs() <= 0.5 * true_m * true_m + 1e-12);
        }
        let at2 = perceived_distance(2.0, ni, nj, &mut rng);
        let at1 = perceived_distance(1.0, ni, nj, &mut rng);
        prop_assert!((at2 - 2.0).abs() <= 2.0 + 1e-12);
        prop_assert!((at1 - 1.0).abs() <= 0.5 + 1e-12);
        Ok(())
    }))
}

fn symptom_set(bits: u32) -> SymptomSet {
    let mut s = SymptomSet::default();
    for (k, sym) in Symptom::ALL.iter().enumerate() {
        if bits & (1 << k) != 0 {
            s.insert(*sym);
        }
    }
    s
}

#[derive(Debug, Clone)]
pub struct HeuristicCase {
    pub today: u32,
    pub tests: Vec<i8>,
    pub symptoms: Vec<u32>,
    pub messages: Vec<(u32, u8, u32)>,
    pub previous: Vec<u8>,
}

fn heuristic_case() -> impl Strategy<Value = HeuristicCase> {
    let test = prop_oneof![8 => Just(0i8), 2 => Just(-1i8), 1 => Just(1i8)];
    // Mostly no symptoms; otherwise one or two random ones.
    let sym = prop_oneof![6 => Just(0u32), 2 => (0usize..22).prop_map(|k| 1u32 << k), 1 => any::<u32>().prop_map(|b| b & 0x3F_FFFF & (b >> 7))];
    let risk = prop_oneof![Just(15u8), Just(12u8), Just(10u8), Just(6u8), 0u8..16];
    let msg = (0u32..20, risk, 0u32..6);
    (
        0u32..40,
        prop::collection::vec(test, 14),
        prop::collection::vec(sym, 14),
        prop::collection::vec(msg, 0..6),
        prop::collection::vec(prop_oneof![3 => Just(0u8), 1 => 0u8..16], 14),
    )
        .prop_map(|(today, mut tests, mut symptoms, msgs, previous)| {
            // Nothing can have happened before day 0.
            for k in (today as usize + 1)..14 {
                tests[k] = 0;
                symptoms[k] = 0;
            }
            HeuristicCase {
            today,
            tests,
            symptoms,
            // (days before today it happened, risk, days after the encounter it arrived)
            messages: msgs
                .into_iter()
                .map(|(back, r, lag)| {
                    let enc = today.saturating_sub(back);
                    (enc, r, (enc + lag).min(today))
                })
                .collect(),
            previous,
            }
        })
}

/// Library result and oracle result, both by absolute day over the window.
pub fn compare_with_oracle(c: &HeuristicCase) -> (BTreeMap<u32, u8>, u8, BTreeMap<u32, u8>, u8) {
    let today = c.today;
    let symptoms: Vec<SymptomSet> = c.symptoms.iter().map(|&b| symptom_set(b)).collect();
    let received: Vec<Received> = c
        .messages
        .iter()
        .enumerate()
        .map(|(i, &(e, r, rd))| Received { id: i as u64, encounter_day: e, risk: r, received_day: rd })
        .collect();
    let prev = RiskHistory(c.previous.clone());
    let inp = HeuristicInputs { today, tests: &c.tests, symptoms: &symptoms, messages: &received, previous: &prev };
    let (r, z) = heuristic_compute_risk(&inp, &HeuristicParams::default());
    let lib: BTreeMap<u32, u8> = (0..14u32).filter(|k| *k <= today).map(|k| (today - k, r.0[k as usize])).collect();

    let yesterday = today.wrapping_sub(1);
    let case = oracle::Case {
        today,
        tests: c
            .tests
            .iter()
            .enumerate()
            .filter(|(k, v)| **v != 0 && *k as u32 <= today)
            .map(|(k, v)| (today - k as u32, *v))
            .collect(),
        symptoms: symptoms
            .iter()
            .enumerate()
            .filter(|(k, _)| *k as u32 <= today)
            .map(|(k, s)| (today - k as u32, s.iter().collect()))
            .collect(),
        messages: c
            .messages
            .iter()
            .map(|&(e, r, rd)| oracle::Msg { encounter_day: e, risk: r, received_day: rd })
            .collect(),
        previous: if today == 0 {
            BTreeMap::new()
        } else {
            (0..14u32).filter(|k| *k <= yesterday).map(|k| (yesterday - k, c.previous[k as usize])).collect()
        },
    };
    let (or, oz) = oracle::compute(&case);
    (lib, z, or, oz)
}

/// The library's heuristic agrees with the straight-line oracle.
pub fn heuristic_matches_oracle(cases: u32) -> Result<(), String> {
    report(runner(cases).run(&heuristic_case(), |c| {
        let (lib, z, or, oz) = compare_with_oracle(&c);
        prop_assert_eq!(&lib, &or, "risk differs for {:?}", c);
        prop_assert_eq!(z, oz, "recommendation differs for {:?}", c);
        Ok(())
    }))
}
