//! Per-location contact sampling.
//!
//! Every visitor initiates a negative-binomial number of contacts with mean
//! half its demand; each contact lands on a co-present partner, so on average
//! an agent ends up with its full demand once contacts it receives are
//! counted. Each encounter is created exactly once.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::mobility::{ContactCategory, ContactMatrix};
use crate::population::{AgentId, LocationId, N_AGE_BINS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Encounter {
    pub a: AgentId,
    pub b: AgentId,
    pub day: u32,
    /// Minute of the day the encounter starts.
    pub start_min: u16,
    pub duration_min: u16,
    pub true_distance: f32,
    pub location: LocationId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactParams {
    /// Multiplier from matrix units to simulated daily contacts.
    pub contact_scale: f64,
    /// Negative-binomial shape; larger is closer to Poisson.
    pub dispersion: f64,
    pub min_distance_m: f64,
    pub max_distance_m: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            contact_scale: 1.33,
            dispersion: 0.5,
            min_distance_m: 0.25,
            max_distance_m: 2.0,
        }
    }
}

/// One agent's presence at a location during `[start, end)` hours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attendee {
    pub agent: AgentId,
    pub bin: usize,
    pub start: u8,
    pub end: u8,
    /// Effective contact reduction for this agent today at this location.
    pub gamma: f64,
}

/// Negative binomial with the given mean and shape, as a Gamma-Poisson mixture.
pub fn sample_negative_binomial(rng: &mut impl Rng, mean: f64, shape: f64) -> u32 {
    if !(mean > 0.0) {
        return 0;
    }
    let lambda = if shape > 0.0 && shape.is_finite() {
        Gamma::new(shape, mean / shape).expect("valid gamma").sample(rng)
    } else {
        mean
    };
    if !(lambda > 0.0) {
        return 0;
    }
    Poisson::new(lambda).expect("valid poisson").sample(rng) as u32
}

/// Expected contacts an attendee initiates plus receives, before pairing.
pub fn contact_demand(
    matrix: &ContactMatrix,
    bin: usize,
    hours: f64,
    gamma: f64,
    beta: f64,
    params: &ContactParams,
) -> f64 {
    matrix.row_sum(bin) * params.contact_scale * (hours / matrix.category.typical_hours()) * (1.0 - gamma) * beta
}

/// Samples the encounters of one location for one day.
pub fn sample_contacts(
    location: LocationId,
    attendees: &[Attendee],
    matrix: &ContactMatrix,
    beta: f64,
    params: &ContactParams,
    day: u32,
    rng: &mut impl Rng,
) -> Vec<Encounter> {
    let mut out = Vec::new();
    if attendees.len() < 2 {
        return out;
    }
    let duration = Exp::new(1.0 / matrix.mean_duration_min.max(1.0)).expect("valid rate");
    let mut by_bin: [Vec<usize>; N_AGE_BINS] = Default::default();
    for (i, me) in attendees.iter().enumerate() {
        let hours = (me.end - me.start) as f64;
        let demand = contact_demand(matrix, me.bin, hours, me.gamma, beta, params);
        let k = sample_negative_binomial(rng, 0.5 * demand, params.dispersion);
        if k == 0 {
            continue;
        }
        for b in by_bin.iter_mut() {
            b.clear();
        }
        for (j, other) in attendees.iter().enumerate() {
            if j != i && other.agent != me.agent && other.start < me.end && me.start < other.end {
                by_bin[other.bin].push(j);
            }
        }
        let row = &matrix.m[me.bin];
        let weights: Vec<f64> = (0..N_AGE_BINS)
            .map(|b| if by_bin[b].is_empty() { 0.0 } else { row[b] })
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            continue;
        }
        for _ in 0..k {
            let mut u = rng.random::<f64>() * total;
            let mut bin = N_AGE_BINS - 1;
            for (b, w) in weights.iter().enumerate() {
                if u < *w {
                    bin = b;
                    break;
                }
                u -= w;
            }
            if by_bin[bin].is_empty() {
                continue;
            }
            let j = by_bin[bin][rng.random_range(0..by_bin[bin].len())];
            let other = &attendees[j];
            if other.gamma > 0.0 && rng.random::<f64>() < other.gamma {
                continue;
            }
            let lo = me.start.max(other.start) as u32 * 60;
            let hi = me.end.min(other.end) as u32 * 60;
            let window = hi - lo;
            let dur = (1.0 + duration.sample(rng)).round().min(window as f64).max(1.0) as u32;
            let start = lo + rng.random_range(0..=window - dur);
            let dist = params.min_distance_m
                + (params.max_distance_m - params.min_distance_m) * rng.random::<f64>();
            out.push(Encounter {
                a: me.agent,
                b: other.agent,
                day,
                start_min: start as u16,
                duration_min: dur as u16,
                true_distance: dist as f32,
                location,
            });
        }
    }
    out
}

/// Running tally of encounters by age bin and category.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContactTally {
    /// `counts[category][a][b]`: encounters seen from a bin-`a` agent with a bin-`b` agent.
    pub counts: [[[u64; N_AGE_BINS]; N_AGE_BINS]; ContactCategory::COUNT],
    /// Agent-days observed per bin.
    pub person_days: [u64; N_AGE_BINS],
}

impl ContactTally {
    pub fn record(&mut self, cat: ContactCategory, bin_a: usize, bin_b: usize) {
        self.counts[cat as usize][bin_a][bin_b] += 1;
        self.counts[cat as usize][bin_b][bin_a] += 1;
    }

    pub fn add_person_days(&mut self, bin: usize, n: u64) {
        self.person_days[bin] += n;
    }

    pub fn merge(&mut self, other: &ContactTally) {
        for c in 0..ContactCategory::COUNT {
            for a in 0..N_AGE_BINS {
                for b in 0..N_AGE_BINS {
                    self.counts[c][a][b] += other.counts[c][a][b];
                }
            }
        }
        for a in 0..N_AGE_BINS {
            self.person_days[a] += other.person_days[a];
        }
    }
}

/// Mean daily contacts per person implied by a tally, in matrix form.
pub fn simulated_contact_matrix(tally: &ContactTally, category: ContactCategory) -> ContactMatrix {
    let mut m = [[0.0; N_AGE_BINS]; N_AGE_BINS];
    for a in 0..N_AGE_BINS {
        let days = tally.person_days[a];
        if days == 0 {
            continue;
        }
        for b in 0..N_AGE_BINS {
            m[a][b] = tally.counts[category as usize][a][b] as f64 / days as f64;
        }
    }
    ContactMatrix {
        category,
        m,
        mean_duration_min: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::ContactMatrices;
    use crate::rng::{stream, Stream};

    fn crowd(n: usize, gamma: f64) -> Vec<Attendee> {
        (0..n)
            .map(|i| Attendee {
                agent: AgentId(i as u32),
                bin: i % N_AGE_BINS,
                start: 10,
                end: 12,
                gamma,
            })
            .collect()
    }

    fn mean_contacts(att: &[Attendee], beta: f64, trials: usize, seed: u64) -> (f64, f64) {
        let m = ContactMatrices::default().get(ContactCategory::Other).clone();
        let p = ContactParams::default();
        let mut rng = stream(seed, Stream::Contacts);
        let samples: Vec<f64> = (0..trials)
            .map(|_| sample_contacts(LocationId(0), att, &m, beta, &p, 0, &mut rng).len() as f64)
            .collect();
        let mean = samples.iter().sum::<f64>() / trials as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        (mean, (var / trials as f64).sqrt())
    }

    #[test]
    fn degenerate_locations() {
        let m = ContactMatrices::default().get(ContactCategory::Other).clone();
        let p = ContactParams::default();
        let mut rng = stream(0, Stream::Contacts);
        assert!(sample_contacts(LocationId(0), &[], &m, 1.0, &p, 0, &mut rng).is_empty());
        assert!(sample_contacts(LocationId(0), &crowd(1, 0.0), &m, 1.0, &p, 0, &mut rng).is_empty());
        assert!(sample_contacts(LocationId(0), &crowd(20, 1.0), &m, 1.0, &p, 0, &mut rng).is_empty());
    }

    #[test]
    fn encounters_respect_copresence() {
        let mut att = crowd(30, 0.0);
        for (i, a) in att.iter_mut().enumerate() {
            a.start = (i % 5) as u8 * 3;
            a.end = a.start + 4;
        }
        let m = ContactMatrices::default().get(ContactCategory::Other).clone();
        let p = ContactParams {
            contact_scale: 10.0,
            ..ContactParams::default()
        };
        let mut rng = stream(1, Stream::Contacts);
        let enc = sample_contacts(LocationId(3), &att, &m, 1.0, &p, 7, &mut rng);
        assert!(!enc.is_empty());
        for e in enc {
            assert_ne!(e.a, e.b);
            assert!(e.duration_min > 0);
            let (x, y) = (att[e.a.idx()], att[e.b.idx()]);
            let lo = x.start.max(y.start) as u16 * 60;
            let hi = x.end.min(y.end) as u16 * 60;
            assert!(e.start_min >= lo && e.start_min + e.duration_min <= hi);
            assert!(e.true_distance > 0.0 && e.true_distance <= 2.0);
            assert_eq!(e.day, 7);
        }
    }

    #[test]
    fn negative_binomial_mean() {
        let mut rng = stream(2, Stream::Contacts);
        let n = 100_000;
        let s: u64 = (0..n).map(|_| sample_negative_binomial(&mut rng, 3.0, 0.5) as u64).sum();
        let mean = s as f64 / n as f64;
        // variance = mu + mu^2 / k = 21
        assert!((mean - 3.0).abs() < 4.0 * (21.0 / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn counts_fall_with_level_and_rise_with_beta() {
        let trials = 10_000;
        let levels = [0.0, 0.2, 0.4, 0.8];
        let means: Vec<(f64, f64)> = levels.iter().map(|&g| mean_contacts(&crowd(12, g), 1.0, trials, 3)).collect();
        for w in means.windows(2) {
            assert!(w[0].0 - w[1].0 > -3.0 * (w[0].1.hypot(w[1].1)), "{means:?}");
        }
        let betas = [0.25, 0.5, 1.0];
        let means: Vec<(f64, f64)> = betas.iter().map(|&b| mean_contacts(&crowd(12, 0.2), b, trials, 4)).collect();
        for w in means.windows(2) {
            assert!(w[1].0 - w[0].0 > -3.0 * (w[0].1.hypot(w[1].1)), "{means:?}");
        }
    }

    #[test]
    fn single_encounter_tally_is_symmetric() {
        let mut t = ContactTally::default();
        t.record(ContactCategory::Other, 2, 3);
        let c = &t.counts[ContactCategory::Other as usize];
        assert_eq!(c[2][3], 1);
        assert_eq!(c[3][2], 1);
        assert_eq!(c.iter().flatten().sum::<u64>(), 2);
    }
}
