//! Noisy distance estimates and the exchange rule for encounter messages.

use rand::Rng;

use crate::mobility::Encounter;

pub const CAPTURE_DISTANCE_M: f64 = 2.0;
pub const CAPTURE_MIN_DURATION_MIN: u16 = 15;

/// `true * (1 + mean_noise * u * true)` with `u ~ U[-0.5, 0.5]`, clamped at 0.
///
/// At full noise the offset reaches 2 m at a true distance of 2 m and 0.5 m at 1 m.
pub fn perceived_distance(true_m: f64, noise_i: f64, noise_j: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    let noise = 0.5 * (noise_i + noise_j);
    (true_m * (1.0 + noise * u * true_m)).max(0.0)
}

/// Phones exchange messages only for close, long-enough encounters.
pub fn is_captured(perceived_m: f64, duration_min: u16) -> bool {
    perceived_m < CAPTURE_DISTANCE_M && duration_min > CAPTURE_MIN_DURATION_MIN
}

/// Returns the perceived distance when both endpoints run the app and the
/// encounter passes the exchange rule.
pub fn capture_encounter(
    enc: &Encounter,
    apps: (bool, bool),
    noise: (f64, f64),
    rng: &mut impl Rng,
) -> Option<f64> {
    let d = perceived_distance(enc.true_distance as f64, noise.0, noise.1, rng);
    (apps.0 && apps.1 && is_captured(d, enc.duration_min)).then_some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{AgentId, LocationId};
    use crate::rng::{stream, Stream};

    fn enc(duration: u16, dist: f32) -> Encounter {
        Encounter {
            a: AgentId(0),
            b: AgentId(1),
            day: 0,
            start_min: 0,
            duration_min: duration,
            true_distance: dist,
            location: LocationId(0),
        }
    }

    #[test]
    fn no_noise_is_exact() {
        let mut rng = stream(0, Stream::Bluetooth);
        for d in [0.3, 1.0, 1.9] {
            assert_eq!(perceived_distance(d, 0.0, 0.0, &mut rng), d);
        }
    }

    #[test]
    fn exchange_rule() {
        let mut rng = stream(1, Stream::Bluetooth);
        assert!(capture_encounter(&enc(30, 1.0), (true, false), (0.0, 0.0), &mut rng).is_none());
        assert!(capture_encounter(&enc(14, 1.0), (true, true), (0.0, 0.0), &mut rng).is_none());
        assert!(capture_encounter(&enc(15, 1.0), (true, true), (0.0, 0.0), &mut rng).is_none());
        assert_eq!(capture_encounter(&enc(30, 1.5), (true, true), (0.0, 0.0), &mut rng), Some(1.5));
    }
}
