//! Behavior levels: per-level fractional contact reductions.
//!
//! Levels are indexed `0..n_levels`, with the last one being quarantine.
//! With the default five levels the mapping is:
//!
//! | level | gamma | meaning                                        |
//! |-------|-------|------------------------------------------------|
//! | 0     | 0.0   | pre-pandemic behavior                          |
//! | 1     | 0.2   | baseline under distancing; no-tracing default  |
//! | 2     | 0.4   | tracing recommendation 1                       |
//! | 3     | 0.8   | tracing recommendation 2                       |
//! | 4     | 1.0   | quarantine                                     |
//!
//! Policies that output a recommendation `z` in `0..=3` (3 meaning
//! quarantine) are shifted up by one: see [`BehaviorLevels::from_recommendation`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobility::ContactCategory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorLevels {
    /// `gamma[k][category]`, fractional contact reduction at level `k`.
    pub gamma: Vec<[f64; ContactCategory::COUNT]>,
    /// Probability that an agent at level `k` behaves as level 0 on a given day.
    pub dropout: Vec<f64>,
    /// Leave household contacts untouched by the level. Quarantined agents
    /// still share their dwelling.
    #[serde(default = "yes")]
    pub household_exempt: bool,
}

fn yes() -> bool {
    true
}

impl Default for BehaviorLevels {
    fn default() -> Self {
        interpolate_gammas(0.8, 5).expect("default levels are valid")
    }
}

/// Builds `n_levels` levels where the one below quarantine has reduction `g`,
/// each earlier non-zero level halves the next, level 0 is 0 and the last is 1.
pub fn interpolate_gammas(g: f64, n_levels: usize) -> Result<BehaviorLevels> {
    if n_levels < 2 {
        return Err(Error::config("behavior levels: need at least 2 levels"));
    }
    if !(0.0..=1.0).contains(&g) {
        return Err(Error::config("behavior levels: gamma must lie in [0, 1]"));
    }
    let mut values = vec![0.0; n_levels];
    values[n_levels - 1] = 1.0;
    if n_levels >= 3 {
        let mut v = g;
        for k in (1..n_levels - 1).rev() {
            values[k] = v;
            v /= 2.0;
        }
    }
    let levels = BehaviorLevels {
        gamma: values.iter().map(|&v| [v; ContactCategory::COUNT]).collect(),
        dropout: vec![0.0; n_levels],
        household_exempt: true,
    };
    levels.validate()?;
    Ok(levels)
}

impl BehaviorLevels {
    pub fn n_levels(&self) -> usize {
        self.gamma.len()
    }

    pub fn quarantine(&self) -> u8 {
        (self.gamma.len() - 1) as u8
    }

    /// Maps a policy recommendation in `0..=max_rec` onto levels `1..=quarantine`.
    pub fn from_recommendation(&self, rec: u8, max_rec: u8) -> u8 {
        if rec >= max_rec {
            self.quarantine()
        } else {
            (rec + 1).min(self.quarantine())
        }
    }

    pub fn gamma(&self, level: u8, cat: ContactCategory) -> f64 {
        if self.household_exempt && cat == ContactCategory::Household {
            return 0.0;
        }
        self.gamma[level as usize][cat as usize]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.gamma.len();
        if n < 2 {
            return Err(Error::config("behavior levels: need at least 2 levels"));
        }
        if self.dropout.len() != n {
            return Err(Error::config("behavior levels: dropout needs one entry per level"));
        }
        for c in 0..ContactCategory::COUNT {
            if self.gamma[0][c] != 0.0 || self.gamma[n - 1][c] != 1.0 {
                return Err(Error::config("behavior levels: gamma must run from 0 to 1"));
            }
            for k in 1..n {
                let (a, b) = (self.gamma[k - 1][c], self.gamma[k][c]);
                if !(0.0..=1.0).contains(&b) || b < a {
                    return Err(Error::config("behavior levels: gamma must be non-decreasing in [0, 1]"));
                }
            }
        }
        if self.dropout.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return Err(Error::config("behavior levels: dropout must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn column(l: &BehaviorLevels) -> Vec<f64> {
        l.gamma.iter().map(|g| g[ContactCategory::Workplace as usize]).collect()
    }

    #[test]
    fn two_levels() {
        assert_eq!(column(&interpolate_gammas(0.8, 2).unwrap()), vec![0.0, 1.0]);
    }

    #[test]
    fn halving_rule() {
        let l = interpolate_gammas(0.8, 5).unwrap();
        assert_eq!(column(&l), vec![0.0, 0.2, 0.4, 0.8, 1.0]);
        assert_eq!(l.quarantine(), 4);
        assert_eq!(l.from_recommendation(0, 3), 1);
        assert_eq!(l.from_recommendation(2, 3), 3);
        assert_eq!(l.from_recommendation(3, 3), 4);
    }

    #[test]
    fn household_is_exempt_by_default() {
        let l = BehaviorLevels::default();
        assert_eq!(l.gamma(4, ContactCategory::Household), 0.0);
        assert_eq!(l.gamma(4, ContactCategory::Other), 1.0);
    }

    proptest! {
        #[test]
        fn interpolation_is_valid(g in 0.0f64..=1.0, n in 2usize..=10) {
            let l = interpolate_gammas(g, n).unwrap();
            prop_assert!(l.validate().is_ok());
            let c = column(&l);
            prop_assert!(c.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
