//! Test-based binary contact tracing, one hop (BCT1) or two hops (BCT2).

use super::messages::Received;
use super::risk::{RiskHistory, RiskLevel, R_MAX};

/// Risk a BCT2 contact broadcasts so its own contacts quarantine.
/// Receivers of this level do not pass it on.
pub const SECOND_HOP_SIGNAL: RiskLevel = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hops {
    One,
    Two,
}

/// Returns the history to broadcast and the recommendation (0 baseline, 3 quarantine).
pub fn bct_compute_risk(today: u32, tests: &[i8], messages: &[Received], hops: Hops, d_max: u32) -> (RiskHistory, u8) {
    let n = d_max as usize;
    if tests.iter().take(n).any(|&t| t == 1) {
        return (RiskHistory(vec![R_MAX; n]), 3);
    }
    let live = || messages.iter().filter(|m| m.encounter_day + d_max > today);
    if live().any(|m| m.risk == R_MAX) {
        let r = match hops {
            Hops::One => 0,
            Hops::Two => SECOND_HOP_SIGNAL,
        };
        return (RiskHistory(vec![r; n]), 3);
    }
    if hops == Hops::Two && live().any(|m| m.risk == SECOND_HOP_SIGNAL) {
        return (RiskHistory::zeros(n), 3);
    }
    (RiskHistory::zeros(n), 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(risk: u8) -> Received {
        Received { id: 1, encounter_day: 9, risk, received_day: 10 }
    }

    #[test]
    fn no_messages_is_baseline() {
        assert_eq!(bct_compute_risk(10, &[0; 14], &[], Hops::One, 14).1, 0);
    }

    #[test]
    fn positive_contact_quarantines() {
        let (r, z) = bct_compute_risk(10, &[0; 14], &[msg(15)], Hops::One, 14);
        assert_eq!((r.today(), z), (0, 3));
        let (r, z) = bct_compute_risk(10, &[0; 14], &[msg(15)], Hops::Two, 14);
        assert_eq!((r.today(), z), (SECOND_HOP_SIGNAL, 3));
        assert_eq!(bct_compute_risk(30, &[0; 14], &[msg(15)], Hops::One, 14).1, 0);
    }

    #[test]
    fn chain_of_three() {
        // index -> a -> b
        let mut t = [0i8; 14];
        t[0] = 1;
        for hops in [Hops::One, Hops::Two] {
            let (ri, _) = bct_compute_risk(10, &t, &[], hops, 14);
            let (ra, za) = bct_compute_risk(10, &[0; 14], &[msg(ri.today())], hops, 14);
            let (_, zb) = bct_compute_risk(10, &[0; 14], &[msg(ra.today())], hops, 14);
            assert_eq!(za, 3);
            assert_eq!(zb == 3, hops == Hops::Two);
        }
    }
}
