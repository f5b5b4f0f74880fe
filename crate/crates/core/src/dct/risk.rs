use serde::{Deserialize, Serialize};

/// Quantized risk level in `0..=R_MAX`.
pub type RiskLevel = u8;

pub const R_MAX: RiskLevel = 15;
pub const N_RISK_LEVELS: usize = R_MAX as usize + 1;

/// Risk over the last `d_max` days. Index 0 is today, index `k` is `k` days ago.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RiskHistory(pub Vec<RiskLevel>);

impl RiskHistory {
    pub fn zeros(d_max: usize) -> Self {
        Self(vec![0; d_max])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn today(&self) -> RiskLevel {
        self.0.first().copied().unwrap_or(0)
    }

    /// Risk for absolute `day` as seen on `today`, if inside the window.
    pub fn at(&self, today: u32, day: u32) -> Option<RiskLevel> {
        if day > today {
            return None;
        }
        self.0.get((today - day) as usize).copied()
    }

    /// Moves the window forward one day; the new today starts at 0.
    pub fn shifted(&self) -> Self {
        let mut v = Vec::with_capacity(self.0.len());
        v.push(0);
        v.extend_from_slice(&self.0[..self.0.len().saturating_sub(1)]);
        Self(v)
    }

    pub fn max_with(&mut self, other: &RiskHistory) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a = (*a).max(*b);
        }
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|&r| r <= R_MAX)
    }
}
