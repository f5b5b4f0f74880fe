use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::{Condition, N_AGE_BINS};

const SUM_TOL: f64 = 1e-9;

static DEFAULT_REGION: &str = include_str!("../../data/region_default.yaml");

/// Mix of household types used when filling multi-person dwellings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HouseholdComposition {
    pub couple_with_kids: f64,
    pub single_parent_with_kids: f64,
    pub random: f64,
}

/// Agents aged `min_age <= age < max_age` attend school with probability `fraction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchoolGroup {
    pub min_age: u32,
    pub max_age: u32,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SexTable {
    pub male: Vec<f64>,
    pub female: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OtherLocationDensity {
    pub store: f64,
    pub park: f64,
    pub restaurant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub population_size: usize,
    pub age_distribution: Vec<f64>,
    pub male_fraction_per_bin: Vec<f64>,
    /// Probabilities for household sizes 1 through 5.
    pub household_size_distribution: Vec<f64>,
    pub household_composition: HouseholdComposition,
    /// Fraction of agents at or above `senior_residence_age` living in a residence.
    pub senior_residence_fraction: f64,
    pub senior_residence_age: u32,
    pub senior_residence_size: usize,
    pub school_groups: Vec<SchoolGroup>,
    pub school_size: usize,
    /// Half-open `[min, max)` age range with full employment.
    pub employment_age_range: [u32; 2],
    pub workplace_size: usize,
    pub smartphone_ownership_per_age_bin: Vec<f64>,
    pub condition_prevalence: BTreeMap<Condition, SexTable>,
    pub hospitals_per_100k: f64,
    pub hospital_staff_fraction: f64,
    pub other_locations_per_1000: OtherLocationDensity,
    /// Carefulness is `U[0,1]` shifted by `slope * (age - 40) / 40`, then clamped.
    pub carefulness_age_slope: f64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        serde_yaml::from_str(DEFAULT_REGION).expect("bundled region config parses")
    }
}

fn check_dist(name: &str, v: &[f64], len: Option<usize>) -> Result<()> {
    if let Some(n) = len {
        if v.len() != n {
            return Err(Error::config(format!("{name}: expected {n} entries, got {}", v.len())));
        }
    }
    if v.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::config(format!("{name}: entries must be finite and non-negative")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > SUM_TOL {
        return Err(Error::config(format!("{name}: sums to {s}, expected 1")));
    }
    Ok(())
}

fn check_probs(name: &str, v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::config(format!("{name}: expected {len} entries, got {}", v.len())));
    }
    if v.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::config(format!("{name}: entries must lie in [0, 1]")));
    }
    Ok(())
}

impl RegionConfig {
    pub fn from_yaml_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_yaml::from_str(s).map_err(|e| Error::parse("region config", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_yaml_str(&s)
    }

    pub fn validate(&self) -> Result<()> {
        check_dist("age_distribution", &self.age_distribution, Some(N_AGE_BINS))?;
        check_probs("male_fraction_per_bin", &self.male_fraction_per_bin, N_AGE_BINS)?;
        if self.household_size_distribution.is_empty() || self.household_size_distribution.len() > 5 {
            return Err(Error::config("household_size_distribution: sizes 1 to 5 only"));
        }
        check_dist("household_size_distribution", &self.household_size_distribution, None)?;
        let c = &self.household_composition;
        check_dist(
            "household_composition",
            &[c.couple_with_kids, c.single_parent_with_kids, c.random],
            None,
        )?;
        if !(0.0..=1.0).contains(&self.senior_residence_fraction) {
            return Err(Error::config("senior_residence_fraction must lie in [0, 1]"));
        }
        if self.senior_residence_size == 0 || self.school_size == 0 || self.workplace_size == 0 {
            return Err(Error::config("location sizes must be at least 1"));
        }
        for g in &self.school_groups {
            if g.min_age >= g.max_age || !(0.0..=1.0).contains(&g.fraction) {
                return Err(Error::config(format!(
                    "school group [{}, {}) with fraction {} is invalid",
                    g.min_age, g.max_age, g.fraction
                )));
            }
        }
        if self.employment_age_range[0] > self.employment_age_range[1] {
            return Err(Error::config("employment_age_range must be [min, max] with min <= max"));
        }
        check_probs(
            "smartphone_ownership_per_age_bin",
            &self.smartphone_ownership_per_age_bin,
            N_AGE_BINS,
        )?;
        for (cond, t) in &self.condition_prevalence {
            check_probs(&format!("condition_prevalence.{cond:?}.male"), &t.male, N_AGE_BINS)?;
            check_probs(&format!("condition_prevalence.{cond:?}.female"), &t.female, N_AGE_BINS)?;
        }
        if !(self.hospitals_per_100k.is_finite() && self.hospitals_per_100k >= 0.0) {
            return Err(Error::config("hospitals_per_100k must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.hospital_staff_fraction) {
            return Err(Error::config("hospital_staff_fraction must lie in [0, 1]"));
        }
        let o = &self.other_locations_per_1000;
        if [o.store, o.park, o.restaurant].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::config("other_locations_per_1000 entries must be non-negative"));
        }
        if !self.carefulness_age_slope.is_finite() {
            return Err(Error::config("carefulness_age_slope must be finite"));
        }
        Ok(())
    }
}
