use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::disease::{TransmissionParams, ViralLoadCurve};
use crate::error::{Error, Result};
use crate::population::{Agent, Condition, N_AGE_BINS};

static DEFAULT_DISEASE: &str = include_str!("../../data/disease_default.yaml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Mild,
    Moderate,
    Severe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiseaseParams {
    pub incubation_log_mean: f64,
    pub incubation_log_sd: f64,
    pub infectiousness_onset_days: f64,
    pub peak_before_symptoms_days: f64,
    pub peak_to_plateau_days: f64,
    pub plateau_after_symptoms_days: f64,
    pub recovery_after_symptoms_days: f64,
    pub knot_jitter: f64,
    pub peak_height_base: f64,
    pub peak_height_per_condition: f64,
    pub plateau_ratio: f64,
    pub hospital_admission_after_symptoms_days: f64,
    pub transmission: TransmissionParams,
    pub hospitalization: [f64; N_AGE_BINS],
    pub icu_fraction: [f64; N_AGE_BINS],
    pub ward_mortality: [f64; N_AGE_BINS],
    pub icu_mortality: [f64; N_AGE_BINS],
    pub risk_ratios: BTreeMap<Condition, f64>,
    pub cold_daily_hazard: f64,
    pub flu_daily_hazard: f64,
    pub cold_days: [u32; 2],
    pub flu_days: [u32; 2],
}

impl Default for DiseaseParams {
    fn default() -> Self {
        serde_yaml::from_str(DEFAULT_DISEASE).expect("bundled disease config parses")
    }
}

fn unit(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::config(format!("{name}: entries must lie in [0, 1]")));
    }
    Ok(())
}

impl DiseaseParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("incubation_log_sd", self.incubation_log_sd),
            ("infectiousness_onset_days", self.infectiousness_onset_days),
            ("recovery_after_symptoms_days", self.recovery_after_symptoms_days),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        let non_negative = [
            ("peak_before_symptoms_days", self.peak_before_symptoms_days),
            ("peak_to_plateau_days", self.peak_to_plateau_days),
            ("plateau_after_symptoms_days", self.plateau_after_symptoms_days),
            ("knot_jitter", self.knot_jitter),
            ("peak_height_per_condition", self.peak_height_per_condition),
            ("hospital_admission_after_symptoms_days", self.hospital_admission_after_symptoms_days),
            ("cold_daily_hazard", self.cold_daily_hazard),
            ("flu_daily_hazard", self.flu_daily_hazard),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{name} must be non-negative")));
            }
        }
        unit("peak_height_base", &[self.peak_height_base])?;
        unit("plateau_ratio", &[self.plateau_ratio])?;
        unit("hospitalization", &self.hospitalization)?;
        unit("icu_fraction", &self.icu_fraction)?;
        unit("ward_mortality", &self.ward_mortality)?;
        unit("icu_mortality", &self.icu_mortality)?;
        if self.risk_ratios.values().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::config("risk_ratios must be positive"));
        }
        for d in [self.cold_days, self.flu_days] {
            if d[0] == 0 || d[0] > d[1] {
                return Err(Error::config("illness durations must be [min, max] with 1 <= min <= max"));
            }
        }
        self.transmission.validate()
    }

    /// Product of risk ratios over the agent's conditions.
    pub fn risk_multiplier(&self, agent: &Agent) -> f64 {
        agent
            .conditions
            .iter()
            .map(|c| self.risk_ratios.get(&c).copied().unwrap_or(1.0))
            .product()
    }

    pub fn admission_probability(&self, agent: &Agent) -> f64 {
        (self.hospitalization[agent.age_bin()] * self.risk_multiplier(agent)).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiseaseCourse {
    /// All times are days since the simulation started.
    pub exposure: f64,
    pub incubation_days: f64,
    pub symptom_onset: f64,
    pub infectiousness_onset: f64,
    pub recovery: f64,
    pub asymptomatic: bool,
    pub inoculum: f64,
    /// `None` for asymptomatic courses.
    pub severity: Option<Severity>,
    pub viral_load: ViralLoadCurve,
    pub will_be_hospitalized: bool,
    pub will_need_icu: bool,
    pub will_die: bool,
    pub hospital_admission: Option<f64>,
    pub death: Option<f64>,
}

impl DiseaseCourse {
    pub fn is_infectious_at(&self, t: f64) -> bool {
        t > self.infectiousness_onset && t < self.recovery
    }

    pub fn is_symptomatic_at(&self, t: f64) -> bool {
        !self.asymptomatic && t >= self.symptom_onset && t < self.recovery
    }

    /// End of the course: death if it happens, recovery otherwise.
    pub fn end(&self) -> f64 {
        self.death.unwrap_or(self.recovery)
    }
}

fn jitter(rng: &mut impl Rng, mean: f64, rel_sd: f64) -> f64 {
    if mean <= 0.0 || rel_sd <= 0.0 {
        return mean.max(0.0);
    }
    let x = Normal::new(mean, rel_sd * mean).expect("finite").sample(rng);
    x.clamp(0.2 * mean, 2.0 * mean)
}

/// Draws the full course of an infection that starts at `exposure`.
pub fn sample_disease_course(
    agent: &Agent,
    exposure: f64,
    asymptomatic_fraction: f64,
    params: &DiseaseParams,
    rng: &mut impl Rng,
) -> DiseaseCourse {
    let j = params.knot_jitter;
    let inoculum: f64 = rng.random();
    let incubation = LogNormal::new(params.incubation_log_mean, params.incubation_log_sd)
        .expect("valid lognormal")
        .sample(rng);
    let asymptomatic = rng.random::<f64>() < asymptomatic_fraction;
    let symptom_onset = exposure + incubation;
    let peak = (symptom_onset - jitter(rng, params.peak_before_symptoms_days, j)).max(exposure + 0.3);
    let onset = (exposure + jitter(rng, params.infectiousness_onset_days, j)).min(exposure + 0.8 * (peak - exposure));
    let plateau_start = peak + jitter(rng, params.peak_to_plateau_days, j);
    let plateau_end = (symptom_onset + jitter(rng, params.plateau_after_symptoms_days, j)).max(plateau_start);
    let recovery = (symptom_onset + jitter(rng, params.recovery_after_symptoms_days, j)).max(plateau_end + 0.5);
    let n_conditions = agent.conditions.iter().count() as f64;
    let peak_height = (params.peak_height_base + (1.0 - params.peak_height_base) * inoculum
        + params.peak_height_per_condition * n_conditions)
        .clamp(0.05, 1.0);
    let viral_load = ViralLoadCurve {
        onset,
        peak,
        plateau_start,
        plateau_end,
        end: recovery,
        peak_height,
        plateau_height: peak_height * params.plateau_ratio,
    };

    let admit_u: f64 = rng.random();
    let icu_u: f64 = rng.random();
    let death_u: f64 = rng.random();
    let severity_u: f64 = rng.random();
    let admission_delay = jitter(rng, params.hospital_admission_after_symptoms_days, j);
    let death_frac: f64 = rng.random();

    let bin = agent.age_bin();
    let will_be_hospitalized = !asymptomatic && admit_u < params.admission_probability(agent);
    let will_need_icu = will_be_hospitalized && icu_u < params.icu_fraction[bin];
    let mortality = if will_need_icu {
        params.icu_mortality[bin]
    } else {
        params.ward_mortality[bin]
    };
    let will_die = will_be_hospitalized && death_u < mortality;
    let severity = if asymptomatic {
        None
    } else if will_be_hospitalized {
        Some(Severity::Severe)
    } else if severity_u < inoculum {
        Some(Severity::Moderate)
    } else {
        Some(Severity::Mild)
    };
    let hospital_admission = will_be_hospitalized.then(|| (symptom_onset + admission_delay).min(recovery - 0.5));
    let death = match (will_die, hospital_admission) {
        (true, Some(a)) => Some(a + (0.25 + 0.75 * death_frac) * (recovery - a)),
        _ => None,
    };
    DiseaseCourse {
        exposure,
        incubation_days: incubation,
        symptom_onset,
        infectiousness_onset: onset,
        recovery,
        asymptomatic,
        inoculum,
        severity,
        viral_load,
        will_be_hospitalized,
        will_need_icu,
        will_die,
        hospital_admission,
        death,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{AgentId, ConditionSet, LocationId, Sex};
    use crate::rng::{stream, Stream};

    pub(crate) fn agent(age: u32, conditions: &[Condition]) -> Agent {
        Agent {
            id: AgentId(0),
            age,
            sex: Sex::Female,
            conditions: conditions.iter().copied().collect::<ConditionSet>(),
            carefulness: 0.5,
            household: LocationId(0),
            workplace: None,
            has_smartphone: false,
            has_app: false,
            bluetooth_noise: 0.0,
        }
    }

    #[test]
    fn defaults_are_valid() {
        DiseaseParams::default().validate().unwrap();
    }

    #[test]
    fn mean_incubation() {
        let p = DiseaseParams::default();
        let a = agent(40, &[]);
        let mut rng = stream(0, Stream::Disease);
        let n = 10_000;
        let mean = (0..n).map(|_| sample_disease_course(&a, 0.0, 0.3, &p, &mut rng).incubation_days).sum::<f64>() / n as f64;
        assert!((mean - 5.505).abs() < 0.15, "{mean}");
    }

    #[test]
    fn everyone_asymptomatic() {
        let p = DiseaseParams::default();
        let a = agent(70, &[Condition::Diabetes]);
        let mut rng = stream(1, Stream::Disease);
        for _ in 0..1000 {
            let c = sample_disease_course(&a, 3.0, 1.0, &p, &mut rng);
            assert!(c.asymptomatic && c.severity.is_none() && !c.will_be_hospitalized);
        }
    }

    #[test]
    fn course_ordering() {
        let p = DiseaseParams::default();
        let mut rng = stream(2, Stream::Disease);
        for age in [5, 35, 85] {
            let a = agent(age, &[Condition::Ckd]);
            for _ in 0..2000 {
                let c = sample_disease_course(&a, 1.5, 0.3, &p, &mut rng);
                assert!(c.viral_load.is_valid());
                assert!(c.exposure < c.infectiousness_onset);
                assert!(c.infectiousness_onset < c.viral_load.peak);
                assert!(c.viral_load.peak < c.symptom_onset);
                assert!(c.symptom_onset < c.recovery);
                if let Some(d) = c.death {
                    assert!(c.will_die && d >= c.hospital_admission.unwrap() && d <= c.recovery);
                }
                assert_eq!(c.severity == Some(Severity::Severe), c.will_be_hospitalized);
            }
        }
    }

    #[test]
    fn mean_viral_load_shape() {
        let p = DiseaseParams::default();
        let a = agent(40, &[]);
        let mut rng = stream(3, Stream::Disease);
        let curves: Vec<_> = (0..40).map(|_| sample_disease_course(&a, 0.0, 0.3, &p, &mut rng).viral_load).collect();
        let grid: Vec<f64> = (0..=300).map(|i| i as f64 * 0.1).collect();
        let mean: Vec<f64> = grid.iter().map(|&t| curves.iter().map(|c| c.eval(t)).sum::<f64>() / 40.0).collect();
        let (imax, _) = mean.iter().enumerate().fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert!((3.0..=9.0).contains(&grid[imax]), "peak at {}", grid[imax]);
        assert_eq!(mean[0], 0.0);
        assert_eq!(*mean.last().unwrap(), 0.0);
    }

    #[test]
    fn risk_ratio_product() {
        let p = DiseaseParams::default();
        let a = agent(50, &[Condition::Diabetes, Condition::Ckd]);
        assert!((p.risk_multiplier(&a) - 5.824).abs() < 1e-12);
        assert_eq!(p.risk_multiplier(&agent(50, &[])), 1.0);
    }

    #[test]
    fn hospitalization_rises_with_age_above_sixty() {
        let p = DiseaseParams::default();
        let mut rng = stream(4, Stream::Disease);
        let n = 20_000;
        let rate = |age, rng: &mut crate::rng::SimRng| {
            let a = agent(age, &[]);
            (0..n).filter(|_| sample_disease_course(&a, 0.0, 0.0, &p, rng).will_be_hospitalized).count() as f64 / n as f64
        };
        let r: Vec<f64> = [62, 75, 88].iter().map(|&age| rate(age, &mut rng)).collect();
        assert!(r[0] < r[1] && r[1] < r[2], "{r:?}");
    }
}
