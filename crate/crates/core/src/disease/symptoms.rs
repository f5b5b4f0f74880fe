//! Daily symptom sampling for COVID-19 and the background flu and cold.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::disease::{DiseaseCourse, Severity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symptom {
    Fever,
    Chills,
    Gastro,
    Diarrhea,
    NauseaVomiting,
    Sneezing,
    Cough,
    Fatigue,
    HardTimeWakingUp,
    Headache,
    Confused,
    LostConsciousness,
    Unusual,
    RunnyNose,
    SoreThroat,
    SevereChestPain,
    TroubleBreathing,
    LightTroubleBreathing,
    ModerateTroubleBreathing,
    HeavyTroubleBreathing,
    LossOfTaste,
    Aches,
}

impl Symptom {
    pub const ALL: [Symptom; 22] = [
        Symptom::Fever,
        Symptom::Chills,
        Symptom::Gastro,
        Symptom::Diarrhea,
        Symptom::NauseaVomiting,
        Symptom::Sneezing,
        Symptom::Cough,
        Symptom::Fatigue,
        Symptom::HardTimeWakingUp,
        Symptom::Headache,
        Symptom::Confused,
        Symptom::LostConsciousness,
        Symptom::Unusual,
        Symptom::RunnyNose,
        Symptom::SoreThroat,
        Symptom::SevereChestPain,
        Symptom::TroubleBreathing,
        Symptom::LightTroubleBreathing,
        Symptom::ModerateTroubleBreathing,
        Symptom::HeavyTroubleBreathing,
        Symptom::LossOfTaste,
        Symptom::Aches,
    ];

    /// The broader symptom this one implies, if any.
    pub fn parent(self) -> Option<Symptom> {
        use Symptom::*;
        match self {
            HardTimeWakingUp | Headache | Confused | LostConsciousness | Unusual => Some(Fatigue),
            SevereChestPain | LightTroubleBreathing | ModerateTroubleBreathing | HeavyTroubleBreathing => {
                Some(TroubleBreathing)
            }
            Diarrhea | NauseaVomiting => Some(Gastro),
            _ => None,
        }
    }

    fn bit(self) -> u32 {
        1 << (self as u32)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymptomSet(u32);

impl SymptomSet {
    pub fn contains(self, s: Symptom) -> bool {
        self.0 & s.bit() != 0
    }

    pub fn insert(&mut self, s: Symptom) {
        self.0 |= s.bit();
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: SymptomSet) -> SymptomSet {
        SymptomSet(self.0 | other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = Symptom> {
        Symptom::ALL.into_iter().filter(move |s| self.contains(*s))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Adds every implied parent symptom.
    pub fn closed(mut self) -> SymptomSet {
        for s in Symptom::ALL {
            if self.contains(s) {
                if let Some(p) = s.parent() {
                    self.insert(p);
                }
            }
        }
        self
    }

    pub fn respects_hierarchy(self) -> bool {
        self.iter().all(|s| s.parent().is_none_or(|p| self.contains(p)))
    }
}

impl FromIterator<Symptom> for SymptomSet {
    fn from_iter<I: IntoIterator<Item = Symptom>>(iter: I) -> Self {
        let mut s = SymptomSet::default();
        for x in iter {
            s.insert(x);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovidPhase {
    Incubation,
    Onset,
    Plateau,
    PostPlateau1,
    PostPlateau2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluPhase {
    First,
    Main,
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Illness {
    Covid,
    Flu,
    Cold,
}

/// Symptom-relevant phase of a course at time `t`, or `None` once it is over.
pub fn covid_phase(course: &DiseaseCourse, t: f64) -> Option<CovidPhase> {
    let s = course.symptom_onset;
    if t < course.exposure || t >= course.recovery {
        return None;
    }
    if t < s {
        return Some(CovidPhase::Incubation);
    }
    if t < s + 1.0 {
        return Some(CovidPhase::Onset);
    }
    let plateau_end = course.viral_load.plateau_end.max(s + 1.0);
    if t < plateau_end {
        return Some(CovidPhase::Plateau);
    }
    let mid = 0.5 * (plateau_end + course.recovery);
    Some(if t < mid {
        CovidPhase::PostPlateau1
    } else {
        CovidPhase::PostPlateau2
    })
}

pub fn flu_phase(day: u32, start: u32, end: u32) -> Option<FluPhase> {
    if day < start || day >= end {
        None
    } else if day == start {
        Some(FluPhase::First)
    } else if day + 1 == end {
        Some(FluPhase::Last)
    } else {
        Some(FluPhase::Main)
    }
}

/// Inputs of the symptom tables that depend on the person.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Person {
    pub age: u32,
    pub carefulness: f64,
}

fn idx(phase: CovidPhase) -> usize {
    phase as usize
}

/// Probability of a first-level symptom on a day in `phase`, or of a
/// dependent symptom given its parent.
///
/// Dependent symptoms carry the extra conditions from the tables: unusual
/// symptoms need age above 75 and severe chest pain needs a severe course,
/// both reported here as probability 0 when unmet.
pub fn covid_probability(s: Symptom, phase: CovidPhase, who: Person, inoculum: f64, severity: Severity) -> f64 {
    use Symptom::*;
    let i = idx(phase);
    if phase == CovidPhase::Incubation {
        return 0.0;
    }
    let inc = inoculum;
    let a = who.age as f64 / 200.0;
    let f = a + inc * 0.6 - who.carefulness / 2.0;
    let c4 = who.carefulness / 4.0;
    let g = inc - 0.15;
    let p = match s {
        Fever => [0.0, 0.2, 0.8, 0.0, 0.0][i],
        Chills => [0.0, 0.8, 0.5, 0.0, 0.0][i],
        Gastro => {
            if inc > 0.6 {
                [0.0, g, g / 4.0, g / 10.0, g / 10.0][i]
            } else {
                0.0
            }
        }
        Diarrhea => 0.9,
        NauseaVomiting => 0.7,
        Fatigue => [0.0, f, f, 1.5 * f + g, 2.0 * f + g][i],
        HardTimeWakingUp => 0.6,
        Unusual => {
            if who.age > 75 {
                [0.0, 0.2, 0.5, 0.5, 0.5][i]
            } else {
                0.0
            }
        }
        Headache => 0.5,
        Confused => 0.1,
        LostConsciousness => 0.1,
        TroubleBreathing => [0.0, inc / 2.0 - c4, 2.0 * (inc - c4), inc - c4, (inc - c4) / 2.0][i],
        Sneezing => [0.0, 0.2, 0.3, 0.3, 0.3][i],
        Cough => [0.0, 0.6, 0.9, 0.9, 0.9][i],
        RunnyNose => [0.0, 0.1, 0.2, 0.2, 0.2][i],
        SoreThroat => [0.0, 0.5, 0.8, 0.8, 0.8][i],
        SevereChestPain => {
            if severity == Severity::Severe {
                [0.0, 0.4, 0.5, 0.15, 0.15][i]
            } else {
                0.0
            }
        }
        LossOfTaste => [0.0, 0.25, 0.35, 0.0, 0.0][i],
        LightTroubleBreathing => (severity == Severity::Mild) as u8 as f64,
        ModerateTroubleBreathing => (severity == Severity::Moderate) as u8 as f64,
        HeavyTroubleBreathing => (severity == Severity::Severe) as u8 as f64,
        Aches => 0.0,
    };
    p.clamp(0.0, 1.0)
}

fn draw(rng: &mut impl Rng, p: f64) -> bool {
    rng.random::<f64>() < p
}

/// One day of COVID-19 symptoms. `gastro_started` carries gastro persistence
/// across days and is updated in place.
pub fn sample_covid_symptoms(
    course: &DiseaseCourse,
    phase: CovidPhase,
    who: Person,
    gastro_started: &mut bool,
    rng: &mut impl Rng,
) -> SymptomSet {
    use Symptom::*;
    let mut out = SymptomSet::default();
    let Some(severity) = course.severity else {
        return out;
    };
    if phase == CovidPhase::Incubation {
        return out;
    }
    let inc = course.inoculum;
    let p = |s| covid_probability(s, phase, who, inc, severity);
    for s in [Fever, Chills, Sneezing, Cough, RunnyNose, SoreThroat, LossOfTaste] {
        if draw(rng, p(s)) {
            out.insert(s);
        }
    }
    let gastro = *gastro_started || draw(rng, p(Gastro));
    if gastro {
        *gastro_started = true;
        out.insert(Gastro);
        for s in [Diarrhea, NauseaVomiting] {
            if draw(rng, p(s)) {
                out.insert(s);
            }
        }
    }
    if draw(rng, p(Fatigue)) {
        out.insert(Fatigue);
        for s in [HardTimeWakingUp, Unusual, Headache, Confused, LostConsciousness] {
            if draw(rng, p(s)) {
                out.insert(s);
            }
        }
    }
    if draw(rng, p(TroubleBreathing)) {
        out.insert(TroubleBreathing);
        out.insert(match severity {
            Severity::Mild => LightTroubleBreathing,
            Severity::Moderate => ModerateTroubleBreathing,
            Severity::Severe => HeavyTroubleBreathing,
        });
        if draw(rng, p(SevereChestPain)) {
            out.insert(SevereChestPain);
        }
    }
    out.closed()
}

pub fn sample_flu_symptoms(phase: FluPhase, rng: &mut impl Rng) -> SymptomSet {
    use Symptom::*;
    let i = phase as usize;
    let mut out = SymptomSet::default();
    if draw(rng, [0.7, 0.7, 0.3][i]) {
        out.insert(Fever);
    }
    if draw(rng, [0.7, 0.7, 0.2][i]) {
        out.insert(Gastro);
        if draw(rng, 0.5) {
            out.insert(Diarrhea);
        }
        if draw(rng, [0.5, 0.5, 0.25][i]) {
            out.insert(NauseaVomiting);
        }
    }
    if draw(rng, [0.4, 0.8, 0.8][i]) {
        out.insert(Fatigue);
        if draw(rng, [0.3, 0.5, 0.4][i]) {
            out.insert(HardTimeWakingUp);
        }
    }
    if draw(rng, [0.3, 0.5, 0.8][i]) {
        out.insert(Aches);
    }
    out.closed()
}

pub fn sample_cold_symptoms(rng: &mut impl Rng) -> SymptomSet {
    use Symptom::*;
    let mut out = SymptomSet::default();
    for (s, p) in [(RunnyNose, 0.8), (Sneezing, 0.6), (Cough, 0.5), (SoreThroat, 0.4)] {
        if draw(rng, p) {
            out.insert(s);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disease::ViralLoadCurve;
    use crate::rng::{stream, Stream};
    use proptest::prelude::*;

    fn course(inoculum: f64, severity: Option<Severity>) -> DiseaseCourse {
        DiseaseCourse {
            exposure: 0.0,
            incubation_days: 5.0,
            symptom_onset: 5.0,
            infectiousness_onset: 2.5,
            recovery: 19.0,
            asymptomatic: severity.is_none(),
            inoculum,
            severity,
            viral_load: ViralLoadCurve {
                onset: 2.5,
                peak: 4.3,
                plateau_start: 5.8,
                plateau_end: 8.0,
                end: 19.0,
                peak_height: 0.8,
                plateau_height: 0.2,
            },
            will_be_hospitalized: severity == Some(Severity::Severe),
            will_need_icu: false,
            will_die: false,
            hospital_admission: None,
            death: None,
        }
    }

    const WHO: Person = Person { age: 40, carefulness: 0.5 };

    #[test]
    fn phases() {
        let c = course(0.5, Some(Severity::Mild));
        assert_eq!(covid_phase(&c, 1.0), Some(CovidPhase::Incubation));
        assert_eq!(covid_phase(&c, 5.5), Some(CovidPhase::Onset));
        assert_eq!(covid_phase(&c, 7.0), Some(CovidPhase::Plateau));
        assert_eq!(covid_phase(&c, 10.0), Some(CovidPhase::PostPlateau1));
        assert_eq!(covid_phase(&c, 18.0), Some(CovidPhase::PostPlateau2));
        assert_eq!(covid_phase(&c, 19.0), None);
        assert_eq!(flu_phase(3, 3, 6), Some(FluPhase::First));
        assert_eq!(flu_phase(4, 3, 6), Some(FluPhase::Main));
        assert_eq!(flu_phase(5, 3, 6), Some(FluPhase::Last));
        assert_eq!(flu_phase(6, 3, 6), None);
    }

    #[test]
    fn incubation_is_silent() {
        let c = course(0.9, Some(Severity::Severe));
        let mut rng = stream(0, Stream::Symptoms);
        let mut g = false;
        for _ in 0..1000 {
            assert!(sample_covid_symptoms(&c, CovidPhase::Incubation, WHO, &mut g, &mut rng).is_empty());
        }
    }

    #[test]
    fn table_values() {
        let p = |s, ph| covid_probability(s, ph, WHO, 0.8, Severity::Moderate);
        assert_eq!(p(Symptom::Fever, CovidPhase::Plateau), 0.8);
        assert_eq!(p(Symptom::LossOfTaste, CovidPhase::Plateau), 0.35);
        assert_eq!(p(Symptom::LossOfTaste, CovidPhase::Onset), 0.25);
        let f = covid_probability(Symptom::Fatigue, CovidPhase::Onset, WHO, 0.6, Severity::Mild);
        assert!((f - 0.31).abs() < 1e-12, "{f}");
        assert_eq!(p(Symptom::Unusual, CovidPhase::Plateau), 0.0);
        let old = Person { age: 80, carefulness: 0.5 };
        assert_eq!(covid_probability(Symptom::Unusual, CovidPhase::Plateau, old, 0.8, Severity::Mild), 0.5);
        assert_eq!(p(Symptom::SevereChestPain, CovidPhase::Plateau), 0.0);
        assert_eq!(covid_probability(Symptom::Gastro, CovidPhase::Onset, WHO, 0.5, Severity::Mild), 0.0);
    }

    #[test]
    fn plateau_frequencies() {
        let c = course(0.8, Some(Severity::Moderate));
        let mut rng = stream(1, Stream::Symptoms);
        let n = 20_000;
        let mut fever = 0;
        let mut taste = 0;
        for _ in 0..n {
            let mut g = false;
            let s = sample_covid_symptoms(&c, CovidPhase::Plateau, WHO, &mut g, &mut rng);
            fever += s.contains(Symptom::Fever) as usize;
            taste += s.contains(Symptom::LossOfTaste) as usize;
        }
        assert!((fever as f64 / n as f64 - 0.8).abs() < 0.015);
        assert!((taste as f64 / n as f64 - 0.35).abs() < 0.015);
    }

    #[test]
    fn gastro_persists() {
        let c = course(0.95, Some(Severity::Mild));
        let mut rng = stream(2, Stream::Symptoms);
        let mut g = false;
        let mut started = false;
        for _ in 0..50 {
            let s = sample_covid_symptoms(&c, CovidPhase::PostPlateau2, WHO, &mut g, &mut rng);
            if started {
                assert!(s.contains(Symptom::Gastro));
            }
            started |= s.contains(Symptom::Gastro);
        }
        assert!(started);
    }

    #[test]
    fn asymptomatic_course_has_no_symptoms() {
        let c = course(0.9, None);
        let mut rng = stream(3, Stream::Symptoms);
        let mut g = false;
        assert!(sample_covid_symptoms(&c, CovidPhase::Plateau, WHO, &mut g, &mut rng).is_empty());
    }

    proptest! {
        #[test]
        fn hierarchy_holds(inoc in 0.0f64..1.0, age in 0u32..100, care in 0.0f64..1.0, sev in 0usize..3, ph in 0usize..5, seed in any::<u64>()) {
            let sev = [Severity::Mild, Severity::Moderate, Severity::Severe][sev];
            let ph = [CovidPhase::Incubation, CovidPhase::Onset, CovidPhase::Plateau, CovidPhase::PostPlateau1, CovidPhase::PostPlateau2][ph];
            let c = course(inoc, Some(sev));
            let mut rng = stream(seed, Stream::Symptoms);
            let mut g = false;
            let s = sample_covid_symptoms(&c, ph, Person { age, carefulness: care }, &mut g, &mut rng);
            prop_assert!(s.respects_hierarchy());
            prop_assert!(!s.contains(Symptom::SevereChestPain) || sev == Severity::Severe);
            prop_assert!(!s.contains(Symptom::Unusual) || age > 75);
            let f = sample_flu_symptoms([FluPhase::First, FluPhase::Main, FluPhase::Last][seed as usize % 3], &mut rng);
            prop_assert!(f.respects_hierarchy());
        }
    }
}
