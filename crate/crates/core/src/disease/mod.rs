//! Course of infection, symptoms and contact transmission.

mod course;
mod symptoms;
mod transmission;
mod viral_load;

pub use course::{sample_disease_course, DiseaseCourse, DiseaseParams, Severity};
pub use symptoms::{
    covid_phase, covid_probability, flu_phase, sample_cold_symptoms, sample_covid_symptoms, sample_flu_symptoms,
    CovidPhase, FluPhase, Illness, Person, Symptom, SymptomSet,
};
pub use transmission::{maybe_transmit, transmission_probability, Infection, Infectiousness, Side, TransmissionParams};
pub use viral_load::ViralLoadCurve;
