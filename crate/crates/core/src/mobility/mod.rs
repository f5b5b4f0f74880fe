//! Where agents go each day and whom they meet there.

mod behavior;
mod contacts;
mod matrix;
mod schedule;

pub use behavior::{interpolate_gammas, BehaviorLevels};
pub use contacts::{
    contact_demand, sample_contacts, sample_negative_binomial, simulated_contact_matrix, Attendee, ContactParams,
    ContactTally, Encounter,
};
pub use matrix::{ContactCategory, ContactMatrices, ContactMatrix, Matrix};
pub use schedule::{
    attach_children, build_schedule, is_weekend, Activity, ActivityMemory, DayContext, ScheduleParams, Visit,
};
