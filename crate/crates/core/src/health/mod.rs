//! Testing, hospitals and isolation.

mod hospital;
mod quarantine;
mod testing;

pub use hospital::{Admission, HospitalParams, HospitalState, HospitalSystem, Ward};
pub use quarantine::{positive_test_release, Quarantine, QuarantineTrigger};
pub use testing::{
    resolve_test, test_priority, FalseNegativeTable, TestHistory, TestOutcome, TestQueue, TestReason, TestRecord,
    TestRequest, TestingParams,
};
