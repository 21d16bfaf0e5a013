//! Test objects, 0-test objects and their verification.

pub mod family;
pub mod mollifier;
pub mod verify;

pub use family::{Family, FamilyKind, Schedule, TestObjectFamily, ZeroTestObjectFamily};
pub use mollifier::{make_mollifier, mollifier, MomentMollifier, MAX_ORDER};
pub use verify::{check_uniform, make_uniform_set, shift_set, verify_test_object, Probes, VerificationReport, VerifyConfig};
