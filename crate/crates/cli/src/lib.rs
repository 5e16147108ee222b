//! Experiment definitions and artifact plumbing for the `paper-repro`
//! binary, exposed as a library so integration tests can drive the same
//! code paths directly.

pub mod experiments;
pub mod report;
