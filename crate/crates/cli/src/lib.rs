//! Library surface of the experiment driver, kept separate from the
//! binary so integration tests can call the runners directly.

pub mod config;
pub mod experiments;
