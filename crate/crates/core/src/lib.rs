//! Mines API knowledge (parameter constraints from documentation, usage
//! patterns from code fragments) and uses it to guide unit test generation.

pub mod docs;
pub mod emit;
pub mod fragment;
pub mod model;
pub mod oracle;
pub mod report;
pub mod resolve;
pub mod suite;
pub mod synth;
pub mod usage;
