//! File formats, parallel drivers and the command line for the
//! `qracsec-core` analysis.

pub mod attack_spec;
pub mod cli;
pub mod output;
pub mod parallel;
