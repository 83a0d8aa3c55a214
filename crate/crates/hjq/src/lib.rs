//! Command-line frontend for `hjq-core`: the `.hjm` model format, analysis
//! reports and flow output.

pub mod cli;
pub mod dsl;
pub mod flow;
pub mod report;
