//! Command-line pipeline over the analysis core.

pub mod input;
pub mod pipeline;
