//! Instance generation, solver dispatch with timing and normalization, and
//! CSV sweeps over generated instances.

pub mod generate;
pub mod run;
pub mod sweep;
