//! Oracles and fixture builders shared by the trajeval test suites.

pub mod checks;
pub mod fixtures;
pub mod oracles;
