//! The user guide, sourced from `book/src` (rendered standalone with
//! mdbook). Including the chapters here compiles every code example
//! against the current API under `cargo test --doc`, so the guide cannot
//! drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/balance-sheets.md")]
pub mod balance_sheets {}

#[doc = include_str!("../../../book/src/valuation-models.md")]
pub mod valuation_models {}

#[doc = include_str!("../../../book/src/fixed-point.md")]
pub mod fixed_point {}

#[doc = include_str!("../../../book/src/stress-testing.md")]
pub mod stress_testing {}

#[doc = include_str!("../../../book/src/data-and-generation.md")]
pub mod data_and_generation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
