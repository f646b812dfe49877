//! Keeps the book honest.
//!
//! mdBook does not run a chapter's Rust snippets against the workspace
//! crates, so each chapter is attached here as module documentation and
//! `cargo test --doc -p qkdsim-guide` compiles and executes every code
//! block. A chapter snippet that drifts from the `qkdsim` API fails the
//! workspace test run.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/pairs-and-faults.md")]
pub mod pairs_and_faults {}

#[doc = include_str!("../../../book/src/codes-and-purification.md")]
pub mod codes_and_purification {}

#[doc = include_str!("../../../book/src/protocols.md")]
pub mod protocols {}

#[doc = include_str!("../../../book/src/eavesdroppers.md")]
pub mod eavesdroppers {}

#[doc = include_str!("../../../book/src/key-rates.md")]
pub mod key_rates {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
