//! Runs the book's code snippets as doctests.
//!
//! mdbook cannot give code blocks access to external crates, so each chapter
//! is included here as module documentation and `cargo test --doc` compiles
//! and runs every `rust` block against the real `weyl-lab`. If a snippet in
//! `book/src/` drifts from the library, this crate fails to test.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/families-and-exponents.md")]
pub mod families_and_exponents {}

#[doc = include_str!("../../../book/src/evaluating-sums.md")]
pub mod evaluating_sums {}

#[doc = include_str!("../../../book/src/certified-suprema.md")]
pub mod certified_suprema {}

#[doc = include_str!("../../../book/src/exact-discrepancy.md")]
pub mod exact_discrepancy {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}
