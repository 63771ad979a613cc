//! The guide chapters double as doc-tests: every fenced Rust block in
//! `book/src/*.md` is compiled and run against the public API, so the book
//! cannot drift from the crate.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/normal-forms.md")]
mod normal_forms {}

#[doc = include_str!("../../../book/src/rings.md")]
mod rings {}

#[doc = include_str!("../../../book/src/modules-and-ranks.md")]
mod modules_and_ranks {}

#[doc = include_str!("../../../book/src/pairings.md")]
mod pairings {}

#[doc = include_str!("../../../book/src/twists.md")]
mod twists {}

#[doc = include_str!("../../../book/src/selmer-sandbox.md")]
mod selmer_sandbox {}

#[doc = include_str!("../../../book/src/parity-engine.md")]
mod parity_engine {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
