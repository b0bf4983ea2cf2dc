//! The book under `book/` doubles as this crate's documentation: every
//! chapter is included verbatim as a module's rustdoc, so `cargo test`
//! doctests every fenced code block and the book can never drift from the
//! library it describes.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/problem.md")]
pub mod problem {}

#[doc = include_str!("../../../book/src/oracles.md")]
pub mod oracles {}

#[doc = include_str!("../../../book/src/dual.md")]
pub mod dual {}

#[doc = include_str!("../../../book/src/gossip.md")]
pub mod gossip {}

#[doc = include_str!("../../../book/src/ucdc.md")]
pub mod ucdc {}

#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}

#[doc = include_str!("../../../book/src/formats.md")]
pub mod formats {}
