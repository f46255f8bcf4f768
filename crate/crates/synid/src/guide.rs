//! The user guide, one module per chapter.
//!
//! The chapters live as Markdown under `book/` and render with `mdbook`;
//! including them here makes every code block a doc-test, so the guide
//! and the library cannot drift apart.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/graphs.md")]
pub mod graphs {}

#[doc = include_str!("../../../book/src/signatures.md")]
pub mod signatures {}

#[doc = include_str!("../../../book/src/rewriting.md")]
pub mod rewriting {}

#[doc = include_str!("../../../book/src/identification.md")]
pub mod identification {}

#[doc = include_str!("../../../book/src/semantics.md")]
pub mod semantics {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
