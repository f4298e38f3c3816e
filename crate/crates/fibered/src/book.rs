//! The guide, compiled chapter by chapter.
//!
//! Each module below embeds one chapter of the mdbook under `book/` as
//! its documentation, so every fenced code block in the book runs as a
//! doc-test of this crate (`cargo test --doc`). The book and the library
//! cannot drift apart: a snippet that stops compiling fails the build.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/grids-and-fields.md")]
pub mod grids_and_fields {}

#[doc = include_str!("../../../book/src/the-system.md")]
pub mod the_system {}

#[doc = include_str!("../../../book/src/solvers.md")]
pub mod solvers {}

#[doc = include_str!("../../../book/src/level-set-geometry.md")]
pub mod level_set_geometry {}

#[doc = include_str!("../../../book/src/stability-and-monotonicity.md")]
pub mod stability_and_monotonicity {}

#[doc = include_str!("../../../book/src/inequality-and-scans.md")]
pub mod inequality_and_scans {}

#[doc = include_str!("../../../book/src/symmetry.md")]
pub mod symmetry {}

#[doc = include_str!("../../../book/src/scenarios-and-cli.md")]
pub mod scenarios_and_cli {}

#[doc = include_str!("../../../book/src/file-formats.md")]
pub mod file_formats {}
