//! The guide's chapters, compiled so their snippets run as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/commitments.md")]
pub mod commitments {}
#[doc = include_str!("../../../book/src/registry.md")]
pub mod registry {}
#[doc = include_str!("../../../book/src/eventlog.md")]
pub mod eventlog {}
#[doc = include_str!("../../../book/src/reconstruction.md")]
pub mod reconstruction {}
#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
#[doc = include_str!("../../../book/src/poisoning.md")]
pub mod poisoning {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
