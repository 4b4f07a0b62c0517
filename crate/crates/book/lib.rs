// The guide's Rust listings run as doc-tests of this crate. Each chapter is
// its own module so a failing listing points at its chapter.

#[doc = include_str!("../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../book/src/records.md")]
pub mod records {}
#[doc = include_str!("../../book/src/preprocessing.md")]
pub mod preprocessing {}
#[doc = include_str!("../../book/src/shrinkage.md")]
pub mod shrinkage {}
#[doc = include_str!("../../book/src/rpeaks.md")]
pub mod rpeaks {}
#[doc = include_str!("../../book/src/decomposition.md")]
pub mod decomposition {}
#[doc = include_str!("../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../book/src/cli.md")]
pub mod cli {}
