//! Fetal ECG extraction from multichannel abdominal recordings.
//!
//! Channels are cleaned, combined along a grid of unit-norm directions,
//! and each combination is decomposed by optimal singular-value shrinkage
//! of beat-aligned segments into a maternal and a fetal component.

pub mod decompose;
pub mod error;
pub mod evaluate;
pub mod io;
pub mod pipeline;
pub mod preprocess;
pub mod rpeak;
pub mod shrinkage;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
