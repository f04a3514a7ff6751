#![no_std]
// `!(x > 0.0)` style checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod classify;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod nn;
pub mod preprocess;
pub mod rng;
pub mod seqae;
pub mod spectrum;
pub mod split;
pub mod synth;
pub mod toygen;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use rng::Rng;
pub use spectrum::{Dataset, Label, LabelSet, Provenance, Record, ScaleState, Spectrum2D};
