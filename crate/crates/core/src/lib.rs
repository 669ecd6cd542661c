//! Fixed-size window stacks from variable-size images, N-dimensional
//! polynomial convolutional networks, and post-training layer-wise
//! polynomial degree reduction.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`]: dense row-major arrays, valid cross-correlation and the
//!   `NDT1` file format.
//! - [`geometry`]: closed-form overlap, window-count and parameter-feasibility
//!   formulas for the variably overlapping sliding window.
//! - [`transform`]: window origins for the time-coherent sliding patterns,
//!   stack extraction and clamp resizing.
//! - [`engine`]: polynomial convolution layers, dense heads, training,
//!   metrics and model files.
//! - [`reduction`]: polynomial projection on symmetric intervals and the
//!   greedy layer-wise degree reduction loop.
//! - [`dataset`]: manifests, stratified resplitting, distribution reports and
//!   a synthetic image generator.

pub mod dataset;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod reduction;
pub mod tensor;
pub mod transform;

pub use error::{Error, Result};
pub use tensor::{Scalar, Tensor};
