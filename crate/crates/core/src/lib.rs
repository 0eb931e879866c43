//! Handover gesture recognition from detector features.
//!
//! The crate turns per-frame detector outputs (object boxes, COCO body
//! keypoints, head pose) into fixed-length feature vectors, trains a small
//! MLP to decide whether the person is offering an object, and evaluates the
//! absolute-pixel and object-relative encodings against each other.
//!
//! - [`feature`]: domain types and the two encodings
//! - [`mlp`]: the classifier, its loss, gradients and optimizer
//! - [`data`]: record files, balancing, splitting, checkpoints
//! - [`synth`]: a labeled scene generator for desk-scale experiments
//! - [`eval`]: accuracy, confusion matrices, multi-split evaluation

pub mod data;
pub mod error;
pub mod eval;
pub mod feature;
pub mod mlp;
pub mod synth;

pub use error::{Error, ErrorCategory, Result};
