//! Dense tensors and the contraction primitives the models are built from:
//! mode-n products, Tucker reconstruction, tensor-ring element/reconstruction
//! and CP reconstruction.
//!
//! All values are `f64`; storage is flat row-major (last index fastest).

mod cp;
mod dense;
mod ring;

pub use cp::{cp_reconstruct, CpFactors};
pub use dense::{
    dot, mode_matrix_product, mode_product, multilinear_dot, tucker_reconstruct, DenseTensor, Mat,
};
pub use ring::{tr_element, tr_reconstruct, TensorRing};

use thiserror::Error;

/// Default cap on materialized element counts (`tr_reconstruct`, KB tensors).
/// Reconstruction of a reshaped core grows exponentially with the embedding
/// dimension, so an explicit ceiling turns a runaway allocation into an error.
pub const DEFAULT_MATERIALIZE_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TensorError {
    #[error("shape {shape:?} requires {expected} elements, got {actual}")]
    ShapeDataMismatch {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("mode sizes must be >= 1, got shape {shape:?}")]
    ZeroMode { shape: Vec<usize> },
    #[error("mode {mode} out of range for order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },
    #[error("dimension mismatch at mode {mode}: tensor size {expected}, operand size {actual}")]
    DimMismatch {
        mode: usize,
        expected: usize,
        actual: usize,
    },
    #[error("index {index} out of range for mode {mode} of size {size}")]
    IndexOutOfRange {
        mode: usize,
        index: usize,
        size: usize,
    },
    #[error("index has {actual} entries, tensor has order {expected}")]
    IndexOrderMismatch { expected: usize, actual: usize },
    #[error("cannot reshape {elements} elements into {requested:?} ({requested_elements} elements)")]
    ReshapeMismatch {
        elements: usize,
        requested: Vec<usize>,
        requested_elements: usize,
    },
    #[error("materializing {required} elements exceeds the cap of {allowed}")]
    CapacityExceeded { required: usize, allowed: usize },
    #[error("vectors must share one length: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid tensor ring: {0}")]
    InvalidRing(String),
    #[error("invalid CP factors: {0}")]
    InvalidCp(String),
}
