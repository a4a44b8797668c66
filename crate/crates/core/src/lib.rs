//! Image pipeline and classifiers for detecting lesions on fish photographs.
//!
//! Every stage is a pure function over in-memory rasters and feature
//! matrices, so the crate only needs `alloc`:
//!
//! * [`resize`]: cubic B-spline resampling to a canonical frame
//! * [`enhance`]: contrast-limited adaptive histogram equalization with a
//!   Rayleigh output distribution
//! * [`colorspace`]: RGB → XYZ → L\*a\*b\*
//! * [`segment`]: k-means clustering and lesion-cluster selection
//! * [`features`]: statistical moments and GLCM texture descriptors
//! * [`svm`], [`baselines`]: kernel soft-margin SVM (SMO) and the
//!   comparison classifiers
//! * [`metrics`]: confusion matrices, rate metrics, ROC/AUC
//! * [`augment`]: flips, rotations, shifts and zooms
//! * [`pipeline`]: the composition of the above into a feature extractor
//!
//! File formats, dataset manifests and the command line live in the
//! `aquascan` crate.
#![no_std]
#![forbid(unsafe_code)]
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod augment;
pub mod baselines;
pub mod colorspace;
pub mod enhance;
pub mod features;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod resize;
pub mod segment;
pub mod svm;

mod label;

pub use label::{Label, ParseLabelError};
