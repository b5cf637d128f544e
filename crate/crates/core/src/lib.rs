//! Non-neural building blocks for low-light face detection pipelines.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`imgcore`]: planar floating-point images, PNG I/O, grayscale,
//!   Gaussian filtering and bilinear resampling.
//! - [`enhance`]: multi-scale retinex with color restoration, spectral
//!   residual saliency and saliency/retinex blending.
//! - [`zerodce`]: quadratic light-enhancement curves fitted per image
//!   against non-reference losses.
//! - [`transfer`]: darkening and noise synthesis that moves normal-light
//!   images into the enhanced low-light domain.
//! - [`boxops`]: box algebra, NMS, Soft-NMS, weighted boxes fusion and
//!   test-time-augmentation merging.
//! - [`dataset`]: annotation ingestion, stratified splits, augmentation
//!   geometry, anchor statistics and AP evaluation.

pub mod boxops;
pub mod dataset;
pub mod enhance;
mod error;
pub mod imgcore;
pub mod rng;
pub mod transfer;
pub mod zerodce;

pub use error::{Error, Result};
