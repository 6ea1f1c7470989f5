#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod forgery;
pub mod lm;
pub mod metrics;
pub mod raster;
pub mod resample;
pub mod rng;
pub mod scene;
pub mod speckle;
pub mod spectral;
pub mod sysid;

pub use error::{Error, Result};
