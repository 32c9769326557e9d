//! Synthetic THz time-domain leaf-wetness data and the two regressors
//! (windowed-polynomial bagged trees and a 1D CNN) that estimate the
//! surface water mass from a transmitted waveform.

pub mod cnn;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod matrix;
pub mod rng;
mod serde_opt;
pub mod sim;
pub mod spectral;
pub mod tree;

pub use data::{Dataset, Orientation, PredictionReport, Provenance, SampleRecord, TimeBase, TimeTrace};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use rng::SplitMix64;
