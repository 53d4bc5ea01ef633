//! texwet: contact-angle prediction from surface texture and chemistry.
//!
//! The crate covers the full pipeline: texture-energy feature extraction
//! from grayscale images, power-transform preprocessing, random-forest
//! feature selection, a residual MLP ensemble, and a repeated k-fold
//! evaluation harness, plus the file formats that tie them together.

pub mod seed;
pub mod cli;
pub mod data;
pub mod ensemble;
pub mod eval;
pub mod forest;
pub mod nn;
pub mod preprocess;
pub mod texture;

pub use cli::run;
