//! Residue microenvironment classification for structure-based sequence
//! design.
//!
//! A protein structure is parsed ([`structure`]), every heavy atom gets a
//! seven-value feature vector ([`features`]), and each residue's
//! surroundings are binned into a 7×20×20×20 grid in a residue-local frame
//! ([`voxel`]). A 3D convolution and attention network ([`net`], built on the
//! `emocpd-autograd` engine) maps grids to twenty amino-acid classes;
//! [`train`] fits and scores it and [`analysis`] relates per-structure
//! accuracy to composition.

pub mod amino;
pub mod analysis;
pub mod cli;
pub mod error;
pub mod features;
pub mod geometry;
pub mod net;
pub mod pipeline;
pub mod predictions;
pub mod structure;
pub mod synth;
pub mod train;
pub mod voxel;

pub use error::{Error, Result};
