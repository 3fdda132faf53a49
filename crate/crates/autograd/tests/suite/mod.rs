//! Operator checks shared by this crate's tests and the workspace
//! acceptance suite.
#![allow(dead_code)]

pub mod gradients;
pub mod oracles;
