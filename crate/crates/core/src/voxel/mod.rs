//! Residue-local frames and 7×20×20×20 microenvironment grids.

mod emog;
mod frame;
mod grid;

pub use emog::{read_emog, write_emog, EmogError, EMOG_MAGIC, EMOG_VERSION};
pub use frame::{virtual_cbeta, LocalFrame, CB_ANGLE, CB_BOND, CB_DIHEDRAL};
pub use grid::{build_grid, build_grids, cell_index, cell_offset, MicroEnvGrid, CELL, GRID_LEN, GRID_SIZE};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("degenerate residue geometry: {0}")]
    Degenerate(&'static str),
}
