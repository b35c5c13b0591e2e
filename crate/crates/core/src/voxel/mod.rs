//! Voxel grids, labeled volumes, binarization, connected components and the
//! VGRID file format.

mod components;
mod grid;
pub mod io;

pub use components::{connected_components, largest_component};
pub use grid::{binarize, LabeledVolume, VoxelGrid, DEFAULT_THRESHOLD};
pub use io::{load_grid, load_labels, save_grid, save_labels};
