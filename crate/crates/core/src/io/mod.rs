//! File formats: subspace matrix containers, spectrum CSV and parameter
//! checkpoints.

pub mod checkpoint;
pub mod container;
pub mod spectrum;

pub use checkpoint::Checkpoint;
pub use container::{ContainerHeader, SubspaceContainer, MAGIC};
pub use spectrum::{
    read_spectrum_csv, rows_from_ed, rows_from_fermion, rows_from_spectrum, write_spectrum_csv, SpectrumRow,
};
