//! Reference spectra: symmetry-sector exact diagonalization and the
//! free-fermion solution of the Ising chain.

pub mod ed;
pub mod dsf;
pub mod fermion;

pub use dsf::ed_dsf;
pub use ed::{ed_sector_spectrum, full_spectrum, EdOptions, EdResult, SectorSpectrum};
pub use fermion::{classify_3fermion, dispersion, tfi_fermion_spectrum, FermionLevel, Occupation, ThreeFermionType};
