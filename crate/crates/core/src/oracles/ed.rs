use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::models::Lattice;
use crate::statevec::{CompiledPauliSum, PauliString, StateVector};
use crate::symmetry::{check_commutes, Sector, SectorLabel, SymmetryGroup, SymmetrySpec};

#[derive(Clone, Debug)]
pub struct SectorSpectrum {
    pub label: SectorLabel,
    pub dim: usize,
    /// Ascending.
    pub energies: Vec<f64>,
    /// Eigenvectors (columns) in the sector basis, when requested.
    pub vectors: Option<CMat>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdLevel {
    pub momentum: Vec<usize>,
    pub parity: Option<i32>,
    pub popcount: Option<usize>,
    pub rank: usize,
    pub energy: f64,
}

/// Exact diagonalization result together with the group used to build it,
/// so that sector eigenvectors can be mapped back to the full space.
pub struct EdResult {
    pub group: SymmetryGroup,
    pub sectors: Vec<SectorSpectrum>,
}

#[derive(Clone, Debug)]
pub struct EdOptions {
    /// Sectors to solve; all sectors of the group when `None`.
    pub labels: Option<Vec<SectorLabel>>,
    /// Keep only this many lowest energies per sector.
    pub levels_per_sector: Option<usize>,
    pub vectors: bool,
}

impl Default for EdOptions {
    fn default() -> Self {
        Self { labels: None, levels_per_sector: None, vectors: false }
    }
}

pub fn ed_sector_spectrum(
    lattice: &Lattice,
    terms: &[PauliString],
    spec: &SymmetrySpec,
    options: &EdOptions,
) -> Result<EdResult> {
    if lattice.num_sites() > 16 {
        return Err(Error::Unsupported(format!("dense sector ED on {} sites", lattice.num_sites())));
    }
    check_commutes(lattice, terms, spec)?;
    let group = SymmetryGroup::new(lattice, spec)?;
    let op = CompiledPauliSum::new(lattice.num_sites(), terms)?;
    let labels = options.labels.clone().unwrap_or_else(|| group.labels());
    let mut sectors = Vec::with_capacity(labels.len());
    for label in labels {
        let sector = group.sector(&label)?;
        let mut m = group.block_matrix(&op, &sector)?;
        let dev = linalg::hermitize(&mut m);
        if dev > 1e-10 {
            return Err(Error::NonHermitian(dev));
        }
        let keep = options.levels_per_sector.unwrap_or(usize::MAX).min(sector.dim());
        let (energies, vectors) = if options.vectors {
            let (w, v) = linalg::eigh(&m)?;
            let v = v.subcols(0, keep).to_owned();
            (w[..keep].to_vec(), Some(v))
        } else {
            let w = linalg::eigvalsh(&m)?;
            (w[..keep].to_vec(), None)
        };
        log::debug!("ed sector {:?}: dim {}", label, sector.dim());
        sectors.push(SectorSpectrum { label, dim: sector.dim(), energies, vectors });
    }
    Ok(EdResult { group, sectors })
}

impl EdResult {
    pub fn sector(&self, label: &SectorLabel) -> Option<&SectorSpectrum> {
        self.sectors.iter().find(|s| &s.label == label)
    }

    /// All energies merged and sorted.
    pub fn merged(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.sectors.iter().flat_map(|s| s.energies.iter().copied()).collect();
        all.sort_by(f64::total_cmp);
        all
    }

    pub fn ground_energy(&self) -> Option<f64> {
        self.sectors.iter().filter_map(|s| s.energies.first().copied()).min_by(f64::total_cmp)
    }

    pub fn levels(&self) -> Vec<EdLevel> {
        self.sectors
            .iter()
            .flat_map(|s| {
                s.energies.iter().enumerate().map(move |(rank, &energy)| EdLevel {
                    momentum: s.label.momentum.clone(),
                    parity: s.label.parity,
                    popcount: s.label.popcount,
                    rank,
                    energy,
                })
            })
            .collect()
    }

    /// Full-space eigenvector `k` of a solved sector.
    pub fn eigenvector(&self, label: &SectorLabel, k: usize) -> Result<StateVector> {
        let s = self.sector(label).ok_or_else(|| Error::InvalidMomentum(format!("sector {label:?} not solved")))?;
        let v = s.vectors.as_ref().ok_or_else(|| Error::Unsupported("eigenvectors were not requested".into()))?;
        let sector = self.group.sector(label)?;
        Ok(self.group.decompress(&linalg::col(v, k), &sector))
    }

    pub fn sector_basis(&self, label: &SectorLabel) -> Result<Sector> {
        self.group.sector(label)
    }
}

/// Dense diagonalization of the full 2^N Hamiltonian (small N only).
pub fn full_spectrum(num_sites: usize, terms: &[PauliString]) -> Result<Vec<f64>> {
    if num_sites > 12 {
        return Err(Error::Unsupported(format!("full dense ED on {num_sites} sites")));
    }
    let op = CompiledPauliSum::new(num_sites, terms)?;
    let dim = 1usize << num_sites;
    let mut m = linalg::zeros(dim, dim);
    for x in 0..dim {
        op.for_each_column_entry(x, |t, h| m[(t, x)] += h);
    }
    linalg::hermitize(&mut m);
    linalg::eigvalsh(&m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, ModelKind};

    #[test]
    fn ising_limit_is_doubly_degenerate() {
        let m = build_model(ModelKind::TfiChain, &[4], Some(0.0)).unwrap();
        let spec = SymmetrySpec { translations: true, parity: true, popcount: None };
        let ed = ed_sector_spectrum(&m.lattice, &m.terms, &spec, &EdOptions::default()).unwrap();
        let all = ed.merged();
        assert!((all[0] + 4.0).abs() < 1e-12 && (all[1] + 4.0).abs() < 1e-12);
        let even = ed.sectors.iter().filter(|s| s.label.parity == Some(1)).flat_map(|s| s.energies.clone());
        assert!(even.into_iter().any(|e| (e + 4.0).abs() < 1e-12));
    }

    #[test]
    fn sectors_merge_to_full_spectrum() {
        for (kind, sizes, g, spec) in [
            (ModelKind::TfiChain, vec![8], Some(0.8), SymmetrySpec { translations: true, parity: true, popcount: None }),
            (ModelKind::HeisenbergChain, vec![8], None, SymmetrySpec { translations: true, parity: false, popcount: None }),
        ] {
            let m = build_model(kind, &sizes, g).unwrap();
            let full = full_spectrum(8, &m.terms).unwrap();
            let ed = ed_sector_spectrum(&m.lattice, &m.terms, &spec, &EdOptions::default()).unwrap();
            let merged = ed.merged();
            assert_eq!(merged.len(), full.len());
            for (a, b) in merged.iter().zip(&full) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn magnetization_blocks_cover_spectrum() {
        let m = build_model(ModelKind::HeisenbergChain, &[6], None).unwrap();
        let full = full_spectrum(6, &m.terms).unwrap();
        let mut all = Vec::new();
        for k in 0..=6 {
            let spec = SymmetrySpec { translations: true, parity: false, popcount: Some(k) };
            let ed = ed_sector_spectrum(&m.lattice, &m.terms, &spec, &EdOptions::default()).unwrap();
            all.extend(ed.merged());
        }
        all.sort_by(f64::total_cmp);
        for (a, b) in all.iter().zip(&full) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn eigenvectors_are_eigenstates() {
        let m = build_model(ModelKind::TfiChain, &[6], Some(1.1)).unwrap();
        let spec = SymmetrySpec { translations: true, parity: true, popcount: None };
        let opts = EdOptions { labels: None, levels_per_sector: Some(2), vectors: true };
        let ed = ed_sector_spectrum(&m.lattice, &m.terms, &spec, &opts).unwrap();
        for s in &ed.sectors {
            for k in 0..s.energies.len() {
                let v = ed.eigenvector(&s.label, k).unwrap();
                let e = v.expect_pauli_sum(&m.terms).unwrap();
                assert!((e - s.energies[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn non_commuting_symmetry_is_rejected() {
        let m = build_model(ModelKind::TfiChain, &[4], Some(1.0)).unwrap();
        let spec = SymmetrySpec { translations: true, parity: false, popcount: Some(2) };
        assert!(matches!(
            ed_sector_spectrum(&m.lattice, &m.terms, &spec, &EdOptions::default()),
            Err(Error::SymmetryMismatch(_))
        ));
    }
}
