//! Exact S(K, w) of a chain from sector-resolved diagonalization.

use crate::error::{Error, Result};
use crate::linalg;
use crate::models::Lattice;
use crate::observables::{broaden, connected_fourier_state, DsfGrid, DsfPeak, DsfSettings};
use crate::statevec::PauliString;
use crate::symmetry::{SectorLabel, SymmetrySpec};

use super::ed::{ed_sector_spectrum, EdOptions};

/// Exact DSF in the fixed-popcount block `popcount` (the ground state's
/// magnetization). Every eigenstate of the target momentum sectors is used.
pub fn ed_dsf(lattice: &Lattice, terms: &[PauliString], popcount: usize, settings: &DsfSettings) -> Result<DsfGrid> {
    if lattice.translations.len() != 1 {
        return Err(Error::Unsupported("DSF is implemented for chains".into()));
    }
    let n = lattice.num_sites();
    let spec = SymmetrySpec { translations: true, parity: false, popcount: Some(popcount) };
    let lowest = ed_sector_spectrum(lattice, terms, &spec, &EdOptions { levels_per_sector: Some(1), ..Default::default() })?;
    let gs = lowest
        .sectors
        .iter()
        .filter(|s| !s.energies.is_empty())
        .min_by(|a, b| a.energies[0].total_cmp(&b.energies[0]))
        .ok_or_else(|| Error::Unsupported("empty spectrum".into()))?;
    let e0 = gs.energies[0];
    let k_gs = gs.label.momentum[0];
    let gs_full = ed_sector_spectrum(
        lattice,
        terms,
        &spec,
        &EdOptions { labels: Some(vec![gs.label.clone()]), levels_per_sector: Some(1), vectors: true },
    )?;
    let mut psi = gs_full.eigenvector(&gs.label, 0)?;
    psi.normalize()?;
    let momenta: Vec<usize> = settings.momenta.clone().unwrap_or_else(|| (0..n).collect());
    let mut peaks = Vec::new();
    let mut bounds = Vec::new();
    for &m in &momenta {
        let (chi, bound) = connected_fourier_state(&psi, m)?;
        bounds.push(bound);
        let label = SectorLabel { momentum: vec![(k_gs + m) % n], parity: None, popcount: Some(popcount) };
        let ed = ed_sector_spectrum(lattice, terms, &spec, &EdOptions { labels: Some(vec![label.clone()]), levels_per_sector: None, vectors: true })?;
        let sector = ed.sector_basis(&label)?;
        let c = ed.group.compress(chi.amplitudes(), &sector);
        let s = &ed.sectors[0];
        let v = s.vectors.as_ref().expect("vectors requested");
        for (a, e) in s.energies.iter().enumerate() {
            let amp: num_complex::Complex64 = linalg::col(v, a).iter().zip(&c).map(|(u, x)| u.conj() * x).sum();
            peaks.push(DsfPeak { momentum: m, omega: e - e0, weight: amp.norm_sqr() });
        }
    }
    broaden(n, peaks, bounds, e0, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, ModelKind};

    #[test]
    fn exact_weights_saturate_the_sum_rule() {
        let m = build_model(ModelKind::HeisenbergChain, &[8], None).unwrap();
        let g = ed_dsf(&m.lattice, &m.terms, 4, &DsfSettings::default()).unwrap();
        for (w, b) in g.total_weight().iter().zip(&g.sum_rule_bound) {
            assert!((w - b).abs() < 1e-10, "{w} vs {b}");
        }
        // Z_0 is proportional to the conserved S_z
        assert!(g.column(0).unwrap().iter().all(|v| v.abs() < 1e-8));
    }
}
