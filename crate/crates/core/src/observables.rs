//! Dynamical spin structure factor S(K, w) from subspace excitations.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::models::Lattice;
use crate::statevec::{inner_slices, CompiledPauliSum, Pauli, PauliString, StateVector};
use crate::tangent::{measure_labels, reconstruct, ExcitationBasis, LabelFlag, LabelOptions, LabeledSpectrum, SubspaceProblem};

/// Z_K = (1/sqrt N) sum_j e^{-ijK} Z_j with K = 2 pi m / N.
pub fn spin_fourier_operator(n: usize, m: usize) -> Result<Vec<PauliString>> {
    if m >= n {
        return Err(Error::InvalidMomentum(format!("m = {m} outside 0..{n}")));
    }
    let k = 2.0 * PI * m as f64 / n as f64;
    let norm = 1.0 / (n as f64).sqrt();
    Ok((0..n).map(|j| PauliString::single(C64::from_polar(norm, -(j as f64) * k), j, Pauli::Z)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DsfSettings {
    pub sigma: f64,
    pub omega_max: f64,
    pub omega_step: f64,
    /// Momentum indices m (K = 2 pi m / N); all when absent.
    pub momenta: Option<Vec<usize>>,
}

impl Default for DsfSettings {
    fn default() -> Self {
        Self { sigma: 0.03, omega_max: 4.0, omega_step: 0.005, momenta: None }
    }
}

impl DsfSettings {
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        if !(self.omega_step > 0.0 && self.omega_max >= 0.0 && self.sigma > 0.0) {
            return Err(Error::Format(format!("invalid DSF grid {self:?}")));
        }
        let count = (self.omega_max / self.omega_step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| i as f64 * self.omega_step).collect())
    }

    fn momenta_for(&self, n: usize) -> Result<Vec<usize>> {
        let ms = self.momenta.clone().unwrap_or_else(|| (0..n).collect());
        if let Some(&m) = ms.iter().find(|&&m| m >= n) {
            return Err(Error::InvalidMomentum(format!("m = {m} outside 0..{n}")));
        }
        Ok(ms)
    }
}

/// One delta peak |M|^2 delta(w - omega).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DsfPeak {
    pub momentum: usize,
    pub omega: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DsfGrid {
    pub num_sites: usize,
    pub momenta: Vec<usize>,
    pub frequencies: Vec<f64>,
    /// values[k][w] for momenta[k] and frequencies[w].
    pub values: Vec<Vec<f64>>,
    pub sigma: f64,
    pub ground_energy: f64,
    pub peaks: Vec<DsfPeak>,
    /// <Z_K^dagger Z_K> - |<Z_K>|^2 per momentum.
    pub sum_rule_bound: Vec<f64>,
    pub unlabeled_skipped: usize,
}

impl DsfGrid {
    /// sum of |M|^2 per momentum.
    pub fn total_weight(&self) -> Vec<f64> {
        self.momenta
            .iter()
            .map(|&m| self.peaks.iter().filter(|p| p.momentum == m).map(|p| p.weight).sum())
            .collect()
    }

    pub fn column(&self, m: usize) -> Option<&[f64]> {
        self.momenta.iter().position(|&x| x == m).map(|k| self.values[k].as_slice())
    }

    /// Trapezoid integral of each column over the grid.
    pub fn integrated(&self) -> Vec<f64> {
        let h = self.frequencies.get(1).map_or(0.0, |w| w - self.frequencies[0]);
        self.values
            .iter()
            .map(|col| {
                let s: f64 = col.iter().sum();
                h * (s - 0.5 * (col.first().unwrap_or(&0.0) + col.last().unwrap_or(&0.0)))
            })
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["momentum_m", "k", "omega", "value"]).map_err(csv_err)?;
        for (k, &m) in self.momenta.iter().enumerate() {
            let kk = 2.0 * PI * m as f64 / self.num_sites as f64;
            for (w, v) in self.frequencies.iter().zip(&self.values[k]) {
                out.write_record([m.to_string(), format!("{kk:.12}"), format!("{w:.6}"), format!("{v:.12e}")]).map_err(csv_err)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Unit-area Gaussian broadening of the peaks onto the settings grid.
pub fn broaden(
    num_sites: usize,
    peaks: Vec<DsfPeak>,
    sum_rule_bound: Vec<f64>,
    ground_energy: f64,
    settings: &DsfSettings,
) -> Result<DsfGrid> {
    let frequencies = settings.frequencies()?;
    let momenta = settings.momenta_for(num_sites)?;
    let s = settings.sigma;
    let a = 1.0 / (s * (2.0 * PI).sqrt());
    let mut values = vec![vec![0.0; frequencies.len()]; momenta.len()];
    for p in &peaks {
        let Some(k) = momenta.iter().position(|&m| m == p.momentum) else { continue };
        for (v, w) in values[k].iter_mut().zip(&frequencies) {
            let x = (w - p.omega) / s;
            if x.abs() < 40.0 {
                *v += p.weight * a * (-0.5 * x * x).exp();
            }
        }
    }
    Ok(DsfGrid {
        num_sites,
        momenta,
        frequencies,
        values,
        sigma: s,
        ground_energy,
        peaks,
        sum_rule_bound,
        unlabeled_skipped: 0,
    })
}

/// (Z_K - <Z_K>) |psi> and the sum-rule bound || . ||^2.
pub fn connected_fourier_state(psi: &StateVector, m: usize) -> Result<(StateVector, f64)> {
    let n = psi.num_qubits();
    let op = CompiledPauliSum::new(n, &spin_fourier_operator(n, m)?)?;
    let mut chi = psi.apply_compiled(&op);
    let mean = inner_slices(psi.amplitudes(), chi.amplitudes());
    chi.axpy(-mean, psi)?;
    let bound = chi.norm_sqr();
    Ok((chi, bound))
}

/// S(K, w) = sum_a |<Phi_a|Z_K|Psi>|^2 G(w - (E_a - E_0)) over the labeled
/// levels of a chain. Level a contributes to K when its momentum equals the
/// ground-state momentum plus K. The connected operator Z_K - <Z_K> is used,
/// so a level coinciding with |Psi> carries no weight. Levels without a
/// momentum label are skipped and counted.
#[allow(clippy::too_many_arguments)]
pub fn dsf(
    circuit: &Circuit,
    lattice: &Lattice,
    params: &[f64],
    basis: &ExcitationBasis,
    problems: &[SubspaceProblem],
    spectrum: &LabeledSpectrum,
    ground_energy: f64,
    settings: &DsfSettings,
) -> Result<DsfGrid> {
    if lattice.translations.len() != 1 {
        return Err(Error::Unsupported("DSF is implemented for chains".into()));
    }
    let n = lattice.num_sites();
    let momenta = settings.momenta_for(n)?;
    let mut psi = circuit.run(params, None, None)?;
    psi.normalize()?;
    let opts = LabelOptions { parity: false, ..Default::default() };
    let k_gs = measure_labels(&psi, lattice, &opts)?
        .momentum
        .ok_or_else(|| Error::InvalidMomentum("ground state has no momentum label".into()))?[0];
    let mut chis = HashMap::new();
    let mut bounds = Vec::new();
    for &m in &momenta {
        let (chi, b) = connected_fourier_state(&psi, m)?;
        chis.insert(m, chi);
        bounds.push(b);
    }

    // levels grouped by problem, keeping their spectrum index
    let mut per_problem: Vec<Vec<usize>> = vec![Vec::new(); problems.len()];
    let mut unlabeled = 0;
    for (i, level) in spectrum.levels.iter().enumerate() {
        if level.momentum.is_none() || level.flags.contains(&LabelFlag::MomentumUnlabeled) {
            unlabeled += 1;
            continue;
        }
        let p = problems
            .iter()
            .position(|q| q.label == level.sector && q.delta_sz == level.delta_sz)
            .ok_or_else(|| Error::DimensionMismatch { expected: problems.len(), found: i })?;
        per_problem[p].push(i);
    }
    if unlabeled > 0 {
        log::warn!("dsf: {unlabeled} levels without a momentum label skipped");
    }
    let used: Vec<usize> = (0..problems.len()).filter(|&p| !per_problem[p].is_empty()).collect();
    let refs: Vec<&SubspaceProblem> = used.iter().map(|&p| &problems[p]).collect();
    let coeffs: Vec<CMat> = used
        .iter()
        .map(|&p| {
            let idx = &per_problem[p];
            CMat::from_fn(problems[p].dim(), idx.len(), |r, c| spectrum.levels[idx[c]].coefficients[r])
        })
        .collect();
    let mut peaks = Vec::new();
    reconstruct(circuit, lattice, params, basis, &refs, &coeffs, |u, l, phi| {
        let level = &spectrum.levels[per_problem[used[u]][l]];
        let km = level.momentum.as_ref().expect("labeled")[0];
        let m = (km + n - k_gs) % n;
        if let Some(chi) = chis.get(&m) {
            let amp = inner_slices(phi.amplitudes(), chi.amplitudes());
            peaks.push(DsfPeak { momentum: m, omega: level.energy - ground_energy, weight: amp.norm_sqr() });
        }
        Ok(())
    })?;
    let mut grid = broaden(n, peaks, bounds, ground_energy, settings)?;
    grid.unlabeled_skipped = unlabeled;
    Ok(grid)
}
