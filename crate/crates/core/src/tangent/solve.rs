//! Generalized eigenproblem H v = E N v by canonical orthogonalization, and
//! the quantum-number labels measured on the reconstructed states.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::assemble::{reconstruct, SubspaceProblem};
use super::ExcitationBasis;
use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::models::{parity_operator, total_spin_squared, Lattice};
use crate::statevec::{inner_slices, CompiledPauliSum, StateVector};
use crate::symmetry::SectorLabel;

/// Eigenpairs of one sector.
#[derive(Clone, Debug)]
pub struct Solution {
    pub label: SectorLabel,
    /// Ascending.
    pub energies: Vec<f64>,
    /// Column l holds the N-normalized coefficients of level l.
    pub coefficients: CMat,
    pub norm_rank: usize,
    /// Eigenvalues of the scaled N over the live configurations, ascending.
    pub norm_eigenvalues: Vec<f64>,
    pub threshold: f64,
}

/// How N is normalized before the eigenvalue cutoff.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormScaling {
    /// D^{-1/2} N D^{-1/2} with D = diag N.
    #[default]
    UnitDiagonal,
    /// N as sampled; tau is relative to its largest eigenvalue.
    Raw,
}

/// Solves the sector problem by canonical orthogonalization of
/// D^{-1/2} N D^{-1/2} (D = diag N), keeping modes with lambda >= tau * lambda_max.
pub fn solve(problem: &SubspaceProblem, tau: f64) -> Result<Solution> {
    solve_with(problem, tau, NormScaling::UnitDiagonal)
}

pub fn solve_with(problem: &SubspaceProblem, tau: f64, scaling: NormScaling) -> Result<Solution> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidProbability(tau));
    }
    let d = problem.dim();
    let scale = 1.0 + (0..d).map(|i| problem.norm[(i, i)].re.abs()).fold(0.0, f64::max);
    for m in [&problem.norm, &problem.ham] {
        let dev = linalg::hermitian_deviation(m);
        if dev > 1e-8 * scale {
            return Err(Error::NonHermitian(dev));
        }
    }
    // unit-diagonal scaling; configurations with negligible norm are dropped
    let diag: Vec<f64> = (0..d).map(|i| problem.norm[(i, i)].re).collect();
    let dmax = diag.iter().copied().fold(0.0, f64::max);
    if !(dmax > 0.0) {
        return Err(Error::EmptySubspace(dmax));
    }
    let live: Vec<usize> = (0..d).filter(|&i| diag[i] > tau.max(f64::EPSILON) * dmax).collect();
    let s: Vec<f64> = match scaling {
        NormScaling::UnitDiagonal => live.iter().map(|&i| 1.0 / diag[i].sqrt()).collect(),
        NormScaling::Raw => vec![1.0; live.len()],
    };
    let scaled = CMat::from_fn(live.len(), live.len(), |i, j| problem.norm[(live[i], live[j])] * (s[i] * s[j]));
    let (lam, u) = linalg::eigh(&scaled)?;
    let lmax = lam.last().copied().unwrap_or(0.0);
    let kept: Vec<usize> = (0..live.len()).filter(|&i| lam[i] >= tau * lmax && lam[i] > 0.0).collect();
    let r = kept.len();
    let mut x = linalg::zeros(d, r);
    for (a, &i) in live.iter().enumerate() {
        for (b, &k) in kept.iter().enumerate() {
            x[(i, b)] = u[(a, k)] * (s[a] / lam[k].sqrt());
        }
    }
    let mut ht = x.adjoint() * &problem.ham * &x;
    linalg::hermitize(&mut ht);
    let (energies, y) = linalg::eigh(&ht)?;
    let coefficients = &x * &y;
    Ok(Solution {
        label: problem.label.clone(),
        energies,
        coefficients,
        norm_rank: r,
        norm_eigenvalues: lam,
        threshold: tau,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelFlag {
    MomentumUnlabeled,
    MomentumMismatch,
    ParityUnlabeled,
    ParityMismatch,
    SpinUnlabeled,
}

impl LabelFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelFlag::MomentumUnlabeled => "momentum_unlabeled",
            LabelFlag::MomentumMismatch => "momentum_mismatch",
            LabelFlag::ParityUnlabeled => "parity_unlabeled",
            LabelFlag::ParityMismatch => "parity_mismatch",
            LabelFlag::SpinUnlabeled => "spin_unlabeled",
        }
    }
}

#[derive(Clone, Debug, serde::Deserialize, Serialize)]
#[serde(default)]
pub struct LabelOptions {
    pub momentum: bool,
    pub parity: bool,
    pub spin: bool,
    /// Label only the lowest levels of each sector.
    pub max_levels: Option<usize>,
    pub momentum_threshold: f64,
    pub parity_tolerance: f64,
    pub spin_tolerance: f64,
}

impl Default for LabelOptions {
    fn default() -> Self {
        Self {
            momentum: true,
            parity: true,
            spin: false,
            max_levels: None,
            momentum_threshold: 0.99,
            parity_tolerance: 1e-3,
            spin_tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MeasuredLabels {
    pub momentum: Option<Vec<usize>>,
    pub parity: Option<i32>,
    pub total_spin: Option<f64>,
    pub flags: Vec<LabelFlag>,
}

/// Measures momentum, parity and total spin of `state`. Failed snaps are
/// flagged and leave the label empty.
pub fn measure_labels(state: &StateVector, lattice: &Lattice, options: &LabelOptions) -> Result<MeasuredLabels> {
    let n = state.num_qubits();
    let norm = state.norm_sqr();
    let mut out = MeasuredLabels::default();
    if norm <= 0.0 {
        out.flags.extend([LabelFlag::MomentumUnlabeled, LabelFlag::ParityUnlabeled, LabelFlag::SpinUnlabeled]);
        return Ok(out);
    }
    if options.momentum {
        let mut m = Vec::new();
        for t in &lattice.translations {
            let shifted = state.translate(&t.permutation)?;
            let e = inner_slices(state.amplitudes(), shifted.amplitudes()) / norm;
            if e.norm() <= options.momentum_threshold {
                break;
            }
            let l = t.order as f64;
            let k = (e.arg() * l / (2.0 * PI)).round().rem_euclid(l);
            m.push(k as usize);
        }
        if m.len() == lattice.translations.len() {
            out.momentum = Some(m);
        } else {
            out.flags.push(LabelFlag::MomentumUnlabeled);
        }
    }
    if options.parity {
        let op = CompiledPauliSum::new(n, &parity_operator(n))?;
        let p = op.matrix_element(state.amplitudes(), state.amplitudes()).re / norm;
        if (p - 1.0).abs() < options.parity_tolerance {
            out.parity = Some(1);
        } else if (p + 1.0).abs() < options.parity_tolerance {
            out.parity = Some(-1);
        } else {
            out.flags.push(LabelFlag::ParityUnlabeled);
        }
    }
    if options.spin {
        let op = CompiledPauliSum::new(n, &total_spin_squared(n))?;
        let s2 = op.matrix_element(state.amplitudes(), state.amplitudes()).re / norm;
        let s = ((-1.0 + (1.0 + 4.0 * s2.max(0.0)).sqrt()) / 2.0 * 2.0).round() / 2.0;
        if (s * (s + 1.0) - s2).abs() < options.spin_tolerance {
            out.total_spin = Some(s);
        } else {
            out.flags.push(LabelFlag::SpinUnlabeled);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct LabeledLevel {
    /// Sector the level was solved in.
    pub sector: SectorLabel,
    pub delta_sz: Option<i32>,
    /// Position within the sector, from 0.
    pub rank: usize,
    pub energy: f64,
    #[serde(skip)]
    pub coefficients: Vec<C64>,
    pub norm_rank: usize,
    pub momentum: Option<Vec<usize>>,
    pub parity: Option<i32>,
    pub total_spin: Option<f64>,
    pub flags: Vec<LabelFlag>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct LabeledSpectrum {
    /// Ascending in energy.
    pub levels: Vec<LabeledLevel>,
}

impl LabeledSpectrum {
    /// Levels carrying only the sector quantum numbers, without measurement.
    pub fn from_solutions(problems: &[SubspaceProblem], solutions: &[Solution], max_levels: Option<usize>) -> Self {
        let mut levels = Vec::new();
        for (p, s) in problems.iter().zip(solutions) {
            let count = max_levels.map_or(s.energies.len(), |m| m.min(s.energies.len()));
            for l in 0..count {
                levels.push(LabeledLevel {
                    sector: p.label.clone(),
                    delta_sz: p.delta_sz,
                    rank: l,
                    energy: s.energies[l],
                    coefficients: s.coefficients.col_as_slice(l).to_vec(),
                    norm_rank: s.norm_rank,
                    momentum: p.symmetry.translations.then(|| p.label.momentum.clone()),
                    parity: p.label.parity,
                    total_spin: None,
                    flags: Vec::new(),
                });
            }
        }
        levels.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        LabeledSpectrum { levels }
    }

    pub fn unlabeled_count(&self) -> usize {
        self.levels
            .iter()
            .filter(|l| l.flags.iter().any(|f| matches!(f, LabelFlag::MomentumUnlabeled | LabelFlag::ParityUnlabeled | LabelFlag::SpinUnlabeled)))
            .count()
    }
}

/// Reconstructs every level and attaches measured labels. Sector labels
/// fixed by the assembly are kept; a measured value that disagrees is flagged.
#[allow(clippy::too_many_arguments)]
pub fn label_levels(
    circuit: &Circuit,
    lattice: &Lattice,
    params: &[f64],
    basis: &ExcitationBasis,
    problems: &[SubspaceProblem],
    solutions: &[Solution],
    options: &LabelOptions,
) -> Result<LabeledSpectrum> {
    if problems.len() != solutions.len() {
        return Err(Error::DimensionMismatch { expected: problems.len(), found: solutions.len() });
    }
    let mut spectrum = LabeledSpectrum::from_solutions(problems, solutions, options.max_levels);
    let refs: Vec<&SubspaceProblem> = problems.iter().collect();
    let coeffs: Vec<CMat> = solutions
        .iter()
        .map(|s| {
            let count = options.max_levels.map_or(s.energies.len(), |m| m.min(s.energies.len()));
            CMat::from_fn(s.coefficients.nrows(), count, |i, j| s.coefficients[(i, j)])
        })
        .collect();
    let mut index = std::collections::HashMap::new();
    for (pos, level) in spectrum.levels.iter().enumerate() {
        let p = problems.iter().position(|q| q.label == level.sector && q.delta_sz == level.delta_sz).expect("own problem");
        index.insert((p, level.rank), pos);
    }
    reconstruct(circuit, lattice, params, basis, &refs, &coeffs, |p, l, state| {
        let measured = measure_labels(&state, lattice, options)?;
        let level = &mut spectrum.levels[index[&(p, l)]];
        let assigned = problems[p].symmetry.translations;
        match (&measured.momentum, assigned) {
            (Some(m), true) if *m != level.sector.momentum => level.flags.push(LabelFlag::MomentumMismatch),
            (Some(m), false) => level.momentum = Some(m.clone()),
            _ => {}
        }
        match (measured.parity, level.sector.parity) {
            (Some(a), Some(b)) if a != b => level.flags.push(LabelFlag::ParityMismatch),
            (Some(a), None) => level.parity = Some(a),
            _ => {}
        }
        level.total_spin = measured.total_spin;
        for f in measured.flags {
            let fixed = match f {
                LabelFlag::MomentumUnlabeled => assigned,
                LabelFlag::ParityUnlabeled => level.sector.parity.is_some(),
                _ => false,
            };
            if !fixed {
                level.flags.push(f);
            }
        }
        Ok(())
    })?;
    Ok(spectrum)
}

/// Lowest-level reference for one sector in [`depth_error_profile`].
#[derive(Clone, Debug, Serialize)]
pub struct DepthTarget {
    pub label: SectorLabel,
    /// Level within the sector to compare (0 = lowest).
    pub rank: usize,
    pub reference: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DepthErrorPoint {
    pub window: usize,
    pub mean_error: f64,
    pub errors: Vec<f64>,
}

/// Error of the targeted levels when the basis is restricted to the last k
/// slots, for k = 1..=num_slots. The problems must come from a basis
/// assembled with the full slot window.
pub fn depth_error_profile(
    basis: &ExcitationBasis,
    problems: &[SubspaceProblem],
    num_slots: usize,
    targets: &[DepthTarget],
    tau: f64,
) -> Result<Vec<DepthErrorPoint>> {
    let mut out = Vec::new();
    for k in 1..=num_slots {
        let first = num_slots - k;
        let mut errors = Vec::new();
        for t in targets {
            let p = problems
                .iter()
                .find(|p| p.label == t.label)
                .ok_or_else(|| Error::InvalidMomentum(format!("no problem for sector {:?}", t.label)))?;
            let keep: Vec<usize> = (0..p.dim()).filter(|&i| basis.configs[p.configs[i]].slot >= first).collect();
            let sol = solve(&p.restrict(&keep), tau)?;
            let e = sol.energies.get(t.rank).copied().ok_or(Error::EmptySubspace(0.0))?;
            errors.push((e - t.reference).abs());
        }
        let mean_error = errors.iter().sum::<f64>() / errors.len().max(1) as f64;
        out.push(DepthErrorPoint { window: k, mean_error, errors });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::SymmetrySpec;

    fn problem(norm: CMat, ham: CMat) -> SubspaceProblem {
        SubspaceProblem {
            label: SectorLabel { momentum: vec![], parity: None, popcount: None },
            delta_sz: None,
            configs: (0..norm.nrows()).collect(),
            norm,
            ham,
            translation_count: 1,
            symmetry: SymmetrySpec::none(),
            hermitian_deviation: 0.0,
        }
    }

    fn hermitian(n: usize, seed: f64) -> CMat {
        let mut m = CMat::from_fn(n, n, |i, j| C64::new(((i * 7 + j * 3) as f64 + seed).sin(), ((i * 5 + j) as f64 * seed).cos()));
        linalg::hermitize(&mut m);
        m
    }

    #[test]
    fn identity_norm_is_ordinary_eigenproblem() {
        let h = hermitian(5, 0.3);
        let sol = solve(&problem(linalg::identity(5), h.clone()), 1e-10).unwrap();
        let direct = linalg::eigvalsh(&h).unwrap();
        assert_eq!(sol.norm_rank, 5);
        for (a, b) in sol.energies.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_column_drops_rank_only() {
        // N = A^dagger A, H = A^dagger B A with a repeated column in A
        let b = hermitian(6, 1.1);
        let a = CMat::from_fn(6, 4, |i, j| C64::new(((i + 2 * j) as f64).cos(), ((i * j) as f64 * 0.3).sin()));
        let a_dup = CMat::from_fn(6, 5, |i, j| a[(i, if j == 4 { 1 } else { j })]);
        let make = |a: &CMat| {
            let mut n: CMat = a.adjoint() * a;
            let mut h: CMat = a.adjoint() * &b * a;
            linalg::hermitize(&mut n);
            linalg::hermitize(&mut h);
            problem(n, h)
        };
        let s1 = solve(&make(&a), 1e-10).unwrap();
        let s2 = solve(&make(&a_dup), 1e-10).unwrap();
        assert_eq!(s2.norm_rank, s1.norm_rank);
        assert_eq!(s1.norm_rank, 4);
        for (x, y) in s1.energies.iter().zip(&s2.energies) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn vectors_are_norm_normalized() {
        let a = CMat::from_fn(5, 5, |i, j| C64::new(((i * 3 + j) as f64).sin() + if i == j { 2.0 } else { 0.0 }, 0.1 * (i as f64 - j as f64)));
        let mut n: CMat = a.adjoint() * &a;
        linalg::hermitize(&mut n);
        let sol = solve(&problem(n.clone(), hermitian(5, 2.0)), 1e-10).unwrap();
        let g = sol.coefficients.adjoint() * &n * &sol.coefficients;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - C64::new(want, 0.0)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_norm_is_an_error() {
        let err = solve(&problem(linalg::zeros(2, 2), linalg::zeros(2, 2)), 1e-10).unwrap_err();
        assert!(matches!(err, Error::EmptySubspace(_)));
    }

    #[test]
    fn raising_threshold_never_raises_rank() {
        let a = CMat::from_fn(6, 6, |i, j| C64::new((0.5f64).powi((i + j) as i32), 0.0));
        let mut n: CMat = a.adjoint() * &a + CMat::from_fn(6, 6, |i, j| C64::new(if i == j { 1e-6 } else { 0.0 }, 0.0));
        linalg::hermitize(&mut n);
        let p = problem(n, hermitian(6, 0.7));
        let mut last = usize::MAX;
        for tau in [0.0, 1e-12, 1e-8, 1e-4, 1e-2, 0.5] {
            let r = solve(&p, tau).unwrap().norm_rank;
            assert!(r <= last);
            last = r;
        }
    }
}
