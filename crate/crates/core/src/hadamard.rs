//! Hadamard-test estimation of N and H with binomial shot noise.
//!
//! The control-qubit probabilities are evaluated in closed form,
//! P_Re = (1 + Re<phi_1|phi_2>)/2 and P_Im = (1 + Im<phi_1|phi_2>)/2, and the
//! counts are drawn from Binomial(shots, P). Real-space elements between
//! orbit representatives and all translates are sampled once and Fourier
//! summed into every momentum sector:
//! <phi_K(c')|phi_K(c)> = N_T sum_s e^{-iK.s} <phi(c')|phi(T^s c)>.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::models::Lattice;
use crate::statevec::{inner_slices, CompiledPauliSum, PauliString, StateVector};
use crate::symmetry::{SectorLabel, SymmetrySpec};
use crate::tangent::{config_state, solve_with, BasisMode, NormScaling, ExcitationBasis, LabeledSpectrum, Solution, SubspaceProblem};

/// How the shot budget is spent on the terms of H.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotBudget {
    /// Every Pauli term gets the full budget.
    #[default]
    PerTerm,
    /// The budget is split evenly over the terms.
    Divided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShotPlan {
    /// Shots per element and part; `None` evaluates the probabilities exactly.
    pub shots_per_element: Option<u64>,
    pub seed: u64,
    pub budget: ShotBudget,
}

impl Default for ShotPlan {
    fn default() -> Self {
        Self { shots_per_element: Some(1_000_000), seed: 0, budget: ShotBudget::PerTerm }
    }
}

impl ShotPlan {
    pub fn exact() -> Self {
        Self { shots_per_element: None, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots_per_element == Some(0) {
            return Err(Error::Format("shots_per_element must be positive".into()));
        }
        Ok(())
    }
}

/// Which matrix element a draw belongs to. Packed into the ChaCha stream id
/// so every (element, term, part) has its own reproducible stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ElementKey {
    pub hamiltonian: bool,
    pub row: usize,
    pub col: usize,
    pub term: usize,
}

impl ElementKey {
    fn stream(&self, imaginary: bool) -> u64 {
        const B: u64 = 1 << 20;
        let h = self.hamiltonian as u64;
        (((h * B + self.term as u64 % B) * B + self.row as u64 % B) * B + self.col as u64 % B) * 2 + imaginary as u64
    }
}

/// Exact control-qubit probabilities (P_Re, P_Im) of the Hadamard test on
/// two normalized states.
pub fn overlap_probabilities(phi1: &StateVector, phi2: &StateVector) -> Result<(f64, f64)> {
    if phi1.num_qubits() != phi2.num_qubits() {
        return Err(Error::DimensionMismatch { expected: phi1.num_qubits(), found: phi2.num_qubits() });
    }
    probabilities(inner_slices(phi1.amplitudes(), phi2.amplitudes()))
}

fn probabilities(z: C64) -> Result<(f64, f64)> {
    if z.norm() > 1.0 + 1e-10 {
        return Err(Error::NotNormalized(z.norm()));
    }
    let clamp = |p: f64| p.clamp(0.0, 1.0);
    Ok((clamp((1.0 + z.re) / 2.0), clamp((1.0 + z.im) / 2.0)))
}

fn draw(p: f64, shots: u64, seed: u64, stream: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let b = Binomial::new(shots, p).map_err(|_| Error::InvalidProbability(p))?;
    Ok(b.sample(&mut rng) as f64 / shots as f64)
}

/// (2 f_Re - 1) + i (2 f_Im - 1) from independent binomial draws.
pub fn sample_element(probabilities: (f64, f64), shots: u64, seed: u64, key: ElementKey) -> Result<C64> {
    if shots == 0 {
        return Err(Error::Format("shots must be positive".into()));
    }
    let re = draw(probabilities.0, shots, seed, key.stream(false))?;
    let im = draw(probabilities.1, shots, seed, key.stream(true))?;
    Ok(C64::new(2.0 * re - 1.0, 2.0 * im - 1.0))
}

fn estimate(z: C64, plan: &ShotPlan, shots: Option<u64>, key: ElementKey) -> Result<C64> {
    let p = probabilities(z)?;
    match shots {
        None => Ok(C64::new(2.0 * p.0 - 1.0, 2.0 * p.1 - 1.0)),
        Some(s) => sample_element(p, s, plan.seed, key),
    }
}

/// Estimate of <phi1|phi2> for normalized states.
pub fn measure_overlap(phi1: &StateVector, phi2: &StateVector, plan: &ShotPlan, key: ElementKey) -> Result<C64> {
    plan.validate()?;
    if phi1.num_qubits() != phi2.num_qubits() {
        return Err(Error::DimensionMismatch { expected: phi1.num_qubits(), found: phi2.num_qubits() });
    }
    estimate(inner_slices(phi1.amplitudes(), phi2.amplitudes()), plan, plan.shots_per_element, key)
}

/// Estimate of <phi1|H|phi2> as sum_t coeff_t <phi1|P_t|phi2>, each term
/// measured as an overlap with P_t appended to the second state.
pub fn measure_hamiltonian_element(
    phi1: &StateVector,
    phi2: &StateVector,
    terms: &[PauliString],
    plan: &ShotPlan,
    key: ElementKey,
) -> Result<C64> {
    plan.validate()?;
    let n = phi1.num_qubits();
    if phi2.num_qubits() != n {
        return Err(Error::DimensionMismatch { expected: n, found: phi2.num_qubits() });
    }
    let shots = match (plan.shots_per_element, plan.budget) {
        (Some(s), ShotBudget::Divided) => Some((s / terms.len().max(1) as u64).max(1)),
        (s, _) => s,
    };
    let mut total = C64::new(0.0, 0.0);
    let mut buf = vec![C64::new(0.0, 0.0); phi2.dim()];
    for (t, term) in terms.iter().enumerate() {
        let unit = CompiledPauliSum::new(n, &[term.with_coeff(1.0)])?;
        unit.apply_into(phi2.amplitudes(), &mut buf);
        let z = inner_slices(phi1.amplitudes(), &buf);
        total += term.coeff * estimate(z, plan, shots, ElementKey { hamiltonian: true, term: t, ..key })?;
    }
    Ok(total)
}

/// Sampled sector problem with its exact counterpart.
#[derive(Clone, Debug)]
pub struct NoisyProblem {
    pub sampled: SubspaceProblem,
    pub exact: SubspaceProblem,
    pub tau: f64,
    pub plan: ShotPlan,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmptySector {
    pub label: SectorLabel,
    pub diagnostic: String,
}

#[derive(Clone, Debug)]
pub struct NoisyRun {
    pub problems: Vec<NoisyProblem>,
    /// Solutions of the sampled problems, in problem order; `None` when empty.
    pub solutions: Vec<Option<Solution>>,
    pub spectrum: LabeledSpectrum,
    pub empty: Vec<EmptySector>,
}

/// Real-space overlaps <phi(c')|phi(T^s c)> and <phi(c')|H|phi(T^s c)> for
/// all representative pairs and shifts, as [s][c'][c].
type Table = Vec<Vec<Vec<C64>>>;

fn sample_tables(
    circuit: &Circuit,
    lattice: &Lattice,
    params: &[f64],
    basis: &ExcitationBasis,
    terms: &[PauliString],
    plan: &ShotPlan,
) -> Result<(Table, Table)> {
    let chi = basis.len();
    let shifts = lattice.translation_shifts();
    let unit = |c: &crate::tangent::ExcitationConfig| {
        let mut u = c.clone();
        u.coeff = C64::new(1.0, 0.0);
        u
    };
    let reps: Vec<StateVector> = basis.configs.iter().map(|c| config_state(circuit, params, &unit(c))).collect::<Result<_>>()?;
    let mut ntab = vec![vec![vec![C64::new(0.0, 0.0); chi]; chi]; shifts.len()];
    let mut htab = ntab.clone();
    for (s, shift) in shifts.iter().enumerate() {
        let perm = lattice.translation_by(shift);
        for (c, cfg) in basis.configs.iter().enumerate() {
            let moved = config_state(circuit, params, &unit(&cfg.translated(&perm)))?;
            for (cp, rep) in reps.iter().enumerate() {
                let scale = basis.configs[cp].coeff.conj() * cfg.coeff;
                // row index runs over (shift, c') so each real-space element has its own stream
                let key = ElementKey { hamiltonian: false, row: s * chi + cp, col: c, term: 0 };
                ntab[s][cp][c] = scale * measure_overlap(rep, &moved, plan, key)?;
                htab[s][cp][c] = scale * measure_hamiltonian_element(rep, &moved, terms, plan, key)?;
            }
        }
    }
    Ok((ntab, htab))
}

fn fourier(table: &Table, lattice: &Lattice, shifts: &[Vec<usize>], momentum: &[usize], members: &[usize]) -> CMat {
    let nt = shifts.len() as f64;
    let k = members.len();
    let mut m = linalg::zeros(k, k);
    for (s, shift) in shifts.iter().enumerate() {
        let phase: f64 = shift
            .iter()
            .zip(momentum)
            .zip(&lattice.translations)
            .map(|((&a, &q), t)| 2.0 * PI * (a * q) as f64 / t.order as f64)
            .sum();
        let w = C64::from_polar(nt, -phase);
        for (i, &a) in members.iter().enumerate() {
            for (j, &b) in members.iter().enumerate() {
                m[(i, j)] += w * table[s][a][b];
            }
        }
    }
    m
}

/// Samples the real-space Hadamard-test elements once, Fourier sums them into
/// each requested momentum sector, Hermitizes and solves with threshold `tau`
/// applied to the raw norm spectrum.
/// The basis must be a momentum-mode basis (orbit representatives) of a
/// translation-covariant circuit with Pauli operators only.
#[allow(clippy::too_many_arguments)]
pub fn noisy_spectrum(
    circuit: &Circuit,
    lattice: &Lattice,
    params: &[f64],
    basis: &ExcitationBasis,
    terms: &[PauliString],
    plan: &ShotPlan,
    tau: f64,
    momenta: Option<&[Vec<usize>]>,
) -> Result<NoisyRun> {
    plan.validate()?;
    if basis.options.mode != BasisMode::Momentum || !circuit.is_translation_covariant() {
        return Err(Error::InvalidBasis("the Fourier reassembly needs a momentum-mode basis of a covariant circuit".into()));
    }
    if basis.configs.iter().any(|c| c.ops.iter().any(|o| o.pauli().is_none() && *o != crate::statevec::SiteOp::I)) {
        return Err(Error::InvalidBasis("Hadamard tests need unitary (Pauli) insertions".into()));
    }
    let shifts = lattice.translation_shifts();
    let exact_plan = ShotPlan::exact();
    let (n_exact, h_exact) = sample_tables(circuit, lattice, params, basis, terms, &exact_plan)?;
    let (n_tab, h_tab) = if plan.shots_per_element.is_none() {
        (n_exact.clone(), h_exact.clone())
    } else {
        sample_tables(circuit, lattice, params, basis, terms, plan)?
    };

    let even_terms = terms.iter().all(|t| t.parity_weight() % 2 == 0);
    let ref_parity = circuit.initial_state().parity().filter(|_| even_terms);
    let all: Vec<Vec<usize>> = match momenta {
        Some(m) => m.to_vec(),
        None => lattice.translation_shifts(),
    };
    let parities: Vec<Option<i32>> = if ref_parity.is_some() { vec![Some(1), Some(-1)] } else { vec![None] };
    let spec = SymmetrySpec { translations: true, parity: ref_parity.is_some(), popcount: None };

    let mut problems = Vec::new();
    for m in &all {
        if m.len() != lattice.translations.len() || m.iter().zip(&lattice.translations).any(|(&k, t)| k >= t.order) {
            return Err(Error::InvalidMomentum(format!("{m:?}")));
        }
        for &par in &parities {
            let members: Vec<usize> = (0..basis.len())
                .filter(|&i| {
                    let c = &basis.configs[i];
                    par.is_none() || ref_parity.map(|p| if c.parity_weight() % 2 == 0 { p } else { -p }) == par
                })
                .collect();
            if members.is_empty() {
                continue;
            }
            let label = SectorLabel { momentum: m.clone(), parity: par, popcount: None };
            let make = |nt: &Table, ht: &Table| -> SubspaceProblem {
                let mut norm = fourier(nt, lattice, &shifts, m, &members);
                let mut ham = fourier(ht, lattice, &shifts, m, &members);
                let dev = linalg::hermitize(&mut norm).max(linalg::hermitize(&mut ham));
                SubspaceProblem {
                    label: label.clone(),
                    delta_sz: None,
                    configs: members.clone(),
                    norm,
                    ham,
                    translation_count: shifts.len(),
                    symmetry: spec.clone(),
                    hermitian_deviation: dev,
                }
            };
            problems.push(NoisyProblem { sampled: make(&n_tab, &h_tab), exact: make(&n_exact, &h_exact), tau, plan: plan.clone() });
        }
    }

    let mut solutions = Vec::new();
    let mut empty = Vec::new();
    for p in &problems {
        match solve_with(&p.sampled, tau, NormScaling::Raw) {
            Ok(s) => solutions.push(Some(s)),
            Err(Error::EmptySubspace(l)) => {
                empty.push(EmptySector {
                    label: p.sampled.label.clone(),
                    diagnostic: format!("no norm eigenvalue above tau * lambda_max (largest diagonal {l:e})"),
                });
                solutions.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let (ps, ss): (Vec<SubspaceProblem>, Vec<Solution>) = problems
        .iter()
        .zip(&solutions)
        .filter_map(|(p, s)| s.as_ref().map(|s| (p.sampled.clone(), s.clone())))
        .unzip();
    let spectrum = LabeledSpectrum::from_solutions(&ps, &ss, None);
    Ok(NoisyRun { problems, solutions, spectrum, empty })
}
