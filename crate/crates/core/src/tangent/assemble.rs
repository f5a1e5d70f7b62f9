//! Assembly of N and H per symmetry sector.
//!
//! Each configuration state is built once and projected onto every sector
//! it can reach. Since sum_j e^{-iK.j} T^j = N_T P_K on the translation
//! part and P_K commutes with H, the momentum-space elements follow from
//! sector coordinates v = <r~|phi> and w = <r~|H phi>:
//! N_K = N_T^2 V^dagger V and H_K = N_T^2 V^dagger W. Real-space problems use
//! the same route with a group holding only S_z or parity, so N_T = 1.

use std::collections::HashMap;

use faer::{ColRef, MatRef};
use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{Alphabet, BasisMode, ExcitationBasis};
use crate::circuits::{apply_inserted, Circuit};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::models::Lattice;
use crate::statevec::{CompiledPauliSum, PauliString, StateVector};
use crate::symmetry::{check_commutes, Sector, SectorLabel, SymmetryGroup, SymmetrySpec};

/// Norm matrix and effective Hamiltonian of one symmetry sector.
#[derive(Clone, Debug)]
pub struct SubspaceProblem {
    pub label: SectorLabel,
    /// S_z change of the configurations (ladder alphabet).
    pub delta_sz: Option<i32>,
    /// Indices into the basis configurations, in matrix order.
    pub configs: Vec<usize>,
    pub norm: CMat,
    pub ham: CMat,
    /// Number of translations in the Bloch sum (1 in real space).
    pub translation_count: usize,
    pub symmetry: SymmetrySpec,
    /// Largest |M - M^dagger| removed when Hermitizing.
    pub hermitian_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProblemSummary {
    pub label: SectorLabel,
    pub dim: usize,
    pub hermitian_deviation: f64,
}

impl SubspaceProblem {
    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    /// The sub-problem over the listed positions (indices into `configs`).
    pub fn restrict(&self, keep: &[usize]) -> SubspaceProblem {
        let k = keep.len();
        SubspaceProblem {
            label: self.label.clone(),
            delta_sz: self.delta_sz,
            configs: keep.iter().map(|&i| self.configs[i]).collect(),
            norm: CMat::from_fn(k, k, |i, j| self.norm[(keep[i], keep[j])]),
            ham: CMat::from_fn(k, k, |i, j| self.ham[(keep[i], keep[j])]),
            translation_count: self.translation_count,
            symmetry: self.symmetry.clone(),
            hermitian_deviation: self.hermitian_deviation,
        }
    }

    pub fn summary(&self) -> ProblemSummary {
        ProblemSummary { label: self.label.clone(), dim: self.dim(), hermitian_deviation: self.hermitian_deviation }
    }
}

struct Block {
    spec: SymmetrySpec,
    delta_sz: Option<i32>,
    group: SymmetryGroup,
    sectors: Vec<Sector>,
}

/// S_z of the reference, as the common popcount of every basis state with
/// non-negligible weight.
fn reference_popcount(state: &StateVector) -> Result<usize> {
    let mut weight = vec![0.0; state.num_qubits() + 1];
    for (x, a) in state.amplitudes().iter().enumerate() {
        weight[x.count_ones() as usize] += a.norm_sqr();
    }
    let (k, w) = weight.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
    if (1.0 - w / state.norm_sqr()) > 1e-10 {
        return Err(Error::InvalidBasis("ladder alphabet needs a reference state with definite S_z".into()));
    }
    Ok(k)
}

fn all_momenta(lattice: &Lattice) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for t in &lattice.translations {
        out = out
            .into_iter()
            .flat_map(|v: Vec<usize>| {
                (0..t.order).map(move |m| {
                    let mut w = v.clone();
                    w.push(m);
                    w
                })
            })
            .collect();
    }
    out
}

/// Sector of every configuration and the groups that carry them.
fn layout(
    circuit: &Circuit,
    lattice: &Lattice,
    params: &[f64],
    basis: &ExcitationBasis,
    terms: &[PauliString],
) -> Result<(Vec<Block>, Vec<Option<(usize, Vec<usize>)>>)> {
    let opts = &basis.options;
    let momentum = opts.mode == BasisMode::Momentum;
    let even_terms = terms.iter().all(|t| t.parity_weight() % 2 == 0);
    let ref_parity = circuit.initial_state().parity().filter(|_| even_terms && opts.alphabet == Alphabet::Pauli);
    let base = match opts.alphabet {
        Alphabet::Ladder => Some(reference_popcount(&circuit.run(params, None, None)?)?),
        Alphabet::Pauli => None,
    };
    let momenta = if momentum { opts.momenta.clone().unwrap_or_else(|| all_momenta(lattice)) } else { vec![Vec::new()] };
    let n = lattice.num_sites();
    let mut blocks: Vec<Block> = Vec::new();
    let mut block_of: HashMap<Option<i32>, usize> = HashMap::new();
    let mut membership = Vec::with_capacity(basis.len());
    for c in &basis.configs {
        if c.has_ladder() && base.is_none() {
            return Err(Error::InvalidBasis("ladder operators need the ladder alphabet".into()));
        }
        let delta = base.map(|_| c.delta_sz());
        let popcount = match (base, delta) {
            (Some(b), Some(d)) => {
                let p = b as i64 - d as i64;
                if p < 0 || p > n as i64 {
                    // annihilates the reference
                    membership.push(None);
                    continue;
                }
                Some(p as usize)
            }
            _ => None,
        };
        let b = match block_of.get(&delta) {
            Some(&b) => b,
            None => {
                let spec = SymmetrySpec { translations: momentum, parity: ref_parity.is_some(), popcount };
                check_commutes(lattice, terms, &spec)?;
                let group = SymmetryGroup::new(lattice, &spec)?;
                let parities: Vec<Option<i32>> = if ref_parity.is_some() { vec![Some(1), Some(-1)] } else { vec![None] };
                let mut sectors = Vec::new();
                for m in &momenta {
                    for &p in &parities {
                        sectors.push(group.sector(&SectorLabel { momentum: m.clone(), parity: p, popcount })?);
                    }
                }
                blocks.push(Block { spec, delta_sz: delta, group, sectors });
                block_of.insert(delta, blocks.len() - 1);
                blocks.len() - 1
            }
        };
        let parity = ref_parity.map(|p| if c.parity_weight() % 2 == 0 { p } else { -p });
        let members: Vec<usize> =
            (0..blocks[b].sectors.len()).filter(|&s| parity.is_none() || blocks[b].sectors[s].label.parity == parity).collect();
        membership.push(Some((b, members)));
    }
    Ok((blocks, membership))
}

/// Calls `visit(config index, state)` for every configuration state, sharing
/// the circuit prefix between configurations at the same slot.
fn for_each_config_state(
    circuit: &Circuit,
    params: &[f64],
    basis: &ExcitationBasis,
    wanted: &[bool],
    mut visit: impl FnMut(usize, &StateVector) -> Result<()>,
) -> Result<()> {
    circuit.check_params(params)?;
    let slots = circuit.slots();
    for c in &basis.configs {
        if c.slot >= slots.len() {
            return Err(Error::InvalidInsertion(format!("slot {} of {}", c.slot, slots.len())));
        }
    }
    let mut order: Vec<usize> = (0..basis.len()).filter(|&i| wanted[i]).collect();
    order.sort_by_key(|&i| slots[basis.configs[i].slot]);
    let mut prefix = circuit.initial_state().prepare(circuit.num_qubits())?;
    let mut applied = 0;
    for i in order {
        let pos = slots[basis.configs[i].slot];
        circuit.apply_layers(params, prefix.amplitudes_mut(), applied, pos)?;
        applied = pos;
        let mut phi = prefix.clone();
        apply_inserted(&basis.configs[i].insertion().op, &mut phi)?;
        circuit.apply_layers(params, phi.amplitudes_mut(), pos, circuit.depth())?;
        visit(i, &phi)?;
    }
    Ok(())
}

struct Accumulator {
    dim: usize,
    configs: Vec<usize>,
    /// column-major sector coordinates of the configuration states
    cols: Vec<C64>,
    /// hcols[i][j] = <v_j|w_i> for j <= i
    hcols: Vec<Vec<C64>>,
}

/// Builds N and H for every sector reached by the basis, ordered by block
/// (S_z change) then momentum then parity. In momentum mode the sectors are
/// those of `basis.options.momenta`.
pub fn assemble(
    circuit: &Circuit,
    lattice: &Lattice,
    params: &[f64],
    basis: &ExcitationBasis,
    terms: &[PauliString],
) -> Result<Vec<SubspaceProblem>> {
    if basis.is_empty() {
        return Err(Error::InvalidBasis("no configurations".into()));
    }
    let n = circuit.num_qubits();
    let op = CompiledPauliSum::new(n, terms)?;
    let (blocks, membership) = layout(circuit, lattice, params, basis, terms)?;
    let mut accs: Vec<Vec<Accumulator>> = blocks
        .iter()
        .map(|b| {
            b.sectors
                .iter()
                .map(|s| Accumulator { dim: s.dim(), configs: Vec::new(), cols: Vec::new(), hcols: Vec::new() })
                .collect()
        })
        .collect();
    let wanted: Vec<bool> = membership.iter().map(|m| m.is_some()).collect();
    let mut hphi = vec![C64::new(0.0, 0.0); 1 << n];
    for_each_config_state(circuit, params, basis, &wanted, |i, phi| {
        let (b, members) = membership[i].as_ref().expect("wanted");
        let block = &blocks[*b];
        let sectors: Vec<&Sector> = members.iter().map(|&s| &block.sectors[s]).collect();
        let vs = block.group.compress_many(phi.amplitudes(), &sectors);
        op.apply_into(phi.amplitudes(), &mut hphi);
        let ws = block.group.compress_many(&hphi, &sectors);
        for ((&s, v), w) in members.iter().zip(vs).zip(ws) {
            let acc = &mut accs[*b][s];
            acc.cols.extend_from_slice(&v);
            acc.configs.push(i);
            let k = acc.configs.len();
            let vm = MatRef::from_column_major_slice(&acc.cols, acc.dim, k);
            let h = vm.adjoint() * ColRef::from_slice(&w);
            acc.hcols.push((0..k).map(|j| h[j]).collect());
        }
        Ok(())
    })?;
    let mut out = Vec::new();
    for (block, baccs) in blocks.iter().zip(accs) {
        let nt = block.group.translation_count() as f64;
        let nt2 = nt * nt;
        for (sector, acc) in block.sectors.iter().zip(baccs) {
            let k = acc.configs.len();
            if k == 0 {
                continue;
            }
            let vm = MatRef::from_column_major_slice(&acc.cols, acc.dim, k);
            let mut norm: CMat = vm.adjoint() * vm;
            let mut ham = linalg::zeros(k, k);
            for (i, col) in acc.hcols.iter().enumerate() {
                for (j, &h) in col.iter().enumerate() {
                    ham[(j, i)] = h * nt2;
                    if j != i {
                        ham[(i, j)] = (h * nt2).conj();
                    }
                }
            }
            for j in 0..k {
                for i in 0..k {
                    norm[(i, j)] *= nt2;
                }
            }
            let dev = linalg::hermitize(&mut norm).max(linalg::hermitize(&mut ham));
            if dev > 1e-8 * (1.0 + nt2) {
                return Err(Error::NonHermitian(dev));
            }
            out.push(SubspaceProblem {
                label: sector.label.clone(),
                delta_sz: block.delta_sz,
                configs: acc.configs,
                norm,
                ham,
                translation_count: block.group.translation_count(),
                symmetry: block.spec.clone(),
                hermitian_deviation: dev,
            });
        }
    }
    Ok(out)
}

/// Rebuilds the states sum_i c_i |phi_i> of the given problems, one per
/// column of `coeffs[p]`, and passes each full state to
/// `visit(problem, column, state)`.
pub fn reconstruct(
    circuit: &Circuit,
    lattice: &Lattice,
    params: &[f64],
    basis: &ExcitationBasis,
    problems: &[&SubspaceProblem],
    coeffs: &[CMat],
    mut visit: impl FnMut(usize, usize, StateVector) -> Result<()>,
) -> Result<()> {
    if problems.len() != coeffs.len() {
        return Err(Error::DimensionMismatch { expected: problems.len(), found: coeffs.len() });
    }
    let mut groups: Vec<(SymmetrySpec, SymmetryGroup)> = Vec::new();
    let mut group_of = Vec::new();
    let mut sectors = Vec::new();
    for (p, c) in problems.iter().zip(coeffs) {
        if c.nrows() != p.dim() {
            return Err(Error::DimensionMismatch { expected: p.dim(), found: c.nrows() });
        }
        let g = match groups.iter().position(|(s, _)| s == &p.symmetry) {
            Some(g) => g,
            None => {
                groups.push((p.symmetry.clone(), SymmetryGroup::new(lattice, &p.symmetry)?));
                groups.len() - 1
            }
        };
        sectors.push(groups[g].1.sector(&p.label)?);
        group_of.push(g);
    }
    // position of config i inside problem p
    let mut uses: Vec<Vec<(usize, usize)>> = vec![Vec::new(); basis.len()];
    for (p, prob) in problems.iter().enumerate() {
        for (pos, &i) in prob.configs.iter().enumerate() {
            uses[i].push((p, pos));
        }
    }
    let mut acc: Vec<Vec<Vec<C64>>> =
        problems.iter().zip(coeffs).zip(&sectors).map(|((_, c), s)| vec![vec![C64::new(0.0, 0.0); s.dim()]; c.ncols()]).collect();
    let wanted: Vec<bool> = uses.iter().map(|u| !u.is_empty()).collect();
    for_each_config_state(circuit, params, basis, &wanted, |i, phi| {
        for &(p, pos) in &uses[i] {
            let g = &groups[group_of[p]].1;
            let v = g.compress(phi.amplitudes(), &sectors[p]);
            let nt = problems[p].translation_count as f64;
            for (l, a) in acc[p].iter_mut().enumerate() {
                let c = coeffs[p][(pos, l)] * nt;
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                for (x, y) in a.iter_mut().zip(&v) {
                    *x += c * y;
                }
            }
        }
        Ok(())
    })?;
    for (p, levels) in acc.into_iter().enumerate() {
        let g = &groups[group_of[p]].1;
        for (l, a) in levels.into_iter().enumerate() {
            visit(p, l, g.decompress(&a, &sectors[p]))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{basis_state, enumerate_basis, BasisOptions, ParityFilter};
    use super::*;
    use crate::circuits::build_hva_tfi_1d;
    use crate::models::{build_model, ModelKind};
    use crate::statevec::inner;

    fn random_params(c: &Circuit) -> Vec<f64> {
        (0..c.num_params()).map(|i| 0.4 * ((i as f64) * 1.3 + 0.2).sin()).collect()
    }

    #[test]
    fn momentum_assembly_matches_explicit_bloch_states() {
        let n = 8;
        let m = build_model(ModelKind::TfiChain, &[n], Some(0.8)).unwrap();
        let c = build_hva_tfi_1d(n).unwrap();
        let p = random_params(&c);
        let basis = enumerate_basis(&c, &m.lattice, &BasisOptions { slot_window: Some(2), ..Default::default() }).unwrap();
        let probs = assemble(&c, &m.lattice, &p, &basis, &m.terms).unwrap();
        assert_eq!(probs.len(), 2 * n);
        for prob in &probs {
            let k = &prob.label.momentum;
            let states: Vec<StateVector> = prob
                .configs
                .iter()
                .map(|&i| basis_state(&c, &m.lattice, &p, &basis.configs[i], Some(k)).unwrap())
                .collect();
            let hs: Vec<StateVector> = states.iter().map(|s| s.apply_pauli_sum(&m.terms).unwrap()).collect();
            for i in 0..states.len() {
                for j in 0..states.len() {
                    let nij = inner(&states[i], &states[j]).unwrap();
                    let hij = inner(&states[i], &hs[j]).unwrap();
                    assert!((nij - prob.norm[(i, j)]).norm() < 1e-10, "{:?} N[{i},{j}]", prob.label);
                    assert!((hij - prob.ham[(i, j)]).norm() < 1e-10, "{:?} H[{i},{j}]", prob.label);
                }
            }
        }
    }

    #[test]
    fn parity_filter_selects_one_parity_sector() {
        let n = 6;
        let m = build_model(ModelKind::TfiChain, &[n], Some(1.0)).unwrap();
        let c = build_hva_tfi_1d(n).unwrap();
        let p = random_params(&c);
        let opts = BasisOptions { parity_filter: Some(ParityFilter::Even), ..Default::default() };
        let basis = enumerate_basis(&c, &m.lattice, &opts).unwrap();
        let probs = assemble(&c, &m.lattice, &p, &basis, &m.terms).unwrap();
        assert_eq!(probs.len(), n);
        assert!(probs.iter().all(|q| q.label.parity == Some(1) && q.dim() == basis.len()));
    }

    #[test]
    fn real_space_diagonal_is_one() {
        let n = 6;
        let m = build_model(ModelKind::TfiChain, &[n], Some(1.0)).unwrap();
        let c = build_hva_tfi_1d(n).unwrap();
        let p = random_params(&c);
        let opts = BasisOptions { mode: BasisMode::RealSpace, ..Default::default() };
        let basis = enumerate_basis(&c, &m.lattice, &opts).unwrap();
        let probs = assemble(&c, &m.lattice, &p, &basis, &m.terms).unwrap();
        assert_eq!(probs.iter().map(|q| q.dim()).sum::<usize>(), basis.len());
        for q in &probs {
            for i in 0..q.dim() {
                assert!((q.norm[(i, i)].re - 1.0).abs() < 1e-12);
            }
        }
    }
}
