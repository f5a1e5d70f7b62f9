//! Tangent-space excitations: a local operator G inserted at one slot of the
//! optimized circuit, optionally summed over lattice translations with a
//! Bloch phase, spans a variational subspace in which H v = E N v is solved.

mod assemble;
mod solve;

pub use assemble::{assemble, reconstruct, ProblemSummary, SubspaceProblem};
pub use solve::{
    depth_error_profile, label_levels, measure_labels, solve, solve_with, NormScaling, DepthErrorPoint, DepthTarget, LabelFlag, LabelOptions,
    LabeledLevel, LabeledSpectrum, MeasuredLabels, Solution,
};

use std::collections::HashSet;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::circuits::{Circuit, InsertedOp, Insertion};
use crate::error::{Error, Result};
use crate::models::{BondTag, Lattice, LatticeKind};
use crate::statevec::{SiteOp, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisMode {
    /// One orbit representative per placement, summed with Bloch phases.
    Momentum,
    /// Every placement separately.
    RealSpace,
}

/// Single-site operator set used to build the width-n strings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alphabet {
    /// {I, X, Y, Z}
    Pauli,
    /// {I, Z, +, -}, graded by S_z
    Ladder,
}

impl Alphabet {
    pub fn letters(self) -> [SiteOp; 4] {
        match self {
            Alphabet::Pauli => [SiteOp::I, SiteOp::X, SiteOp::Y, SiteOp::Z],
            Alphabet::Ladder => [SiteOp::I, SiteOp::Z, SiteOp::Plus, SiteOp::Minus],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityFilter {
    Even,
    Odd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementKind {
    Site,
    Bond(BondTag),
    /// Four consecutive chain sites.
    Segment,
    /// Elementary square plaquette, sites (x,y), (x+1,y), (x,y+1), (x+1,y+1).
    Plaquette,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub sites: Vec<usize>,
    pub kind: PlacementKind,
}

/// One basis element (slot, placement, G).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcitationConfig {
    /// Index into the circuit's slot list.
    pub slot: usize,
    pub placement: Placement,
    /// ops[k] acts on placement.sites[k].
    pub ops: Vec<SiteOp>,
    pub coeff: C64,
}

impl ExcitationConfig {
    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&o| o == SiteOp::I)
    }

    /// Number of Y and Z letters.
    pub fn parity_weight(&self) -> usize {
        self.ops.iter().filter(|o| matches!(o, SiteOp::Y | SiteOp::Z)).count()
    }

    pub fn delta_sz(&self) -> i32 {
        self.ops.iter().map(|o| o.delta_sz()).sum()
    }

    pub fn has_ladder(&self) -> bool {
        self.ops.iter().any(|o| matches!(o, SiteOp::Plus | SiteOp::Minus))
    }

    /// Non-identity letters sorted by site.
    pub fn support(&self) -> Vec<(usize, SiteOp)> {
        let mut s: Vec<(usize, SiteOp)> =
            self.placement.sites.iter().copied().zip(self.ops.iter().copied()).filter(|&(_, o)| o != SiteOp::I).collect();
        s.sort();
        s
    }

    pub fn insertion(&self) -> Insertion {
        Insertion {
            slot: self.slot,
            op: InsertedOp::Product { sites: self.placement.sites.clone(), ops: self.ops.clone(), coeff: self.coeff },
        }
    }

    /// The same operator moved by a site permutation.
    pub fn translated(&self, permutation: &[usize]) -> ExcitationConfig {
        ExcitationConfig {
            placement: Placement {
                sites: self.placement.sites.iter().map(|&s| permutation[s]).collect(),
                kind: self.placement.kind,
            },
            ..self.clone()
        }
    }

    pub fn label(&self) -> String {
        let ops: String = self.ops.iter().map(|o| o.symbol()).collect();
        let sites: Vec<String> = self.placement.sites.iter().map(|s| s.to_string()).collect();
        format!("{}@{}#{}", ops, sites.join(","), self.slot)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BasisOptions {
    /// Operator width n: 1, 2 or 4.
    pub width: usize,
    pub mode: BasisMode,
    pub alphabet: Alphabet,
    pub parity_filter: Option<ParityFilter>,
    /// Keep only S_z changes in this list (ladder alphabet).
    pub delta_sz: Option<Vec<i32>>,
    /// Keep only the last k slots.
    pub slot_window: Option<usize>,
    /// Momentum sectors to assemble; all when `None`.
    pub momenta: Option<Vec<Vec<usize>>>,
}

impl Default for BasisOptions {
    fn default() -> Self {
        Self {
            width: 1,
            mode: BasisMode::Momentum,
            alphabet: Alphabet::Pauli,
            parity_filter: None,
            delta_sz: None,
            slot_window: None,
            momenta: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcitationBasis {
    pub configs: Vec<ExcitationConfig>,
    pub options: BasisOptions,
}

impl ExcitationBasis {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn mode(&self) -> BasisMode {
        self.options.mode
    }
}

/// Placements of width `width` on the lattice, in a fixed order.
pub fn placements(lattice: &Lattice, width: usize) -> Result<Vec<Placement>> {
    let n = lattice.num_sites();
    match width {
        1 => Ok((0..n).map(|s| Placement { sites: vec![s], kind: PlacementKind::Site }).collect()),
        2 => {
            let mut seen = HashSet::new();
            Ok(lattice
                .bonds
                .iter()
                .filter(|b| seen.insert((b.a.min(b.b), b.a.max(b.b))))
                .map(|b| Placement { sites: vec![b.a, b.b], kind: PlacementKind::Bond(b.tag) })
                .collect())
        }
        4 => match lattice.kind {
            LatticeKind::Chain => Ok((0..n)
                .map(|j| Placement { sites: (0..4).map(|k| (j + k) % n).collect(), kind: PlacementKind::Segment })
                .collect()),
            LatticeKind::Square => {
                let (lx, ly) = (lattice.lx, lattice.ly);
                let site = |x: usize, y: usize| (y % ly) * lx + x % lx;
                Ok((0..ly)
                    .flat_map(|y| {
                        (0..lx).map(move |x| Placement {
                            sites: vec![site(x, y), site(x + 1, y), site(x, y + 1), site(x + 1, y + 1)],
                            kind: PlacementKind::Plaquette,
                        })
                    })
                    .collect())
            }
            LatticeKind::Kagome => Err(Error::Unsupported("width-4 operators on the kagome lattice".into())),
        },
        w => Err(Error::InvalidBasis(format!("operator width must be 1, 2 or 4, got {w}"))),
    }
}

fn op_strings(alphabet: Alphabet, width: usize) -> Vec<Vec<SiteOp>> {
    let letters = alphabet.letters();
    let mut out = vec![Vec::new()];
    for _ in 0..width {
        out = out
            .into_iter()
            .flat_map(|v: Vec<SiteOp>| {
                letters.iter().map(move |&l| {
                    let mut w = v.clone();
                    w.push(l);
                    w
                })
            })
            .collect();
    }
    out
}

/// Lexicographically smallest translate of a support.
fn canonical_support(support: &[(usize, SiteOp)], perms: &[Vec<usize>]) -> Vec<(usize, SiteOp)> {
    perms
        .iter()
        .map(|p| {
            let mut s: Vec<(usize, SiteOp)> = support.iter().map(|&(q, o)| (p[q], o)).collect();
            s.sort();
            s
        })
        .min()
        .unwrap_or_else(|| support.to_vec())
}

/// Builds the excitation basis: for every kept slot, placement and operator
/// string, minus strings equal to one already listed (the identity is kept
/// once per slot; strings with identity letters collapse onto their
/// support, and in momentum mode onto its canonical translate).
pub fn enumerate_basis(circuit: &Circuit, lattice: &Lattice, options: &BasisOptions) -> Result<ExcitationBasis> {
    if lattice.num_sites() != circuit.num_qubits() {
        return Err(Error::DimensionMismatch { expected: circuit.num_qubits(), found: lattice.num_sites() });
    }
    if options.mode == BasisMode::Momentum && !circuit.is_translation_covariant() {
        return Err(Error::InvalidBasis("momentum-resolved basis needs a translation-covariant circuit".into()));
    }
    if options.parity_filter.is_some() && options.alphabet != Alphabet::Pauli {
        return Err(Error::InvalidBasis("parity filter needs the Pauli alphabet".into()));
    }
    if options.delta_sz.is_some() && options.alphabet != Alphabet::Ladder {
        return Err(Error::InvalidBasis("S_z filter needs the ladder alphabet".into()));
    }
    if options.slot_window == Some(0) {
        return Err(Error::InvalidBasis("slot window must be positive".into()));
    }
    if let Some(ms) = &options.momenta {
        for m in ms {
            if m.len() != lattice.translations.len()
                || m.iter().zip(&lattice.translations).any(|(&k, t)| k >= t.order)
            {
                return Err(Error::InvalidMomentum(format!("{m:?}")));
            }
        }
    }
    let all = placements(lattice, options.width)?;
    let perms: Vec<Vec<usize>> = match options.mode {
        BasisMode::Momentum => lattice.translation_shifts().iter().map(|s| lattice.translation_by(s)).collect(),
        BasisMode::RealSpace => Vec::new(),
    };
    // orbit representatives
    let places: Vec<Placement> = match options.mode {
        BasisMode::RealSpace => all,
        BasisMode::Momentum => {
            let mut seen = HashSet::new();
            all.into_iter()
                .filter(|p| {
                    let canon = perms
                        .iter()
                        .map(|perm| {
                            let mut s: Vec<usize> = p.sites.iter().map(|&q| perm[q]).collect();
                            s.sort();
                            s
                        })
                        .min()
                        .expect("nonempty group");
                    seen.insert((p.kind, canon))
                })
                .collect()
        }
    };
    let nslots = circuit.slots().len();
    if nslots == 0 {
        return Err(Error::InvalidBasis("circuit has no insertion slots".into()));
    }
    let first = nslots - options.slot_window.unwrap_or(nslots).min(nslots);
    let strings = op_strings(options.alphabet, options.width);
    let mut configs = Vec::new();
    for slot in first..nslots {
        let mut seen = HashSet::new();
        for p in &places {
            for ops in &strings {
                let c = ExcitationConfig { slot, placement: p.clone(), ops: ops.clone(), coeff: C64::new(1.0, 0.0) };
                let w = c.parity_weight();
                match options.parity_filter {
                    Some(ParityFilter::Even) if w % 2 != 0 => continue,
                    Some(ParityFilter::Odd) if w % 2 != 1 => continue,
                    _ => {}
                }
                if let Some(d) = &options.delta_sz {
                    if !d.contains(&c.delta_sz()) {
                        continue;
                    }
                }
                let key = match options.mode {
                    BasisMode::Momentum => canonical_support(&c.support(), &perms),
                    BasisMode::RealSpace => c.support(),
                };
                if seen.insert(key) {
                    configs.push(c);
                }
            }
        }
    }
    Ok(ExcitationBasis { configs, options: options.clone() })
}

/// The state U_D..U_{l+1} G U_l..U_1 |Psi_0> of one configuration.
pub fn config_state(circuit: &Circuit, params: &[f64], config: &ExcitationConfig) -> Result<StateVector> {
    circuit.run(params, None, Some(&config.insertion()))
}

/// Unnormalized basis state. With `momentum`, the Bloch sum
/// sum_j e^{-i K.j} T^j |phi(config)> built by moving the placement (valid
/// for translation-covariant circuits); without, the single configuration.
pub fn basis_state(
    circuit: &Circuit,
    lattice: &Lattice,
    params: &[f64],
    config: &ExcitationConfig,
    momentum: Option<&[usize]>,
) -> Result<StateVector> {
    let Some(m) = momentum else {
        return config_state(circuit, params, config);
    };
    if !circuit.is_translation_covariant() {
        return Err(Error::InvalidBasis("Bloch states by placement shift need a translation-covariant circuit".into()));
    }
    if m.len() != lattice.translations.len() || m.iter().zip(&lattice.translations).any(|(&k, t)| k >= t.order) {
        return Err(Error::InvalidMomentum(format!("{m:?}")));
    }
    let mut out = StateVector::null(circuit.num_qubits())?;
    for shift in lattice.translation_shifts() {
        let phase: f64 = shift
            .iter()
            .zip(m)
            .zip(&lattice.translations)
            .map(|((&s, &k), t)| 2.0 * PI * (s * k) as f64 / t.order as f64)
            .sum();
        let moved = config.translated(&lattice.translation_by(&shift));
        let st = config_state(circuit, params, &moved)?;
        out.axpy(C64::from_polar(1.0, -phase), &st)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{build_hva_heisenberg_chain, build_hva_tfi_1d, build_hva_tfi_2d};

    #[test]
    fn counts_for_chain() {
        let c = build_hva_tfi_1d(16).unwrap();
        let l = Lattice::chain(16).unwrap();
        let b = enumerate_basis(&c, &l, &BasisOptions::default()).unwrap();
        assert_eq!(b.len(), 32);
        let even = BasisOptions { parity_filter: Some(ParityFilter::Even), ..Default::default() };
        assert_eq!(enumerate_basis(&c, &l, &even).unwrap().len(), 16);
        let sma = BasisOptions { slot_window: Some(1), ..Default::default() };
        assert_eq!(enumerate_basis(&c, &l, &sma).unwrap().len(), 4);
        let two = BasisOptions { width: 2, ..Default::default() };
        assert_eq!(enumerate_basis(&c, &l, &two).unwrap().len(), 8 * 13);
        let four = BasisOptions { width: 4, ..Default::default() };
        assert_eq!(enumerate_basis(&c, &l, &four).unwrap().len(), 8 * 193);
        let real = BasisOptions { mode: BasisMode::RealSpace, ..Default::default() };
        assert_eq!(enumerate_basis(&c, &l, &real).unwrap().len(), 8 * (1 + 3 * 16));
    }

    #[test]
    fn square_lattice_bonds_have_two_orbits() {
        let l = Lattice::square(4, 4).unwrap();
        let c = build_hva_tfi_2d(&l).unwrap();
        let b = enumerate_basis(&c, &l, &BasisOptions { width: 2, slot_window: Some(1), ..Default::default() }).unwrap();
        // identity, 3 single-site, 9 on each bond orientation
        assert_eq!(b.len(), 1 + 3 + 18);
    }

    #[test]
    fn rejects_momentum_on_non_covariant_circuit() {
        let c = build_hva_heisenberg_chain(8, 4).unwrap();
        let l = Lattice::chain(8).unwrap();
        assert!(matches!(enumerate_basis(&c, &l, &BasisOptions::default()), Err(Error::InvalidBasis(_))));
        let opts = BasisOptions {
            mode: BasisMode::RealSpace,
            alphabet: Alphabet::Ladder,
            delta_sz: Some(vec![0]),
            ..Default::default()
        };
        assert_eq!(enumerate_basis(&c, &l, &opts).unwrap().len(), 4 * 9);
    }

    #[test]
    fn identity_bloch_states() {
        let n = 8;
        let c = build_hva_tfi_1d(n).unwrap();
        let l = Lattice::chain(n).unwrap();
        let p: Vec<f64> = (0..c.num_params()).map(|i| 0.1 + 0.05 * i as f64).collect();
        let id = ExcitationConfig {
            slot: 1,
            placement: Placement { sites: vec![0], kind: PlacementKind::Site },
            ops: vec![SiteOp::I],
            coeff: C64::new(1.0, 0.0),
        };
        let gs = c.run(&p, None, None).unwrap();
        let k0 = basis_state(&c, &l, &p, &id, Some(&[0])).unwrap();
        let mut expect = gs.clone();
        expect.scale(C64::new(n as f64, 0.0));
        assert!(k0.amplitudes().iter().zip(expect.amplitudes()).all(|(a, b)| (a - b).norm() < 1e-10));
        let k3 = basis_state(&c, &l, &p, &id, Some(&[3])).unwrap();
        assert!(k3.norm_sqr().sqrt() < 1e-10);
    }

    #[test]
    fn bloch_eigenvalue() {
        let n = 8;
        let c = build_hva_tfi_1d(n).unwrap();
        let l = Lattice::chain(n).unwrap();
        let p: Vec<f64> = (0..c.num_params()).map(|i| 0.3 * (i as f64 + 0.5).sin()).collect();
        let cfg = ExcitationConfig {
            slot: 2,
            placement: Placement { sites: vec![0], kind: PlacementKind::Site },
            ops: vec![SiteOp::Y],
            coeff: C64::new(1.0, 0.0),
        };
        for m in 0..n {
            let s = basis_state(&c, &l, &p, &cfg, Some(&[m])).unwrap();
            let t = s.translate(&l.translations[0].permutation).unwrap();
            let ev = C64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64);
            let err: f64 = t.amplitudes().iter().zip(s.amplitudes()).map(|(a, b)| (a - ev * b).norm_sqr()).sum();
            assert!(err.sqrt() < 1e-10, "m = {m}");
            // placement shift agrees with permuting amplitudes
            let st = config_state(&c, &p, &cfg).unwrap();
            let mut direct = StateVector::null(n).unwrap();
            let mut cur = st.clone();
            for j in 0..n {
                direct.axpy(C64::from_polar(1.0, -2.0 * PI * (j * m) as f64 / n as f64), &cur).unwrap();
                cur = cur.translate(&l.translations[0].permutation).unwrap();
            }
            let d: f64 = direct.amplitudes().iter().zip(s.amplitudes()).map(|(a, b)| (a - b).norm_sqr()).sum();
            assert!(d.sqrt() < 1e-10);
        }
    }
}
