//! Symmetry-adapted bases built from lattice translations, the global spin
//! flip and magnetization, shared by exact diagonalization and the
//! momentum-resolved subspace assembly.
//!
//! For a sector with characters lambda(g) (eigenvalue of U_g), the basis
//! vectors are |r~> = P|r>/|P r| for orbit representatives r, with
//! P = (1/|G|) sum_g conj(lambda(g)) U_g. Writing x = g_x r,
//! <x|r~> = |P r| conj(lambda(g_x)) and |P r|^2 = |Stab(r)|/|G|.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::models::Lattice;
use crate::statevec::{CompiledPauliSum, PauliString, PermutationTable, StateVector};

const NONE: u32 = u32::MAX;

/// Which symmetries to use.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetrySpec {
    pub translations: bool,
    pub parity: bool,
    /// Restrict to basis states with this many 1 bits (down spins).
    pub popcount: Option<usize>,
}

impl SymmetrySpec {
    pub fn none() -> Self {
        Self { translations: false, parity: false, popcount: None }
    }
}

/// Quantum numbers of one symmetry sector. `momentum[d]` is m_d with
/// T_d eigenvalue exp(2 pi i m_d / L_d).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SectorLabel {
    pub momentum: Vec<usize>,
    pub parity: Option<i32>,
    pub popcount: Option<usize>,
}

impl SectorLabel {
    pub fn momentum_angles(&self, orders: &[usize]) -> Vec<f64> {
        self.momentum.iter().zip(orders).map(|(&m, &l)| 2.0 * PI * m as f64 / l as f64).collect()
    }
}

#[derive(Clone, Debug)]
struct Element {
    shift: Vec<usize>,
    flip: bool,
}

/// Orbit structure of the (restricted) computational basis under the group.
#[derive(Clone, Debug)]
pub struct SymmetryGroup {
    num_qubits: usize,
    orders: Vec<usize>,
    elements: Vec<Element>,
    allowed: Vec<u32>,
    orbit_of: Vec<u32>,
    elem_of: Vec<u16>,
    orbit_rep: Vec<u32>,
    /// Stabilizer element indices for each orbit.
    stabilizers: Vec<Vec<u16>>,
    popcount: Option<usize>,
    flip: bool,
}

/// One sector: the subset of orbits compatible with the characters.
#[derive(Clone, Debug)]
pub struct Sector {
    pub label: SectorLabel,
    index_of_orbit: Vec<u32>,
    orbits: Vec<u32>,
    norms: Vec<f64>,
    chars: Vec<C64>,
}

impl Sector {
    pub fn dim(&self) -> usize {
        self.orbits.len()
    }

    /// Character lambda(g) of group element `e`.
    pub fn character(&self, e: usize) -> C64 {
        self.chars[e]
    }
}

impl SymmetryGroup {
    pub fn new(lattice: &Lattice, spec: &SymmetrySpec) -> Result<Self> {
        let n = lattice.num_sites();
        if n > 24 {
            return Err(Error::Unsupported(format!("{n} sites")));
        }
        let shifts = if spec.translations { lattice.translation_shifts() } else { vec![vec![]] };
        let orders: Vec<usize> =
            if spec.translations { lattice.translations.iter().map(|t| t.order).collect() } else { Vec::new() };
        let flips: &[bool] = if spec.parity { &[false, true] } else { &[false] };
        let mut elements = Vec::new();
        let mut tables = Vec::new();
        for s in &shifts {
            let table = PermutationTable::new(n, &lattice.translation_by(s))?;
            for &f in flips {
                elements.push(Element { shift: s.clone(), flip: f });
                tables.push(table.clone());
            }
        }
        if elements.len() > u16::MAX as usize {
            return Err(Error::Unsupported("symmetry group too large".into()));
        }
        let dim = 1usize << n;
        let all = dim - 1;
        let allowed: Vec<u32> = match spec.popcount {
            Some(k) => (0..dim as u32).filter(|x| x.count_ones() as usize == k).collect(),
            None => (0..dim as u32).collect(),
        };
        let mut orbit_of = vec![NONE; dim];
        let mut elem_of = vec![0u16; dim];
        let mut orbit_rep = Vec::new();
        let mut stabilizers = Vec::new();
        for &x in &allowed {
            if orbit_of[x as usize] != NONE {
                continue;
            }
            let o = orbit_rep.len() as u32;
            orbit_rep.push(x);
            let mut stab = Vec::new();
            for (e, (el, t)) in elements.iter().zip(&tables).enumerate() {
                let mut y = t.apply(x as usize);
                if el.flip {
                    y ^= all;
                }
                if y == x as usize {
                    stab.push(e as u16);
                }
                if orbit_of[y] == NONE {
                    orbit_of[y] = o;
                    elem_of[y] = e as u16;
                }
            }
            stabilizers.push(stab);
        }
        if spec.parity && spec.popcount.is_some() && 2 * spec.popcount.unwrap() != n {
            return Err(Error::SymmetryMismatch("spin flip does not preserve the magnetization sector".into()));
        }
        Ok(Self {
            num_qubits: n,
            orders,
            elements,
            allowed,
            orbit_of,
            elem_of,
            orbit_rep,
            stabilizers,
            popcount: spec.popcount,
            flip: spec.parity,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Number of pure translations in the group.
    pub fn translation_count(&self) -> usize {
        self.orders.iter().product()
    }

    pub fn num_orbits(&self) -> usize {
        self.orbit_rep.len()
    }

    pub fn allowed_states(&self) -> &[u32] {
        &self.allowed
    }

    /// All sector labels of this group, momentum-major.
    pub fn labels(&self) -> Vec<SectorLabel> {
        let mut moms = vec![Vec::new()];
        for &l in &self.orders {
            moms = moms
                .into_iter()
                .flat_map(|v: Vec<usize>| {
                    (0..l).map(move |m| {
                        let mut w = v.clone();
                        w.push(m);
                        w
                    })
                })
                .collect();
        }
        let parities: Vec<Option<i32>> = if self.flip { vec![Some(1), Some(-1)] } else { vec![None] };
        let mut out = Vec::new();
        for m in moms {
            for &p in &parities {
                out.push(SectorLabel { momentum: m.clone(), parity: p, popcount: self.popcount });
            }
        }
        out
    }

    pub fn sector(&self, label: &SectorLabel) -> Result<Sector> {
        if label.momentum.len() != self.orders.len() {
            return Err(Error::InvalidMomentum(format!("{:?} for group orders {:?}", label.momentum, self.orders)));
        }
        if let Some((&m, &l)) = label.momentum.iter().zip(&self.orders).find(|(m, l)| *m >= *l) {
            return Err(Error::InvalidMomentum(format!("m = {m} outside 0..{l}")));
        }
        if label.parity.is_some() != self.flip || label.parity.is_some_and(|p| p != 1 && p != -1) {
            return Err(Error::InvalidMomentum(format!("parity label {:?}", label.parity)));
        }
        let chars: Vec<C64> = self
            .elements
            .iter()
            .map(|el| {
                let phase: f64 = el
                    .shift
                    .iter()
                    .zip(&label.momentum)
                    .zip(&self.orders)
                    .map(|((&s, &m), &l)| 2.0 * PI * (s * m) as f64 / l as f64)
                    .sum();
                let p = if el.flip { label.parity.unwrap_or(1) as f64 } else { 1.0 };
                C64::from_polar(p, phase)
            })
            .collect();
        let g = self.order() as f64;
        let mut index_of_orbit = vec![NONE; self.num_orbits()];
        let mut orbits = Vec::new();
        let mut norms = Vec::new();
        for (o, stab) in self.stabilizers.iter().enumerate() {
            let sum: C64 = stab.iter().map(|&e| chars[e as usize]).sum();
            if (sum.re - stab.len() as f64).abs() < 1e-9 {
                index_of_orbit[o] = orbits.len() as u32;
                orbits.push(o as u32);
                norms.push((stab.len() as f64 / g).sqrt());
            }
        }
        Ok(Sector { label: label.clone(), index_of_orbit, orbits, norms, chars })
    }

    /// Sector coordinates <r~|psi> for every listed sector in one pass.
    pub fn compress_many(&self, psi: &[C64], sectors: &[&Sector]) -> Vec<Vec<C64>> {
        let mut out: Vec<Vec<C64>> = sectors.iter().map(|s| vec![C64::new(0.0, 0.0); s.dim()]).collect();
        for &x in &self.allowed {
            let a = psi[x as usize];
            if a.re == 0.0 && a.im == 0.0 {
                continue;
            }
            let o = self.orbit_of[x as usize] as usize;
            let e = self.elem_of[x as usize] as usize;
            for (s, v) in sectors.iter().zip(out.iter_mut()) {
                let i = s.index_of_orbit[o];
                if i != NONE {
                    v[i as usize] += s.chars[e] * s.norms[i as usize] * a;
                }
            }
        }
        out
    }

    pub fn compress(&self, psi: &[C64], sector: &Sector) -> Vec<C64> {
        self.compress_many(psi, &[sector]).pop().expect("one sector")
    }

    /// Full-space amplitudes of the sector vector with coordinates `c`.
    pub fn decompress(&self, c: &[C64], sector: &Sector) -> StateVector {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << self.num_qubits];
        for &x in &self.allowed {
            let o = self.orbit_of[x as usize] as usize;
            let i = sector.index_of_orbit[o];
            if i == NONE {
                continue;
            }
            let e = self.elem_of[x as usize] as usize;
            amps[x as usize] = c[i as usize] * sector.norms[i as usize] * sector.chars[e].conj();
        }
        StateVector::from_amplitudes(self.num_qubits, amps).expect("matching width")
    }

    /// Dense block of a Pauli-sum operator commuting with the group.
    pub fn block_matrix(&self, op: &CompiledPauliSum, sector: &Sector) -> Result<CMat> {
        let d = sector.dim();
        let mut m = linalg::zeros(d, d);
        let mut leaked = 0.0f64;
        for (col, &o) in sector.orbits.iter().enumerate() {
            let r = self.orbit_rep[o as usize] as usize;
            let norm_c = sector.norms[col];
            op.for_each_column_entry(r, |t, h| {
                let ot = self.orbit_of[t];
                if ot == NONE {
                    leaked = leaked.max(h.norm());
                    return;
                }
                let row = sector.index_of_orbit[ot as usize];
                if row == NONE {
                    return;
                }
                let e = self.elem_of[t] as usize;
                m[(row as usize, col)] += h * sector.chars[e] * (sector.norms[row as usize] / norm_c);
            });
        }
        if leaked > 1e-12 {
            return Err(Error::SymmetryMismatch(format!("operator leaves the magnetization sector ({leaked:e})")));
        }
        Ok(m)
    }
}

/// Checks ||H U psi - U H psi|| on a deterministic pseudo-random state for
/// every group generator.
pub fn check_commutes(lattice: &Lattice, terms: &[PauliString], spec: &SymmetrySpec) -> Result<()> {
    let n = lattice.num_sites();
    let op = CompiledPauliSum::new(n, terms)?;
    let dim = 1usize << n;
    let psi: Vec<C64> = (0..dim)
        .map(|x| {
            let t = x as f64;
            C64::new((1.3 * t + 0.2).sin(), (0.7 * t * t % 17.0).cos())
        })
        .collect();
    let psi = StateVector::from_amplitudes(n, psi)?;
    let mut ops: Vec<(String, Box<dyn Fn(&StateVector) -> Result<StateVector>>)> = Vec::new();
    if spec.translations {
        for t in &lattice.translations {
            let p = t.permutation.clone();
            ops.push((format!("translation {}", t.name), Box::new(move |s: &StateVector| s.translate(&p))));
        }
    }
    if spec.parity {
        let flip = crate::models::parity_operator(n);
        ops.push(("spin flip".into(), Box::new(move |s: &StateVector| s.apply_pauli_sum(&flip))));
    }
    if spec.popcount.is_some() {
        let z = crate::models::total_z(n);
        ops.push(("magnetization".into(), Box::new(move |s: &StateVector| s.apply_pauli_sum(&z))));
    }
    let h_psi = psi.apply_compiled(&op);
    let scale = h_psi.norm_sqr().sqrt().max(1.0);
    for (name, u) in &ops {
        let a = u(&psi)?.apply_compiled(&op);
        let b = u(&h_psi)?;
        let diff: f64 = a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm_sqr()).sum();
        if diff.sqrt() > 1e-10 * scale {
            return Err(Error::SymmetryMismatch(format!("{name} (residual {:e})", diff.sqrt())));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, ModelKind};

    #[test]
    fn sectors_partition_the_basis() {
        let m = build_model(ModelKind::TfiChain, &[6], Some(0.5)).unwrap();
        let g = SymmetryGroup::new(&m.lattice, &SymmetrySpec { translations: true, parity: true, popcount: None })
            .unwrap();
        let total: usize = g.labels().iter().map(|l| g.sector(l).unwrap().dim()).sum();
        assert_eq!(total, 64);
        let h = SymmetryGroup::new(&m.lattice, &SymmetrySpec { translations: true, parity: false, popcount: Some(3) })
            .unwrap();
        let total: usize = h.labels().iter().map(|l| h.sector(l).unwrap().dim()).sum();
        assert_eq!(total, 20);
    }

    #[test]
    fn compress_decompress_roundtrip_on_sector_states() {
        let m = build_model(ModelKind::TfiChain, &[6], Some(0.5)).unwrap();
        let g = SymmetryGroup::new(&m.lattice, &SymmetrySpec { translations: true, parity: true, popcount: None })
            .unwrap();
        for label in g.labels() {
            let s = g.sector(&label).unwrap();
            let c: Vec<C64> = (0..s.dim()).map(|i| C64::new(i as f64 + 1.0, 0.5 - i as f64)).collect();
            let full = g.decompress(&c, &s);
            let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            assert!((full.norm_sqr() - norm).abs() < 1e-9 * norm);
            let back = g.compress(full.amplitudes(), &s);
            for (a, b) in c.iter().zip(&back) {
                assert!((a - b).norm() < 1e-10);
            }
            let t: Vec<usize> = (0..6).map(|i| (i + 1) % 6).collect();
            let shifted = full.translate(&t).unwrap();
            let k = 2.0 * PI * label.momentum[0] as f64 / 6.0;
            for (a, b) in shifted.amplitudes().iter().zip(full.amplitudes()) {
                assert!((a - C64::from_polar(1.0, k) * b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn commutation_check_detects_mismatch() {
        let m = build_model(ModelKind::TfiChain, &[5], Some(0.5)).unwrap();
        let ok = SymmetrySpec { translations: true, parity: true, popcount: None };
        check_commutes(&m.lattice, &m.terms, &ok).unwrap();
        let bad = SymmetrySpec { translations: false, parity: false, popcount: Some(2) };
        assert!(check_commutes(&m.lattice, &m.terms, &bad).is_err());
    }
}
