//! Spin models on periodic lattices and their symmetry operators.

mod lattice;

pub use lattice::{Bond, BondTag, Lattice, LatticeKind, Translation};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::{Pauli, PauliString};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// -sum Z_i Z_{i+1} - g sum X_i on a ring
    TfiChain,
    /// -sum_<ij> Z_i Z_j - g sum X_i on a periodic square lattice
    TfiSquare,
    /// sum X_i X_{i+1} + Y_i Y_{i+1} + Z_i Z_{i+1} on a ring
    HeisenbergChain,
    /// sum_<ij> X_i X_j + Y_i Y_j + Z_i Z_j on the 12-site kagome torus
    HeisenbergKagome,
}

impl ModelKind {
    pub fn is_tfi(self) -> bool {
        matches!(self, ModelKind::TfiChain | ModelKind::TfiSquare)
    }

    pub fn is_heisenberg(self) -> bool {
        !self.is_tfi()
    }
}

/// Symmetries known to commute with a model's Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelSymmetries {
    pub translations: bool,
    pub parity: bool,
    pub sz: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub kind: ModelKind,
    pub lattice: Lattice,
    pub g: Option<f64>,
    pub terms: Vec<PauliString>,
}

impl Model {
    pub fn num_sites(&self) -> usize {
        self.lattice.num_sites()
    }

    pub fn symmetries(&self) -> ModelSymmetries {
        ModelSymmetries { translations: true, parity: self.kind.is_tfi(), sz: self.kind.is_heisenberg() }
    }

    pub fn field(&self) -> f64 {
        self.g.unwrap_or(0.0)
    }
}

/// Builds lattice and Hamiltonian. `sizes` is `[N]` for chains and
/// `[Lx, Ly]` for square and kagome lattices; `g` is required for the Ising
/// models and ignored otherwise.
pub fn build_model(kind: ModelKind, sizes: &[usize], g: Option<f64>) -> Result<Model> {
    let lattice = match (kind, sizes) {
        (ModelKind::TfiChain | ModelKind::HeisenbergChain, [n]) => Lattice::chain(*n)?,
        (ModelKind::TfiSquare, [lx, ly]) => Lattice::square(*lx, *ly)?,
        (ModelKind::HeisenbergKagome, [lx, ly]) => Lattice::kagome(*lx, *ly)?,
        _ => return Err(Error::InvalidModel(format!("sizes {sizes:?} do not fit {kind:?}"))),
    };
    lattice.validate()?;
    let mut terms = Vec::new();
    let g = if kind.is_tfi() {
        let g = g.ok_or_else(|| Error::InvalidModel("transverse field g is required".into()))?;
        if !g.is_finite() {
            return Err(Error::InvalidModel(format!("non-finite field {g}")));
        }
        for b in &lattice.bonds {
            terms.push(PauliString::pair(-1.0, b.a, Pauli::Z, b.b, Pauli::Z)?);
        }
        for i in 0..lattice.num_sites() {
            terms.push(PauliString::single(-g, i, Pauli::X));
        }
        Some(g)
    } else {
        for b in &lattice.bonds {
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                terms.push(PauliString::pair(1.0, b.a, p, b.b, p)?);
            }
        }
        None
    };
    Ok(Model { kind, lattice, g, terms })
}

/// The global spin flip prod_i X_i.
pub fn parity_operator(n: usize) -> Vec<PauliString> {
    let letters: Vec<_> = (0..n).map(|i| (i, Pauli::X)).collect();
    vec![PauliString::new(1.0, &letters).expect("distinct sites")]
}

/// S^2 with S_a = sum_i sigma^a_i / 2.
pub fn total_spin_squared(n: usize) -> Vec<PauliString> {
    let mut terms = vec![PauliString::identity(0.75 * n as f64)];
    for i in 0..n {
        for j in i + 1..n {
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                terms.push(PauliString::pair(0.5, i, p, j, p).expect("distinct sites"));
            }
        }
    }
    terms
}

/// sum_i Z_i
pub fn total_z(n: usize) -> Vec<PauliString> {
    (0..n).map(|i| PauliString::single(1.0, i, Pauli::Z)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_term_counts() {
        let m = build_model(ModelKind::TfiChain, &[4], Some(1.0)).unwrap();
        assert_eq!(m.terms.len(), 8);
        assert!(m.terms.iter().all(|t| t.coeff.re == -1.0));
        let h = build_model(ModelKind::HeisenbergChain, &[6], None).unwrap();
        assert_eq!(h.terms.len(), 18);
    }

    #[test]
    fn square_and_kagome_term_counts() {
        let m = build_model(ModelKind::TfiSquare, &[4, 4], Some(3.0)).unwrap();
        let zz = m.terms.iter().filter(|t| t.letters().len() == 2).count();
        let x: Vec<_> = m.terms.iter().filter(|t| t.letters().len() == 1).collect();
        assert_eq!(zz, 32);
        assert_eq!(x.len(), 16);
        assert!(x.iter().all(|t| t.coeff.re == -3.0));
        let k = build_model(ModelKind::HeisenbergKagome, &[2, 2], None).unwrap();
        assert_eq!(k.num_sites(), 12);
        assert_eq!(k.lattice.bonds.len(), 24);
        assert_eq!(k.terms.len(), 72);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_model(ModelKind::TfiChain, &[2], Some(1.0)).is_err());
        assert!(build_model(ModelKind::TfiChain, &[8], None).is_err());
        assert!(build_model(ModelKind::HeisenbergKagome, &[3, 3], None).is_err());
        assert!(build_model(ModelKind::TfiSquare, &[4], Some(1.0)).is_err());
    }
}
