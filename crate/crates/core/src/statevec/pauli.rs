use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn symbol(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::X => [[o, one], [one, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[one, o], [o, -one]],
        }
    }
}

/// A weighted tensor product of single-qubit Pauli operators; identity on
/// every qubit not listed.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    letters: Vec<(usize, Pauli)>,
    pub coeff: C64,
}

impl PauliString {
    pub fn new(coeff: impl Into<C64>, letters: &[(usize, Pauli)]) -> Result<Self> {
        let mut sorted = letters.to_vec();
        sorted.sort_by_key(|&(q, _)| q);
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::DuplicateQubit(w[0].0));
            }
        }
        Ok(Self { letters: sorted, coeff: coeff.into() })
    }

    pub fn identity(coeff: impl Into<C64>) -> Self {
        Self { letters: Vec::new(), coeff: coeff.into() }
    }

    pub fn single(coeff: impl Into<C64>, qubit: usize, p: Pauli) -> Self {
        Self { letters: vec![(qubit, p)], coeff: coeff.into() }
    }

    pub fn pair(coeff: impl Into<C64>, a: usize, pa: Pauli, b: usize, pb: Pauli) -> Result<Self> {
        Self::new(coeff, &[(a, pa), (b, pb)])
    }

    pub fn letters(&self) -> &[(usize, Pauli)] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.letters.last().map(|&(q, _)| q)
    }

    pub fn with_coeff(&self, coeff: impl Into<C64>) -> Self {
        Self { letters: self.letters.clone(), coeff: coeff.into() }
    }

    /// Number of Y and Z letters: odd strings anticommute with the global X parity.
    pub fn parity_weight(&self) -> usize {
        self.letters.iter().filter(|(_, p)| *p != Pauli::X).count()
    }

    pub(crate) fn masks(&self) -> PauliMasks {
        let mut m = PauliMasks { flip: 0, sign: 0, num_y: 0 };
        for &(q, p) in &self.letters {
            let bit = 1usize << q;
            match p {
                Pauli::X => m.flip |= bit,
                Pauli::Y => {
                    m.flip |= bit;
                    m.sign |= bit;
                    m.num_y += 1;
                }
                Pauli::Z => m.sign |= bit,
            }
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}{:+}i)", self.coeff.re, self.coeff.im)?;
        if self.letters.is_empty() {
            return write!(f, " I");
        }
        for &(q, p) in &self.letters {
            write!(f, " {}{}", p.symbol(), q)?;
        }
        Ok(())
    }
}

/// Bit masks encoding a Pauli string acting on computational basis states:
/// `P|x> = i^num_y (-1)^{popcount(x & sign)} |x ^ flip>`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PauliMasks {
    pub flip: usize,
    pub sign: usize,
    pub num_y: u32,
}

impl PauliMasks {
    pub fn y_phase(&self) -> C64 {
        match self.num_y % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }
}

/// A Pauli sum preprocessed for repeated application: all diagonal terms are
/// folded into one real-or-complex diagonal, the rest grouped by flip mask.
#[derive(Clone, Debug)]
pub struct CompiledPauliSum {
    num_qubits: usize,
    diagonal: Vec<C64>,
    has_diagonal: bool,
    groups: Vec<(usize, Vec<(usize, C64)>)>,
}

impl CompiledPauliSum {
    pub fn new(num_qubits: usize, terms: &[PauliString]) -> Result<Self> {
        let dim = 1usize << num_qubits;
        let mut diag_terms: Vec<(usize, C64)> = Vec::new();
        let mut groups: Vec<(usize, Vec<(usize, C64)>)> = Vec::new();
        for t in terms {
            if let Some(q) = t.max_qubit() {
                if q >= num_qubits {
                    return Err(Error::QubitOutOfRange { qubit: q, num_qubits });
                }
            }
            let m = t.masks();
            let c = t.coeff * m.y_phase();
            if m.flip == 0 {
                diag_terms.push((m.sign, c));
            } else if let Some(g) = groups.iter_mut().find(|g| g.0 == m.flip) {
                g.1.push((m.sign, c));
            } else {
                groups.push((m.flip, vec![(m.sign, c)]));
            }
        }
        let has_diagonal = !diag_terms.is_empty();
        let diagonal = if has_diagonal {
            (0..dim)
                .map(|x| {
                    diag_terms.iter().fold(C64::new(0.0, 0.0), |acc, &(s, c)| {
                        if (x & s).count_ones() & 1 == 1 { acc - c } else { acc + c }
                    })
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self { num_qubits, diagonal, has_diagonal, groups })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// out = (sum of terms) * input
    pub fn apply_into(&self, input: &[C64], out: &mut [C64]) {
        debug_assert_eq!(input.len(), 1 << self.num_qubits);
        if self.has_diagonal {
            for ((o, a), d) in out.iter_mut().zip(input).zip(&self.diagonal) {
                *o = a * d;
            }
        } else {
            out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        }
        for (flip, terms) in &self.groups {
            for (x, a) in input.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let mut coef = C64::new(0.0, 0.0);
                for &(s, c) in terms {
                    if (x & s).count_ones() & 1 == 1 {
                        coef -= c;
                    } else {
                        coef += c;
                    }
                }
                out[x ^ flip] += coef * a;
            }
        }
    }

    /// Calls `f(t, h)` for every nonzero entry of (sum of terms)|x> = sum_t h|t>.
    pub fn for_each_column_entry(&self, x: usize, mut f: impl FnMut(usize, C64)) {
        if self.has_diagonal && self.diagonal[x] != C64::new(0.0, 0.0) {
            f(x, self.diagonal[x]);
        }
        for (flip, terms) in &self.groups {
            let mut coef = C64::new(0.0, 0.0);
            for &(s, c) in terms {
                if (x & s).count_ones() & 1 == 1 {
                    coef -= c;
                } else {
                    coef += c;
                }
            }
            if coef != C64::new(0.0, 0.0) {
                f(x ^ flip, coef);
            }
        }
    }

    /// <bra| (sum of terms) |ket>, summed in blocks to limit rounding drift.
    pub fn matrix_element(&self, bra: &[C64], ket: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        const BLOCK: usize = 4096;
        if self.has_diagonal {
            for ((bb, kb), db) in bra.chunks(BLOCK).zip(ket.chunks(BLOCK)).zip(self.diagonal.chunks(BLOCK)) {
                let mut part = C64::new(0.0, 0.0);
                for ((b, k), d) in bb.iter().zip(kb).zip(db) {
                    part += b.conj() * d * k;
                }
                acc += part;
            }
        }
        for (flip, terms) in &self.groups {
            for (start, kb) in ket.chunks(BLOCK).enumerate() {
                let mut part = C64::new(0.0, 0.0);
                for (i, k) in kb.iter().enumerate() {
                    let x = start * BLOCK + i;
                    let mut coef = C64::new(0.0, 0.0);
                    for &(s, c) in terms {
                        if (x & s).count_ones() & 1 == 1 {
                            coef -= c;
                        } else {
                            coef += c;
                        }
                    }
                    part += bra[x ^ flip].conj() * coef * k;
                }
                acc += part;
            }
        }
        acc
    }
}
