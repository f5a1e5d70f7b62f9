use num_complex::Complex64 as C64;

use super::{Pauli, StateVector};
use crate::error::{Error, Result};

pub const MAX_GATE_WIDTH: usize = 4;

/// Single-site operator letter. `Plus` = |0><1| raises S_z, `Minus` = |1><0|.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum SiteOp {
    I,
    X,
    Y,
    Z,
    Plus,
    Minus,
}

impl SiteOp {
    pub fn matrix(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        match self {
            SiteOp::I => [[one, o], [o, one]],
            SiteOp::X => Pauli::X.matrix(),
            SiteOp::Y => Pauli::Y.matrix(),
            SiteOp::Z => Pauli::Z.matrix(),
            SiteOp::Plus => [[o, one], [o, o]],
            SiteOp::Minus => [[o, o], [one, o]],
        }
    }

    pub fn pauli(self) -> Option<Pauli> {
        match self {
            SiteOp::X => Some(Pauli::X),
            SiteOp::Y => Some(Pauli::Y),
            SiteOp::Z => Some(Pauli::Z),
            _ => None,
        }
    }

    /// Change of S_z = (#0 - #1)/2 in units of 1.
    pub fn delta_sz(self) -> i32 {
        match self {
            SiteOp::Plus => 1,
            SiteOp::Minus => -1,
            _ => 0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            SiteOp::I => 'I',
            SiteOp::X => 'X',
            SiteOp::Y => 'Y',
            SiteOp::Z => 'Z',
            SiteOp::Plus => '+',
            SiteOp::Minus => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        Some(match c {
            'I' => SiteOp::I,
            'X' => SiteOp::X,
            'Y' => SiteOp::Y,
            'Z' => SiteOp::Z,
            '+' => SiteOp::Plus,
            '-' => SiteOp::Minus,
            _ => return None,
        })
    }
}

/// A gate on up to four qubits stored as a row-major 2^n x 2^n matrix.
/// Matrix index bit k corresponds to `support[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalGate {
    support: Vec<usize>,
    matrix: Vec<C64>,
    unitary: bool,
}

impl LocalGate {
    pub fn new(support: Vec<usize>, matrix: Vec<C64>, unitary: bool) -> Result<Self> {
        let n = support.len();
        if n == 0 || n > MAX_GATE_WIDTH {
            return Err(Error::GateWidth(n));
        }
        for (i, q) in support.iter().enumerate() {
            if support[..i].contains(q) {
                return Err(Error::DuplicateQubit(*q));
            }
        }
        let d = 1usize << n;
        if matrix.len() != d * d {
            return Err(Error::GateMatrixShape { expected: d * d, found: matrix.len() });
        }
        let gate = Self { support, matrix, unitary };
        if unitary {
            let dev = gate.unitarity_deviation();
            if dev > 1e-12 {
                return Err(Error::NotUnitary(dev));
            }
        }
        Ok(gate)
    }

    /// Tensor product of single-site operators, `ops[k]` acting on `support[k]`.
    pub fn product(support: Vec<usize>, ops: &[SiteOp]) -> Result<Self> {
        if support.len() != ops.len() {
            return Err(Error::GateMatrixShape { expected: support.len(), found: ops.len() });
        }
        let n = ops.len();
        let d = 1usize << n;
        let mats: Vec<_> = ops.iter().map(|o| o.matrix()).collect();
        let mut m = vec![C64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in 0..d {
                let mut v = C64::new(1.0, 0.0);
                for (k, mk) in mats.iter().enumerate() {
                    v *= mk[(r >> k) & 1][(c >> k) & 1];
                }
                m[r * d + c] = v;
            }
        }
        let unitary = ops.iter().all(|o| o.pauli().is_some() || *o == SiteOp::I);
        Self::new(support, m, unitary)
    }

    pub fn identity(support: Vec<usize>) -> Result<Self> {
        let ops = vec![SiteOp::I; support.len()];
        Self::product(support, &ops)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn matrix(&self) -> &[C64] {
        &self.matrix
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn dagger(&self) -> LocalGate {
        let d = 1usize << self.support.len();
        let mut m = vec![C64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in 0..d {
                m[c * d + r] = self.matrix[r * d + c].conj();
            }
        }
        LocalGate { support: self.support.clone(), matrix: m, unitary: self.unitary }
    }

    fn unitarity_deviation(&self) -> f64 {
        let d = 1usize << self.support.len();
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..d {
                    s += self.matrix[k * d + i].conj() * self.matrix[k * d + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((s - target).norm());
            }
        }
        dev
    }

    pub fn apply_in_place(&self, state: &mut StateVector) -> Result<()> {
        let nq = state.num_qubits();
        if let Some(&q) = self.support.iter().find(|&&q| q >= nq) {
            return Err(Error::QubitOutOfRange { qubit: q, num_qubits: nq });
        }
        let n = self.support.len();
        let d = 1usize << n;
        let mut offsets = vec![0usize; d];
        for (j, off) in offsets.iter_mut().enumerate() {
            for (k, &q) in self.support.iter().enumerate() {
                if j >> k & 1 == 1 {
                    *off |= 1 << q;
                }
            }
        }
        let mask: usize = self.support.iter().map(|&q| 1usize << q).sum();
        let amps = state.amplitudes_mut();
        let mut buf = vec![C64::new(0.0, 0.0); d];
        for base in 0..amps.len() {
            if base & mask != 0 {
                continue;
            }
            for (b, off) in buf.iter_mut().zip(&offsets) {
                *b = amps[base | off];
            }
            for (r, off) in offsets.iter().enumerate() {
                let row = &self.matrix[r * d..(r + 1) * d];
                amps[base | off] = row.iter().zip(&buf).map(|(m, v)| m * v).sum();
            }
        }
        Ok(())
    }
}

/// Applies a product of single-site operators in place, one site at a time.
pub(crate) fn apply_site_ops(amps: &mut [C64], sites: &[usize], ops: &[SiteOp]) {
    for (&q, &op) in sites.iter().zip(ops) {
        let bit = 1usize << q;
        match op {
            SiteOp::I => {}
            SiteOp::Z => {
                for (x, a) in amps.iter_mut().enumerate() {
                    if x & bit != 0 {
                        *a = -*a;
                    }
                }
            }
            _ => {
                let m = op.matrix();
                for x in 0..amps.len() {
                    if x & bit != 0 {
                        continue;
                    }
                    let (a0, a1) = (amps[x], amps[x | bit]);
                    amps[x] = m[0][0] * a0 + m[0][1] * a1;
                    amps[x | bit] = m[1][0] * a0 + m[1][1] * a1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x_flips_lowest_bit() {
        let s = StateVector::zero(2).unwrap();
        let g = LocalGate::product(vec![0], &[SiteOp::X]).unwrap();
        let out = s.apply_gate(&g).unwrap();
        assert_eq!(out.amplitudes()[1], C64::new(1.0, 0.0));
    }

    #[test]
    fn rejects_wide_and_duplicate_supports() {
        assert!(matches!(LocalGate::identity(vec![0, 1, 2, 3, 4]), Err(Error::GateWidth(5))));
        assert!(matches!(LocalGate::identity(vec![1, 1]), Err(Error::DuplicateQubit(1))));
        let s = StateVector::zero(2).unwrap();
        let g = LocalGate::identity(vec![3]).unwrap();
        assert!(s.apply_gate(&g).is_err());
    }

    #[test]
    fn site_op_kernel_matches_dense_gate() {
        let mut s = StateVector::plus_all(3).unwrap();
        s.amplitudes_mut()[6] = C64::new(-0.4, 0.9);
        let ops = [SiteOp::Plus, SiteOp::Y, SiteOp::Minus];
        let sites = [2, 0, 1];
        let g = LocalGate::product(sites.to_vec(), &ops).unwrap();
        assert!(!g.is_unitary());
        let dense = s.apply_gate(&g).unwrap();
        let mut fast = s.clone();
        apply_site_ops(fast.amplitudes_mut(), &sites, &ops);
        for (a, b) in dense.amplitudes().iter().zip(fast.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn plus_raises_sz() {
        // |1> -> |0>
        let s = StateVector::basis(1, 1).unwrap();
        let g = LocalGate::product(vec![0], &[SiteOp::Plus]).unwrap();
        assert_eq!(s.apply_gate(&g).unwrap().amplitudes()[0], C64::new(1.0, 0.0));
    }
}
