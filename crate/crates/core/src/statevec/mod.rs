//! Dense statevector engine. Qubit 0 is the least significant bit of the
//! basis-state index.

mod gate;
mod kernels;
mod pauli;

pub use gate::{LocalGate, SiteOp};
pub(crate) use gate::apply_site_ops;
pub(crate) use kernels::{diagonal_elements, diagonal_uniform, one_qubit_elements, one_qubit_layer, Mat2};
pub use pauli::{CompiledPauliSum, Pauli, PauliString};
pub(crate) use pauli::PauliMasks;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// The computational basis state |0...0>.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    /// The zero vector (not a physical state).
    pub fn null(num_qubits: usize) -> Result<Self> {
        check_width(num_qubits)?;
        Ok(Self { num_qubits, amps: vec![C64::new(0.0, 0.0); 1usize << num_qubits] })
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_width(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: index });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    pub fn from_amplitudes(num_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        check_width(num_qubits)?;
        if amps.len() != 1usize << num_qubits {
            return Err(Error::DimensionMismatch { expected: 1 << num_qubits, found: amps.len() });
        }
        Ok(Self { num_qubits, amps })
    }

    /// |+>^N
    pub fn plus_all(num_qubits: usize) -> Result<Self> {
        check_width(num_qubits)?;
        let dim = 1usize << num_qubits;
        let a = C64::new((dim as f64).sqrt().recip(), 0.0);
        Ok(Self { num_qubits, amps: vec![a; dim] })
    }

    /// (|0...0> - |1...1>)/sqrt(2)
    pub fn ghz_odd(num_qubits: usize) -> Result<Self> {
        let mut s = Self::zero(num_qubits)?;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        s.amps[0] = C64::new(h, 0.0);
        let last = s.amps.len() - 1;
        s.amps[last] -= C64::new(h, 0.0);
        Ok(s)
    }

    /// Product of two-site singlets (|01> - |10>)/sqrt(2) on the given pairs;
    /// uncovered sites are left in |0>.
    pub fn dimer_covering(num_qubits: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut seen = vec![false; num_qubits];
        for &(a, b) in pairs {
            for q in [a, b] {
                if q >= num_qubits {
                    return Err(Error::QubitOutOfRange { qubit: q, num_qubits });
                }
                if std::mem::replace(&mut seen[q], true) {
                    return Err(Error::DuplicateQubit(q));
                }
            }
        }
        let mut s = Self::zero(num_qubits)?;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for &(a, b) in pairs {
            // |0_a 0_b> -> (|0_a 1_b> - |1_a 0_b>)/sqrt(2)
            let mut next = vec![C64::new(0.0, 0.0); s.amps.len()];
            let (ma, mb) = (1usize << a, 1usize << b);
            for (x, amp) in s.amps.iter().enumerate() {
                if *amp == C64::new(0.0, 0.0) {
                    continue;
                }
                let base = x & !(ma | mb);
                next[base | mb] += amp * h;
                next[base | ma] -= amp * h;
            }
            s.amps = next;
        }
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized(n));
        }
        let s = n.sqrt().recip();
        self.amps.iter_mut().for_each(|a| *a *= s);
        Ok(())
    }

    pub fn scale(&mut self, c: C64) {
        self.amps.iter_mut().for_each(|a| *a *= c);
    }

    /// self += c * other
    pub fn axpy(&mut self, c: C64, other: &StateVector) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += c * b;
        }
        Ok(())
    }

    fn check_same(&self, other: &StateVector) -> Result<()> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionMismatch { expected: self.num_qubits, found: other.num_qubits });
        }
        Ok(())
    }

    pub fn apply_gate(&self, gate: &LocalGate) -> Result<StateVector> {
        let mut out = self.clone();
        gate.apply_in_place(&mut out)?;
        Ok(out)
    }

    pub fn apply_pauli_string_in_place(&mut self, p: &PauliString) -> Result<()> {
        if let Some(q) = p.max_qubit() {
            if q >= self.num_qubits {
                return Err(Error::QubitOutOfRange { qubit: q, num_qubits: self.num_qubits });
            }
        }
        let m = p.masks();
        let ph = p.coeff * m.y_phase();
        if m.flip == 0 {
            for (x, a) in self.amps.iter_mut().enumerate() {
                *a *= if (x & m.sign).count_ones() & 1 == 1 { -ph } else { ph };
            }
            return Ok(());
        }
        let pivot = 1usize << (usize::BITS - 1 - m.flip.leading_zeros());
        for x in 0..self.amps.len() {
            if x & pivot != 0 {
                continue;
            }
            let y = x ^ m.flip;
            let (ax, ay) = (self.amps[x], self.amps[y]);
            let sx = if (x & m.sign).count_ones() & 1 == 1 { -ph } else { ph };
            let sy = if (y & m.sign).count_ones() & 1 == 1 { -ph } else { ph };
            self.amps[y] = sx * ax;
            self.amps[x] = sy * ay;
        }
        Ok(())
    }

    /// In-place exp(-i theta/2 P) for a Pauli string P with real unit-modulus
    /// coefficient folded into theta.
    pub fn apply_pauli_rotation(&mut self, p: &PauliString, theta: f64) -> Result<()> {
        if let Some(q) = p.max_qubit() {
            if q >= self.num_qubits {
                return Err(Error::QubitOutOfRange { qubit: q, num_qubits: self.num_qubits });
            }
        }
        if p.coeff.im.abs() > 1e-14 {
            return Err(Error::Unsupported("rotation about a Pauli string with complex coefficient".into()));
        }
        rotate(&mut self.amps, p.masks(), theta * p.coeff.re);
        Ok(())
    }

    /// In-place exp(-i theta/2 (XX + YY + ZZ)) on qubits a, b.
    pub fn apply_exchange(&mut self, a: usize, b: usize, theta: f64) -> Result<()> {
        for q in [a, b] {
            if q >= self.num_qubits {
                return Err(Error::QubitOutOfRange { qubit: q, num_qubits: self.num_qubits });
            }
        }
        if a == b {
            return Err(Error::DuplicateQubit(a));
        }
        exchange(&mut self.amps, a, b, theta);
        Ok(())
    }

    pub fn expect_pauli_sum(&self, terms: &[PauliString]) -> Result<f64> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized(n));
        }
        if let Some(t) = terms.iter().find(|t| t.coeff.im != 0.0) {
            return Err(Error::NonRealExpectation(t.coeff.im));
        }
        let op = CompiledPauliSum::new(self.num_qubits, terms)?;
        let v = op.matrix_element(&self.amps, &self.amps);
        if v.im.abs() > 1e-10 {
            return Err(Error::NonRealExpectation(v.im));
        }
        Ok(v.re)
    }

    pub fn apply_pauli_sum(&self, terms: &[PauliString]) -> Result<StateVector> {
        let op = CompiledPauliSum::new(self.num_qubits, terms)?;
        Ok(self.apply_compiled(&op))
    }

    pub fn apply_compiled(&self, op: &CompiledPauliSum) -> StateVector {
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        op.apply_into(&self.amps, &mut out);
        StateVector { num_qubits: self.num_qubits, amps: out }
    }

    /// Moves the amplitude of basis state b to the state whose bit
    /// `permutation[i]` equals bit i of b.
    pub fn translate(&self, permutation: &[usize]) -> Result<StateVector> {
        let table = PermutationTable::new(self.num_qubits, permutation)?;
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (x, a) in self.amps.iter().enumerate() {
            out[table.apply(x)] = *a;
        }
        Ok(StateVector { num_qubits: self.num_qubits, amps: out })
    }
}

pub fn inner(a: &StateVector, b: &StateVector) -> Result<C64> {
    a.check_same(b)?;
    Ok(inner_slices(&a.amps, &b.amps))
}

pub fn inner_slices(a: &[C64], b: &[C64]) -> C64 {
    let mut total = C64::new(0.0, 0.0);
    for (ab, bb) in a.chunks(4096).zip(b.chunks(4096)) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (x, y) in ab.iter().zip(bb) {
            re += x.re * y.re + x.im * y.im;
            im += x.re * y.im - x.im * y.re;
        }
        total += C64::new(re, im);
    }
    total
}

fn check_width(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(Error::Unsupported(format!("register of {num_qubits} qubits (1..={MAX_QUBITS})")));
    }
    Ok(())
}

pub(crate) fn rotate(amps: &mut [C64], m: PauliMasks, angle: f64) {
    let (s, c) = (angle / 2.0).sin_cos();
    let ph = m.y_phase();
    if m.flip == 0 {
        let plus = C64::new(c, -s);
        let minus = C64::new(c, s);
        for (x, a) in amps.iter_mut().enumerate() {
            *a *= if (x & m.sign).count_ones() & 1 == 1 { minus } else { plus };
        }
        return;
    }
    // new_x = c a_x - i s <x|P|y> a_y
    let mis = C64::new(0.0, -s) * ph;
    let pivot = 1usize << (usize::BITS - 1 - m.flip.leading_zeros());
    for x in 0..amps.len() {
        if x & pivot != 0 {
            continue;
        }
        let y = x ^ m.flip;
        let (ax, ay) = (amps[x], amps[y]);
        let sy = if (y & m.sign).count_ones() & 1 == 1 { -mis } else { mis };
        let sx = if (x & m.sign).count_ones() & 1 == 1 { -mis } else { mis };
        amps[x] = ax * c + sy * ay;
        amps[y] = ay * c + sx * ax;
    }
}

pub(crate) fn exchange(amps: &mut [C64], a: usize, b: usize, theta: f64) {
    // XX+YY+ZZ = 2 SWAP - I: phase e^{-i theta/2} on |00>,|11>;
    // e^{i theta/2}(cos theta - i sin theta X) on span{|01>,|10>}
    let (ma, mb) = (1usize << a, 1usize << b);
    let (sh, ch) = (theta / 2.0).sin_cos();
    let ph_tr = C64::new(ch, -sh);
    let ph_s = C64::new(ch, sh);
    let (st, ct) = theta.sin_cos();
    let diag = ph_s * ct;
    let off = ph_s * C64::new(0.0, -st);
    for x in 0..amps.len() {
        if x & (ma | mb) != 0 {
            continue;
        }
        let (i00, i01, i10, i11) = (x, x | ma, x | mb, x | ma | mb);
        amps[i00] *= ph_tr;
        amps[i11] *= ph_tr;
        let (u, v) = (amps[i01], amps[i10]);
        amps[i01] = diag * u + off * v;
        amps[i10] = off * u + diag * v;
    }
}

/// Byte lookup tables mapping a basis index to its image under a site
/// permutation.
#[derive(Clone, Debug)]
pub struct PermutationTable {
    tables: Vec<[u32; 256]>,
}

impl PermutationTable {
    pub fn new(num_qubits: usize, permutation: &[usize]) -> Result<Self> {
        validate_permutation(num_qubits, permutation)?;
        let nbytes = num_qubits.div_ceil(8);
        let mut tables = vec![[0u32; 256]; nbytes];
        for (k, t) in tables.iter_mut().enumerate() {
            for (byte, slot) in t.iter_mut().enumerate() {
                let mut v = 0u32;
                for bit in 0..8 {
                    let q = 8 * k + bit;
                    if q < num_qubits && byte & (1 << bit) != 0 {
                        v |= 1 << permutation[q];
                    }
                }
                *slot = v;
            }
        }
        Ok(Self { tables })
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        let mut v = 0u32;
        for (k, t) in self.tables.iter().enumerate() {
            v |= t[(x >> (8 * k)) & 0xff];
        }
        v as usize
    }
}

pub fn validate_permutation(num_qubits: usize, permutation: &[usize]) -> Result<()> {
    if permutation.len() != num_qubits {
        return Err(Error::InvalidPermutation(format!(
            "length {} for {} qubits",
            permutation.len(),
            num_qubits
        )));
    }
    let mut seen = vec![false; num_qubits];
    for &p in permutation {
        if p >= num_qubits || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidPermutation(format!("{permutation:?} is not a bijection")));
        }
    }
    Ok(())
}
