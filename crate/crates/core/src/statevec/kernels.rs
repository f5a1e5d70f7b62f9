//! Whole-layer kernels. A layer of commuting gates is applied in as few
//! passes over memory as possible: diagonal layers in one pass, layers of
//! single-qubit gates in two (low qubits inside cache-sized chunks, high
//! qubits through a gathered buffer).

use num_complex::Complex64 as C64;

pub(crate) type Mat2 = [[C64; 2]; 2];

const BLOCK_BITS: usize = 13;

/// Per-gate parities of x & mask, packed into a u64 and assembled from two
/// half-index lookup tables.
struct ParityTable {
    lo_bits: usize,
    lo: Vec<u64>,
    hi: Vec<u64>,
}

impl ParityTable {
    fn new(num_bits: usize, signs: &[usize]) -> Option<Self> {
        if signs.len() > 64 {
            return None;
        }
        let lo_bits = num_bits.div_ceil(2);
        let hi_bits = num_bits - lo_bits;
        let build = |bits: usize, shift: usize| -> Vec<u64> {
            (0..1usize << bits)
                .map(|v| {
                    let x = v << shift;
                    signs.iter().enumerate().fold(0u64, |acc, (g, &s)| acc | ((((x & s).count_ones() & 1) as u64) << g))
                })
                .collect()
        };
        Some(Self { lo_bits, lo: build(lo_bits, 0), hi: build(hi_bits, lo_bits) })
    }

    #[inline]
    fn bits(&self, x: usize) -> u64 {
        self.lo[x & ((1 << self.lo_bits) - 1)] ^ self.hi[x >> self.lo_bits]
    }
}

/// Multiplies every amplitude by prod_g exp(-i angle/2 s_g(x)) where
/// s_g(x) = (-1)^popcount(x & signs[g]).
pub(crate) fn diagonal_uniform(amps: &mut [C64], signs: &[usize], angle: f64) {
    let ng = signs.len() as f64;
    // k odd-parity gates give exponent (ng - 2k)
    let table: Vec<C64> = (0..=signs.len()).map(|k| C64::from_polar(1.0, -0.5 * angle * (ng - 2.0 * k as f64))).collect();
    let n = amps.len().trailing_zeros() as usize;
    match ParityTable::new(n, signs) {
        Some(pt) => {
            for (x, a) in amps.iter_mut().enumerate() {
                *a *= table[pt.bits(x).count_ones() as usize];
            }
        }
        None => {
            for (x, a) in amps.iter_mut().enumerate() {
                let k: u32 = signs.iter().map(|&s| (x & s).count_ones() & 1).sum();
                *a *= table[k as usize];
            }
        }
    }
}

/// sum_x conj(bra_x) ket_x s_g(x) for every sign mask.
pub(crate) fn diagonal_elements(bra: &[C64], ket: &[C64], signs: &[usize]) -> Vec<C64> {
    let mut total = C64::new(0.0, 0.0);
    let mut odd = vec![C64::new(0.0, 0.0); signs.len()];
    let n = ket.len().trailing_zeros() as usize;
    let pt = ParityTable::new(n, signs);
    for (start, (bb, kb)) in bra.chunks(4096).zip(ket.chunks(4096)).enumerate() {
        let mut part = C64::new(0.0, 0.0);
        let mut part_odd = vec![C64::new(0.0, 0.0); signs.len()];
        for (i, (b, k)) in bb.iter().zip(kb).enumerate() {
            let x = start * 4096 + i;
            let w = b.conj() * k;
            part += w;
            match &pt {
                Some(pt) => {
                    let mut bits = pt.bits(x);
                    while bits != 0 {
                        part_odd[bits.trailing_zeros() as usize] += w;
                        bits &= bits - 1;
                    }
                }
                None => {
                    for (acc, &s) in part_odd.iter_mut().zip(signs) {
                        if (x & s).count_ones() & 1 == 1 {
                            *acc += w;
                        }
                    }
                }
            }
        }
        total += part;
        for (o, p) in odd.iter_mut().zip(part_odd) {
            *o += p;
        }
    }
    odd.into_iter().map(|o| total - 2.0 * o).collect()
}

fn apply_2x2(buf: &mut [C64], bit: usize, m: &Mat2) {
    let step = 1usize << bit;
    // exp(-i a X) pattern: equal real diagonal, equal imaginary off-diagonal
    let rot_x = m[0][0] == m[1][1] && m[0][0].im == 0.0 && m[0][1] == m[1][0] && m[0][1].re == 0.0;
    for base in (0..buf.len()).step_by(2 * step) {
        let (lo, hi) = buf[base..base + 2 * step].split_at_mut(step);
        if rot_x {
            let (c, t) = (m[0][0].re, m[0][1].im);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a0, *a1);
                *a0 = C64::new(c * u.re - t * v.im, c * u.im + t * v.re);
                *a1 = C64::new(c * v.re - t * u.im, c * v.im + t * u.re);
            }
            continue;
        }
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (u, v) = (*a0, *a1);
            *a0 = m[0][0] * u + m[0][1] * v;
            *a1 = m[1][0] * u + m[1][1] * v;
        }
    }
}

fn element_2x2(bra: &[C64], ket: &[C64], bit: usize, m: &Mat2) -> C64 {
    let step = 1usize << bit;
    let zero = C64::new(0.0, 0.0);
    let flip_only = m[0][0] == zero && m[1][1] == zero && m[0][1] == m[1][0];
    let mut acc = zero;
    for base in (0..ket.len()).step_by(2 * step) {
        let (b0, b1) = bra[base..base + 2 * step].split_at(step);
        let (k0, k1) = ket[base..base + 2 * step].split_at(step);
        if flip_only {
            let mut part = zero;
            for ((p, q), (u, v)) in b0.iter().zip(b1).zip(k0.iter().zip(k1)) {
                part += p.conj() * v + q.conj() * u;
            }
            acc += m[0][1] * part;
            continue;
        }
        for ((p, q), (u, v)) in b0.iter().zip(b1).zip(k0.iter().zip(k1)) {
            acc += p.conj() * (m[0][0] * u + m[0][1] * v);
            acc += q.conj() * (m[1][0] * u + m[1][1] * v);
        }
    }
    acc
}

struct Split {
    low: usize,
    /// low offsets per gathered block
    width_bits: usize,
    high: usize,
}

fn split(len: usize) -> Split {
    let n = len.trailing_zeros() as usize;
    let low = n.min(BLOCK_BITS);
    let high = n - low;
    let width_bits = BLOCK_BITS.saturating_sub(high).min(low);
    Split { low, width_bits, high }
}

fn gather(amps: &[C64], sp: &Split, l0: usize, buf: &mut [C64]) {
    let w = 1usize << sp.width_bits;
    for h in 0..1usize << sp.high {
        let src = (h << sp.low) + l0;
        buf[h * w..(h + 1) * w].copy_from_slice(&amps[src..src + w]);
    }
}

fn scatter(amps: &mut [C64], sp: &Split, l0: usize, buf: &[C64]) {
    let w = 1usize << sp.width_bits;
    for h in 0..1usize << sp.high {
        let dst = (h << sp.low) + l0;
        amps[dst..dst + w].copy_from_slice(&buf[h * w..(h + 1) * w]);
    }
}

/// Applies single-qubit matrices on distinct qubits.
pub(crate) fn one_qubit_layer(amps: &mut [C64], gates: &[(usize, Mat2)]) {
    let sp = split(amps.len());
    let (low, high): (Vec<_>, Vec<_>) = gates.iter().partition(|(q, _)| *q < sp.low);
    if !low.is_empty() {
        for chunk in amps.chunks_mut(1 << sp.low) {
            for (q, m) in &low {
                apply_2x2(chunk, *q, m);
            }
        }
    }
    if !high.is_empty() {
        let w = 1usize << sp.width_bits;
        let mut buf = vec![C64::new(0.0, 0.0); w << sp.high];
        for l0 in (0..1usize << sp.low).step_by(w) {
            gather(amps, &sp, l0, &mut buf);
            for (q, m) in &high {
                apply_2x2(&mut buf, q - sp.low + sp.width_bits, m);
            }
            scatter(amps, &sp, l0, &buf);
        }
    }
}

/// <bra| M_q |ket> for each single-qubit matrix.
pub(crate) fn one_qubit_elements(bra: &[C64], ket: &[C64], ops: &[(usize, Mat2)]) -> Vec<C64> {
    let sp = split(ket.len());
    let mut out = vec![C64::new(0.0, 0.0); ops.len()];
    let chunk = 1usize << sp.low;
    let w = 1usize << sp.width_bits;
    let any_high = ops.iter().any(|(q, _)| *q >= sp.low);
    for (b, k) in bra.chunks(chunk).zip(ket.chunks(chunk)) {
        for ((q, m), o) in ops.iter().zip(out.iter_mut()) {
            if *q < sp.low {
                *o += element_2x2(b, k, *q, m);
            }
        }
    }
    if any_high {
        let mut bb = vec![C64::new(0.0, 0.0); w << sp.high];
        let mut kb = bb.clone();
        for l0 in (0..chunk).step_by(w) {
            gather(bra, &sp, l0, &mut bb);
            gather(ket, &sp, l0, &mut kb);
            for ((q, m), o) in ops.iter().zip(out.iter_mut()) {
                if *q >= sp.low {
                    *o += element_2x2(&bb, &kb, q - sp.low + sp.width_bits, m);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..1usize << n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    fn naive_1q(amps: &mut [C64], q: usize, m: &Mat2) {
        let bit = 1 << q;
        for x in 0..amps.len() {
            if x & bit == 0 {
                let (u, v) = (amps[x], amps[x | bit]);
                amps[x] = m[0][0] * u + m[0][1] * v;
                amps[x | bit] = m[1][0] * u + m[1][1] * v;
            }
        }
    }

    fn mat(seed: f64) -> Mat2 {
        let (s, c) = seed.sin_cos();
        [[C64::new(c, 0.1), C64::new(0.0, -s)], [C64::new(0.3, -s), C64::new(c, 0.0)]]
    }

    #[test]
    fn blocked_layer_matches_naive() {
        for n in [3usize, 13, 16] {
            let gates: Vec<(usize, Mat2)> = (0..n).map(|q| (q, mat(0.3 + q as f64))).collect();
            let mut a = random_state(n, 1);
            let mut b = a.clone();
            one_qubit_layer(&mut a, &gates);
            for (q, m) in &gates {
                naive_1q(&mut b, *q, m);
            }
            assert!(a.iter().zip(&b).all(|(x, y)| (x - y).norm() < 1e-12), "n = {n}");
            let bra = random_state(n, 2);
            let el = one_qubit_elements(&bra, &b, &gates);
            for ((q, m), e) in gates.iter().zip(&el) {
                let mut t = b.clone();
                naive_1q(&mut t, *q, m);
                let direct: C64 = bra.iter().zip(&t).map(|(x, y)| x.conj() * y).sum();
                assert!((direct - e).norm() < 1e-9 * direct.norm().max(1.0));
            }
        }
    }

    #[test]
    fn diagonal_layer_matches_product() {
        let n = 6;
        let signs = [0b11, 0b1100, 0b110000, 0b100001];
        let mut a = random_state(n, 3);
        let orig = a.clone();
        diagonal_uniform(&mut a, &signs, 0.7);
        for (x, v) in a.iter().enumerate() {
            let e: f64 = signs.iter().map(|&s| if (x & s).count_ones() % 2 == 1 { -1.0 } else { 1.0 }).sum();
            assert!((orig[x] * C64::from_polar(1.0, -0.35 * e) - v).norm() < 1e-14);
        }
        let el = diagonal_elements(&orig, &a, &signs);
        for (g, &s) in signs.iter().enumerate() {
            let d: C64 = (0..1 << n)
                .map(|x: usize| orig[x].conj() * a[x] * if (x & s).count_ones() % 2 == 1 { -1.0 } else { 1.0 })
                .sum();
            assert!((d - el[g]).norm() < 1e-12);
        }
    }
}
