use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qcex::circuits::{build_hva_heisenberg_chain, build_hva_tfi_1d};
use qcex::linalg;
use qcex::models::{build_model, ModelKind};
use qcex::oracles::ed::{ed_sector_spectrum, EdOptions};
use qcex::statevec::inner;
use qcex::tangent::{assemble, basis_state, enumerate_basis, solve, BasisOptions};
use qcex::vqe::{energy, gradient};

const N: usize = 6;

fn angles(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-PI..PI, len)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn circuits_preserve_the_norm(p in angles(N), q in angles(2 * 3)) {
        let c = build_hva_tfi_1d(N).unwrap();
        prop_assert!((c.run(&p, None, None).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
        let h = build_hva_heisenberg_chain(N, 2).unwrap();
        prop_assert!((h.run(&q, None, None).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn assembled_matrices_are_hermitian_and_psd(p in angles(N), g in 0.2f64..2.0) {
        let m = build_model(ModelKind::TfiChain, &[N], Some(g)).unwrap();
        let c = build_hva_tfi_1d(N).unwrap();
        let basis = enumerate_basis(&c, &m.lattice, &BasisOptions::default()).unwrap();
        for prob in assemble(&c, &m.lattice, &p, &basis, &m.terms).unwrap() {
            let scale = (0..prob.dim()).map(|i| prob.norm[(i, i)].re).fold(0.0, f64::max).max(1.0);
            prop_assert!(prob.hermitian_deviation <= 1e-10 * scale);
            let w = linalg::eigvalsh(&prob.norm).unwrap();
            prop_assert!(w[0] >= -1e-10 * w[w.len() - 1]);
        }
    }

    #[test]
    fn subspace_levels_interlace_exact_levels(p in angles(N), g in 0.2f64..2.0) {
        let m = build_model(ModelKind::TfiChain, &[N], Some(g)).unwrap();
        let c = build_hva_tfi_1d(N).unwrap();
        let basis = enumerate_basis(&c, &m.lattice, &BasisOptions { width: 2, ..Default::default() }).unwrap();
        let probs = assemble(&c, &m.lattice, &p, &basis, &m.terms).unwrap();
        let ed = ed_sector_spectrum(&m.lattice, &m.terms, &probs[0].symmetry, &EdOptions::default()).unwrap();
        for prob in &probs {
            let exact = &ed.sector(&prob.label).unwrap().energies;
            for (k, e) in solve(prob, 1e-6).unwrap().energies.iter().enumerate() {
                prop_assert!(*e >= exact[k] - 1e-8);
            }
        }
    }

    #[test]
    fn bloch_states_are_translation_eigenstates(p in angles(N), pick in any::<prop::sample::Index>()) {
        let m = build_model(ModelKind::TfiChain, &[N], Some(1.0)).unwrap();
        let c = build_hva_tfi_1d(N).unwrap();
        let basis = enumerate_basis(&c, &m.lattice, &BasisOptions { width: 2, ..Default::default() }).unwrap();
        let cfg = &basis.configs[pick.index(basis.len())];
        let perm = &m.lattice.translations[0].permutation;
        for k in 0..N {
            let s = basis_state(&c, &m.lattice, &p, cfg, Some(&[k])).unwrap();
            let t = s.translate(perm).unwrap();
            let ev = C64::from_polar(1.0, 2.0 * PI * k as f64 / N as f64);
            let err: f64 = t.amplitudes().iter().zip(s.amplitudes()).map(|(a, b)| (a - ev * b).norm_sqr()).sum();
            prop_assert!(err.sqrt() < 1e-10 * s.norm_sqr().sqrt().max(1.0));
        }
    }

    #[test]
    fn adjoint_gradient_matches_central_differences(p in angles(N), g in 0.2f64..2.0) {
        let m = build_model(ModelKind::TfiChain, &[N], Some(g)).unwrap();
        let c = build_hva_tfi_1d(N).unwrap();
        let grad = gradient(&c, &p, &m.terms).unwrap();
        let h = 1e-5;
        for i in 0..p.len() {
            let mut q = p.clone();
            q[i] += h;
            let ep = energy(&c, &q, &m.terms).unwrap();
            q[i] -= 2.0 * h;
            let em = energy(&c, &q, &m.terms).unwrap();
            prop_assert!(((ep - em) / (2.0 * h) - grad[i]).abs() < 1e-6);
        }
    }
}

#[test]
fn momentum_assembly_matches_brute_force_at_eight_sites() {
    let n = 8;
    let m = build_model(ModelKind::TfiChain, &[n], Some(1.0)).unwrap();
    let c = build_hva_tfi_1d(n).unwrap();
    let p: Vec<f64> = (0..c.num_params()).map(|i| 0.7 * (1.7 * i as f64 + 0.4).cos()).collect();
    let basis = enumerate_basis(&c, &m.lattice, &BasisOptions { width: 2, slot_window: Some(2), ..Default::default() }).unwrap();
    for prob in assemble(&c, &m.lattice, &p, &basis, &m.terms).unwrap() {
        let k = &prob.label.momentum;
        let states: Vec<_> = prob.configs.iter().map(|&i| basis_state(&c, &m.lattice, &p, &basis.configs[i], Some(k)).unwrap()).collect();
        for (i, a) in states.iter().enumerate() {
            let ha = a.apply_pauli_sum(&m.terms).unwrap();
            for (j, b) in states.iter().enumerate() {
                let nij = inner(a, b).unwrap();
                let hij = inner(&ha, b).unwrap();
                assert!((nij - prob.norm[(i, j)]).norm() < 1e-9, "{:?} N[{i},{j}]", prob.label);
                assert!((hij - prob.ham[(i, j)]).norm() < 1e-9, "{:?} H[{i},{j}]", prob.label);
            }
        }
    }
}
