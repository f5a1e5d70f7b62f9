use num_complex::Complex64 as C64;
use qcex::circuits::{build_hva_tfi_1d, Circuit};
use qcex::hadamard::{measure_hamiltonian_element, measure_overlap, noisy_spectrum, ElementKey, ShotPlan};
use qcex::models::{build_model, Model, ModelKind};
use qcex::tangent::{assemble, config_state, enumerate_basis, solve, BasisOptions, ExcitationBasis, ParityFilter};
use qcex::vqe::{optimize, VqeSettings};

fn setup(n: usize) -> (Model, Circuit, Vec<f64>, ExcitationBasis) {
    let m = build_model(ModelKind::TfiChain, &[n], Some(1.0)).unwrap();
    let c = build_hva_tfi_1d(n).unwrap();
    let p = optimize(&c, &m.terms, &VqeSettings { restarts: 1, ..Default::default() }, None).unwrap().final_params;
    let opts = BasisOptions { parity_filter: Some(ParityFilter::Even), ..Default::default() };
    let basis = enumerate_basis(&c, &m.lattice, &opts).unwrap();
    (m, c, p, basis)
}

#[test]
fn exact_mode_reproduces_direct_assembly() {
    let (m, c, p, basis) = setup(8);
    let run = noisy_spectrum(&c, &m.lattice, &p, &basis, &m.terms, &ShotPlan::exact(), 1e-10, None).unwrap();
    let direct = assemble(&c, &m.lattice, &p, &basis, &m.terms).unwrap();
    assert_eq!(run.problems.len(), direct.len());
    for (np, d) in run.problems.iter().zip(&direct) {
        assert_eq!(np.sampled.label, d.label);
        for i in 0..d.dim() {
            for j in 0..d.dim() {
                assert!((np.sampled.norm[(i, j)] - d.norm[(i, j)]).norm() < 1e-10);
                assert!((np.sampled.ham[(i, j)] - d.ham[(i, j)]).norm() < 1e-10);
            }
        }
        let a = solve(&np.sampled, 1e-10).unwrap().energies;
        let b = solve(d, 1e-10).unwrap().energies;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

#[test]
fn sampled_matrices_are_hermitian() {
    let (m, c, p, basis) = setup(6);
    let plan = ShotPlan { shots_per_element: Some(10_000), seed: 3, ..Default::default() };
    let run = noisy_spectrum(&c, &m.lattice, &p, &basis, &m.terms, &plan, 1e-2, None).unwrap();
    for np in &run.problems {
        for mat in [&np.sampled.norm, &np.sampled.ham] {
            for i in 0..mat.nrows() {
                for j in 0..mat.ncols() {
                    assert_eq!(mat[(i, j)], mat[(j, i)].conj());
                }
            }
        }
    }
}

#[test]
fn sampled_overlaps_are_unbiased() {
    let (_, c, p, basis) = setup(6);
    let a = config_state(&c, &p, &basis.configs[1]).unwrap();
    let b = config_state(&c, &p, &basis.configs[3]).unwrap();
    let exact = measure_overlap(&a, &b, &ShotPlan::exact(), ElementKey { hamiltonian: false, row: 0, col: 0, term: 0 }).unwrap();
    let shots = 10_000u64;
    let seeds = 200;
    let mut mean = C64::new(0.0, 0.0);
    for seed in 0..seeds {
        let plan = ShotPlan { shots_per_element: Some(shots), seed, ..Default::default() };
        mean += measure_overlap(&a, &b, &plan, ElementKey { hamiltonian: false, row: 1, col: 3, term: 0 }).unwrap();
    }
    mean /= seeds as f64;
    // per-component standard error of the mean is at most 1/sqrt(shots * seeds)
    let se = 1.0 / ((shots * seeds) as f64).sqrt();
    assert!((mean.re - exact.re).abs() < 4.0 * se);
    assert!((mean.im - exact.im).abs() < 4.0 * se);
}

#[test]
fn hamiltonian_element_error_scales_as_inverse_root_shots() {
    let (m, c, p, basis) = setup(8);
    let a = config_state(&c, &p, &basis.configs[0]).unwrap();
    let b = config_state(&c, &p, &basis.configs[2]).unwrap();
    let key = ElementKey { hamiltonian: true, row: 0, col: 2, term: 0 };
    let exact = measure_hamiltonian_element(&a, &b, &m.terms, &ShotPlan::exact(), key).unwrap();
    let rms = |shots: u64| {
        let mut s = 0.0;
        let reps = 40;
        for seed in 0..reps {
            let plan = ShotPlan { shots_per_element: Some(shots), seed, ..Default::default() };
            s += (measure_hamiltonian_element(&a, &b, &m.terms, &plan, key).unwrap() - exact).norm_sqr();
        }
        (s / reps as f64).sqrt()
    };
    let e4 = rms(10_000);
    let e6 = rms(1_000_000);
    let e8 = rms(100_000_000);
    // each factor of 100 in shots should cut the error by about 10
    for ratio in [e4 / e6, e6 / e8] {
        assert!((5.0..20.0).contains(&ratio), "{e4} {e6} {e8}");
    }
}
