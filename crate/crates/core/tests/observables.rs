use qcex::circuits::build_hva_heisenberg_chain;
use qcex::models::{build_model, ModelKind};
use qcex::observables::{broaden, dsf, DsfSettings};
use qcex::oracles::ed_dsf;
use qcex::tangent::{assemble, enumerate_basis, label_levels, solve, Alphabet, BasisMode, BasisOptions, LabelOptions};
use qcex::vqe::{optimize, VqeSettings};

struct Run {
    grid: qcex::observables::DsfGrid,
    spectrum: qcex::tangent::LabeledSpectrum,
    exact: qcex::observables::DsfGrid,
}

fn heisenberg_dsf(n: usize, depth: usize) -> Run {
    let m = build_model(ModelKind::HeisenbergChain, &[n], None).unwrap();
    let c = build_hva_heisenberg_chain(n, depth).unwrap();
    let report = optimize(&c, &m.terms, &VqeSettings { restarts: 2, ..Default::default() }, None).unwrap();
    let p = report.final_params;
    let opts = BasisOptions {
        mode: BasisMode::RealSpace,
        alphabet: Alphabet::Ladder,
        delta_sz: Some(vec![0]),
        ..Default::default()
    };
    let basis = enumerate_basis(&c, &m.lattice, &opts).unwrap();
    let probs = assemble(&c, &m.lattice, &p, &basis, &m.terms).unwrap();
    let sols: Vec<_> = probs.iter().map(|q| solve(q, 1e-10).unwrap()).collect();
    let lopts = LabelOptions { spin: true, ..Default::default() };
    let spectrum = label_levels(&c, &m.lattice, &p, &basis, &probs, &sols, &lopts).unwrap();
    let settings = DsfSettings::default();
    let grid = dsf(&c, &m.lattice, &p, &basis, &probs, &spectrum, report.final_energy, &settings).unwrap();
    let exact = ed_dsf(&m.lattice, &m.terms, n / 2, &settings).unwrap();
    Run { grid, spectrum, exact }
}

#[test]
fn heisenberg_dsf_properties() {
    let run = heisenberg_dsf(8, 8);
    let g = &run.grid;
    assert!(g.column(0).unwrap().iter().all(|v| *v < 1e-8));
    for (w, b) in g.total_weight().iter().zip(&g.sum_rule_bound) {
        assert!(*w <= b + 1e-8, "{w} > {b}");
    }
    // the default grid stops at 4; rebroaden the same peaks over the whole band
    let wide = DsfSettings { omega_max: 24.0, ..Default::default() };
    let full = broaden(g.num_sites, g.peaks.clone(), g.sum_rule_bound.clone(), g.ground_energy, &wide).unwrap();
    for (col, total) in full.integrated().iter().zip(full.total_weight()) {
        assert!((col - total).abs() <= 5e-3 * total.max(1e-12), "{col} vs {total}");
    }
    assert!(g.values.iter().flatten().all(|v| *v >= 0.0));
    // the subspace weight at K = pi nearly exhausts the exact weight
    let k = 4;
    let wv: f64 = g.total_weight()[k];
    let we: f64 = run.exact.total_weight()[k];
    assert!(wv > 0.9 * we, "{wv} vs {we}");
}

#[test]
fn only_triplets_carry_weight() {
    let run = heisenberg_dsf(8, 8);
    let s1: Vec<f64> = run
        .spectrum
        .levels
        .iter()
        .filter(|l| l.total_spin == Some(1.0))
        .map(|l| l.energy - run.grid.ground_energy)
        .collect();
    for p in &run.grid.peaks {
        if p.weight > 1e-8 {
            assert!(s1.iter().any(|w| (w - p.omega).abs() < 1e-9), "{p:?}");
        }
    }
}

#[test]
fn exact_column_matches_at_pi() {
    let run = heisenberg_dsf(8, 8);
    let a = run.grid.column(4).unwrap();
    let b = run.exact.column(4).unwrap();
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    assert!(diff / norm < 0.1, "{}", diff / norm);
}
