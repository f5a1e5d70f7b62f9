//! optimize -> excite -> solve -> label -> oracle / DSF / noisy mode.

use std::time::Instant;

use serde::Serialize;

use qcex::compare::compare_spectra;
use qcex::hadamard::{noisy_spectrum, ShotPlan};
use qcex::io::{rows_from_ed, rows_from_fermion, rows_from_spectrum, write_spectrum_csv, Checkpoint, SpectrumRow, SubspaceContainer};
use qcex::models::ModelKind;
use qcex::observables::dsf;
use qcex::oracles::{ed_sector_spectrum, tfi_fermion_spectrum, EdOptions};
use qcex::symmetry::{SectorLabel, SymmetrySpec};
use qcex::tangent::{assemble, label_levels, solve, LabelOptions, LabeledSpectrum};
use qcex::vqe::{energy, optimize};
use qcex::{Error, Result};

use crate::config::{Format, OracleKind, Prepared};
use crate::manifest::{sha256_hex, Manifest, Outputs, Timing};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Run,
    Oracle,
}

fn json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| Error::Format(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

fn csv_bytes(rows: &[SpectrumRow]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_spectrum_csv(rows, &mut buf)?;
    Ok(buf)
}

struct Clock {
    start: Instant,
    timings: Vec<Timing>,
}

impl Clock {
    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings.push(Timing { stage: stage.into(), seconds: (now - self.start).as_secs_f64() });
        log::info!("{stage} done in {:.2} s", (now - self.start).as_secs_f64());
        self.start = now;
    }
}

/// Reference levels for the sectors of a model.
pub fn oracle_rows(prep: &Prepared) -> Result<Vec<SpectrumRow>> {
    let m = &prep.model;
    let o = &prep.config.oracle;
    match o.kind {
        OracleKind::None => Ok(Vec::new()),
        OracleKind::Fermion => {
            let mut levels = tfi_fermion_spectrum(m.num_sites(), m.field(), 1, o.max_quasiparticles)?;
            levels.extend(tfi_fermion_spectrum(m.num_sites(), m.field(), -1, o.max_quasiparticles)?);
            Ok(rows_from_fermion(&levels))
        }
        OracleKind::Ed => {
            let n = m.num_sites();
            let options = EdOptions { labels: None, levels_per_sector: o.levels_per_sector, vectors: false };
            if m.kind.is_tfi() {
                let spec = SymmetrySpec { translations: true, parity: true, popcount: None };
                Ok(rows_from_ed(&ed_sector_spectrum(&m.lattice, &m.terms, &spec, &options)?, None))
            } else {
                let reference = n / 2;
                let shifts = prep.basis_options.as_ref().and_then(|b| b.delta_sz.clone()).unwrap_or_else(|| vec![0]);
                let mut rows = Vec::new();
                for d in shifts {
                    let p = reference as i64 - d as i64;
                    if p < 0 || p > n as i64 {
                        continue;
                    }
                    let spec = SymmetrySpec { translations: m.kind == ModelKind::HeisenbergChain, parity: false, popcount: Some(p as usize) };
                    rows.extend(rows_from_ed(&ed_sector_spectrum(&m.lattice, &m.terms, &spec, &options)?, Some(reference)));
                }
                Ok(rows)
            }
        }
    }
}

#[derive(Serialize)]
struct ComparisonSummary<'a> {
    tolerance: f64,
    matched: usize,
    unmatched_reference: usize,
    unmatched_candidate: usize,
    partial_multiplets: usize,
    max_error: f64,
    mean_first_excitation_error: Option<f64>,
    candidates_without_labels: usize,
    missing_sectors: &'a [qcex::compare::SectorKey],
}

#[derive(Serialize)]
struct NoisySector {
    label: SectorLabel,
    lowest_sampled: Option<f64>,
    lowest_exact_matrices: Option<f64>,
    norm_rank: Option<usize>,
    norm_eigenvalues: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct HadamardSummary {
    /// Relative cutoff on the sampled norm spectrum.
    tau: f64,
    shots_per_element: Option<u64>,
    seed: u64,
    budget: qcex::hadamard::ShotBudget,
    sectors: Vec<NoisySector>,
    empty_sectors: Vec<qcex::hadamard::EmptySector>,
}

pub fn execute(prep: &Prepared, config_bytes: &[u8], command: Command, threads: Option<usize>) -> Result<Manifest> {
    let cfg = &prep.config;
    let mut out = Outputs::new(&prep.output_dir())?;
    let mut clock = Clock { start: Instant::now(), timings: Vec::new() };
    let m = &prep.model;
    let mut reused = false;

    if command == Command::Oracle {
        let rows = oracle_rows(prep)?;
        if rows.is_empty() {
            return Err(Error::Unsupported("oracle.kind is none".into()));
        }
        out.write("oracle.csv", &csv_bytes(&rows)?)?;
        clock.lap("oracle");
    } else {
        // ground state
        let params = match &cfg.vqe.checkpoint {
            Some(p) => {
                let text = std::fs::read_to_string(prep.resolve(p))?;
                let ck = Checkpoint::from_json(&text)?;
                ck.check(&prep.circuit_tag, m.num_sites(), prep.circuit.num_params())?;
                reused = true;
                ck.params
            }
            None => {
                let report = optimize(&prep.circuit, &m.terms, &prep.vqe, None)?;
                if cfg.output.has(Format::Json) {
                    out.write("vqe.json", &json(&report)?)?;
                }
                report.final_params
            }
        };
        let e0 = energy(&prep.circuit, &params, &m.terms)?;
        let ck = Checkpoint::new(prep.circuit_tag.clone(), m.num_sites(), params.clone(), e0);
        out.write("params.json", ck.to_json()?.as_bytes())?;
        clock.lap("vqe");

        if let (Some(basis), Some(ex)) = (&prep.basis, &cfg.excitation) {
            let problems = assemble(&prep.circuit, &m.lattice, &params, basis, &m.terms)?;
            let solutions = problems.iter().map(|p| solve(p, ex.tau)).collect::<Result<Vec<_>>>()?;
            clock.lap("assemble");
            let options = LabelOptions { spin: ex.spin_labels, max_levels: ex.max_levels, ..Default::default() };
            let spectrum: LabeledSpectrum = label_levels(&prep.circuit, &m.lattice, &params, basis, &problems, &solutions, &options)?;
            clock.lap("label");
            let rows = rows_from_spectrum(&spectrum);
            if cfg.output.has(Format::Csv) {
                out.write("spectrum.csv", &csv_bytes(&rows)?)?;
            }
            if cfg.output.has(Format::Json) {
                out.write("spectrum.json", &json(&spectrum)?)?;
            }
            for (i, p) in problems.iter().enumerate() {
                let c = SubspaceContainer::from_problem(p, Some(ex.tau));
                if cfg.output.has(Format::SubspaceBinary) {
                    out.write(&format!("subspace/sector_{i:03}.qcexsub"), &c.encode_binary()?)?;
                }
                if cfg.output.has(Format::SubspaceJson) {
                    out.write(&format!("subspace/sector_{i:03}.json"), c.to_json()?.as_bytes())?;
                }
            }

            if cfg.oracle.kind != OracleKind::None {
                let reference = oracle_rows(prep)?;
                out.write("oracle.csv", &csv_bytes(&reference)?)?;
                let keys: std::collections::BTreeSet<_> = reference.iter().map(SpectrumRow::sector_key).collect();
                let (labeled, skipped): (Vec<SpectrumRow>, Vec<SpectrumRow>) = rows.iter().cloned().partition(|r| keys.contains(&r.sector_key()));
                let report = compare_spectra(&reference, &labeled, cfg.oracle.tolerance)?;
                let mut buf = Vec::new();
                report.write_csv(&mut buf)?;
                out.write("comparison.csv", &buf)?;
                let summary = ComparisonSummary {
                    tolerance: report.tolerance,
                    matched: report.matched,
                    unmatched_reference: report.unmatched_reference,
                    unmatched_candidate: report.unmatched_candidate,
                    partial_multiplets: report.partial_multiplets,
                    max_error: report.max_error,
                    mean_first_excitation_error: report.mean_first_excitation_error,
                    candidates_without_labels: skipped.len(),
                    missing_sectors: &report.missing_sectors,
                };
                out.write("comparison.json", &json(&summary)?)?;
                clock.lap("oracle");
            }

            if let Some(o) = cfg.observables.as_ref().filter(|o| o.dsf) {
                let grid = dsf(&prep.circuit, &m.lattice, &params, basis, &problems, &spectrum, e0, &o.settings())?;
                let mut buf = Vec::new();
                grid.write_csv(&mut buf)?;
                out.write("dsf.csv", &buf)?;
                out.write("dsf.json", &json(&grid)?)?;
                clock.lap("dsf");
            }

            if let Some(h) = cfg.hadamard.as_ref().filter(|h| h.enabled) {
                let plan = if h.exact {
                    ShotPlan { seed: h.seed, budget: h.budget, ..ShotPlan::exact() }
                } else {
                    ShotPlan { shots_per_element: Some(h.shots), seed: h.seed, budget: h.budget }
                };
                let run = noisy_spectrum(&prep.circuit, &m.lattice, &params, basis, &m.terms, &plan, h.tau, ex.momenta.as_deref())?;
                out.write("noisy_spectrum.csv", &csv_bytes(&rows_from_spectrum(&run.spectrum))?)?;
                let mut sectors = Vec::new();
                for (i, (p, s)) in run.problems.iter().zip(&run.solutions).enumerate() {
                    let exact = solve_noisy_exact(p)?;
                    sectors.push(NoisySector {
                        label: p.sampled.label.clone(),
                        lowest_sampled: s.as_ref().and_then(|s| s.energies.first().copied()),
                        lowest_exact_matrices: exact,
                        norm_rank: s.as_ref().map(|s| s.norm_rank),
                        norm_eigenvalues: s.as_ref().map(|s| s.norm_eigenvalues.clone()),
                    });
                    let c = SubspaceContainer::from_noisy(p);
                    if cfg.output.has(Format::SubspaceBinary) {
                        out.write(&format!("noisy/sector_{i:03}.qcexsub"), &c.encode_binary()?)?;
                    }
                    if cfg.output.has(Format::SubspaceJson) {
                        out.write(&format!("noisy/sector_{i:03}.json"), c.to_json()?.as_bytes())?;
                    }
                }
                log::info!("hadamard mode: norm-matrix threshold tau = {:e} (relative)", h.tau);
                let summary = HadamardSummary {
                    tau: h.tau,
                    shots_per_element: plan.shots_per_element,
                    seed: plan.seed,
                    budget: plan.budget,
                    sectors,
                    empty_sectors: run.empty.clone(),
                };
                out.write("hadamard.json", &json(&summary)?)?;
                clock.lap("hadamard");
            }
        }
    }

    let manifest = Manifest {
        tool: "qcex".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        core_version: qcex::VERSION.into(),
        command: match command {
            Command::Run => "run".into(),
            Command::Oracle => "oracle".into(),
        },
        config_sha256: sha256_hex(config_bytes),
        config: serde_json::to_value(cfg).map_err(|e| Error::Format(e.to_string()))?,
        vqe_seed: prep.vqe.seed,
        hadamard_seed: cfg.hadamard.as_ref().filter(|h| h.enabled).map(|h| h.seed),
        checkpoint_reused: reused,
        threads,
        timings: clock.timings,
        files: out.files.clone(),
    };
    std::fs::write(out.dir().join("manifest.json"), json(&manifest)?)?;
    Ok(manifest)
}

/// Lowest level of the exact matrices solved the same way as the sampled ones.
fn solve_noisy_exact(p: &qcex::hadamard::NoisyProblem) -> Result<Option<f64>> {
    match qcex::tangent::solve_with(&p.exact, p.tau, qcex::tangent::NormScaling::Raw) {
        Ok(s) => Ok(s.energies.first().copied()),
        Err(Error::EmptySubspace(_)) => Ok(None),
        Err(e) => Err(e),
    }
}
