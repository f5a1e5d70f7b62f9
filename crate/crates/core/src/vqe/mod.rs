//! Ground-state optimization of circuit parameters.

pub mod lbfgs;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::statevec::{inner_slices, CompiledPauliSum, PauliString};
use lbfgs::{minimize, LbfgsSettings};

pub fn energy(circuit: &Circuit, params: &[f64], terms: &[PauliString]) -> Result<f64> {
    let state = circuit.run(params, None, None)?;
    state.expect_pauli_sum(terms)
}

pub fn gradient(circuit: &Circuit, params: &[f64], terms: &[PauliString]) -> Result<Vec<f64>> {
    let op = CompiledPauliSum::new(circuit.num_qubits(), terms)?;
    Ok(energy_and_gradient(circuit, &op, params)?.1)
}

/// Energy and its exact gradient from one forward pass and one reverse
/// sweep: dE/dtheta = Im <lambda|G|psi> at each gate, accumulated over
/// gates sharing a parameter.
pub fn energy_and_gradient(circuit: &Circuit, op: &CompiledPauliSum, params: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut psi = circuit.run(params, None, None)?.into_amplitudes();
    let mut lambda = vec![C64::new(0.0, 0.0); psi.len()];
    op.apply_into(&psi, &mut lambda);
    let e = inner_slices(&psi, &lambda).re;
    let mut grad = vec![0.0; params.len()];
    for layer in circuit.layers().iter().rev() {
        if let Some(el) = layer.generator_elements(&lambda, &psi) {
            for (gate, e) in layer.gates.iter().zip(el) {
                grad[gate.param] += e.im;
            }
            layer.apply(params, &mut psi, -1.0);
            layer.apply(params, &mut lambda, -1.0);
            continue;
        }
        for gate in layer.gates.iter().rev() {
            grad[gate.param] += gate.generator.matrix_element(&lambda, &psi).im;
            gate.generator.apply_exp(&mut psi, -params[gate.param]);
            gate.generator.apply_exp(&mut lambda, -params[gate.param]);
        }
    }
    Ok((e, grad))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VqeSettings {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub energy_tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Half-width of the uniform random initialization.
    pub init_scale: f64,
    /// Time step of the adiabatic-ramp initialization (restart 0).
    pub ramp_dt: f64,
    /// Coupling of the driver terms in the ramp (the transverse field).
    pub ramp_driver: f64,
    pub lbfgs_memory: usize,
}

impl Default for VqeSettings {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            gradient_tolerance: 1e-9,
            energy_tolerance: 1e-13,
            restarts: 8,
            seed: 0,
            init_scale: 0.1,
            ramp_dt: 0.4,
            ramp_driver: 1.0,
            lbfgs_memory: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub initial_energy: f64,
    pub final_energy: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub final_params: Vec<f64>,
    pub final_energy: f64,
    pub energy_error: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    pub best_restart: usize,
    pub restarts: Vec<Option<RestartSummary>>,
}

/// Initial angles of restart `index`: the adiabatic ramp for index 0,
/// uniform random angles otherwise.
pub fn initial_params(circuit: &Circuit, settings: &VqeSettings, index: usize) -> Vec<f64> {
    if index == 0 {
        return circuit.ramp_params(settings.ramp_dt, settings.ramp_driver);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    rng.set_stream(index as u64);
    (0..circuit.num_params()).map(|_| rng.random_range(-settings.init_scale..=settings.init_scale)).collect()
}

/// Minimizes the energy from `restarts` initializations and keeps the best.
/// `reference` (an exact ground energy) fills `energy_error`.
pub fn optimize(
    circuit: &Circuit,
    terms: &[PauliString],
    settings: &VqeSettings,
    reference: Option<f64>,
) -> Result<OptimizationReport> {
    if settings.restarts == 0 {
        return Err(Error::InvalidCircuit("at least one restart is required".into()));
    }
    let op = CompiledPauliSum::new(circuit.num_qubits(), terms)?;
    let lb = LbfgsSettings {
        memory: settings.lbfgs_memory,
        max_iterations: settings.max_iterations,
        gradient_tolerance: settings.gradient_tolerance,
        energy_tolerance: settings.energy_tolerance,
        window: 5,
    };
    let mut best: Option<(usize, lbfgs::LbfgsResult)> = None;
    let mut summaries = Vec::new();
    for r in 0..settings.restarts {
        let x0 = initial_params(circuit, settings, r);
        let mut failed = false;
        let obj = |x: &[f64]| match energy_and_gradient(circuit, &op, x) {
            Ok(v) => v,
            Err(_) => {
                failed = true;
                (f64::NAN, vec![f64::NAN; x.len()])
            }
        };
        let initial_energy = energy_and_gradient(circuit, &op, &x0)?.0;
        let res = minimize(obj, &x0, &lb);
        if failed || !res.f.is_finite() {
            log::warn!("restart {r} diverged; skipped");
            summaries.push(None);
            continue;
        }
        log::info!("restart {r}: E = {:.14} after {} iterations ({:?})", res.f, res.iterations, res.reason);
        summaries.push(Some(RestartSummary {
            initial_energy,
            final_energy: res.f,
            iterations: res.iterations,
            converged: res.converged(),
        }));
        if best.as_ref().is_none_or(|(_, b)| res.f < b.f) {
            best = Some((r, res));
        }
    }
    let (index, res) = best.ok_or_else(|| Error::InvalidCircuit("every restart diverged".into()))?;
    let final_energy = energy(circuit, &res.x, terms)?;
    Ok(OptimizationReport {
        energy_error: reference.map(|e| final_energy - e),
        iterations: res.iterations,
        converged: res.converged(),
        restarts_used: settings.restarts,
        best_restart: index,
        final_params: res.x,
        final_energy,
        restarts: summaries,
    })
}
