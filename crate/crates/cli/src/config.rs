//! Run configuration (TOML) and its validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qcex::circuits::{build_hva_heisenberg_chain, build_hva_kagome, build_hva_tfi_1d, build_hva_tfi_2d, Circuit, InitialState};
use qcex::hadamard::ShotBudget;
use qcex::models::{build_model, Model, ModelKind};
use qcex::observables::DsfSettings;
use qcex::tangent::{enumerate_basis, Alphabet, BasisMode, BasisOptions, ExcitationBasis, ParityFilter};
use qcex::vqe::VqeSettings;

/// A validation failure with the offending field path.
#[derive(Debug, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl ToString) -> Self {
        ConfigError { path: path.into(), message: message.to_string() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelBlock,
    #[serde(default)]
    pub circuit: CircuitBlock,
    #[serde(default)]
    pub vqe: VqeBlock,
    pub excitation: Option<ExcitationBlock>,
    #[serde(default)]
    pub oracle: OracleBlock,
    pub observables: Option<ObservablesBlock>,
    pub hadamard: Option<HadamardBlock>,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub kind: ModelKind,
    /// [N] for chains, [Lx, Ly] otherwise.
    pub sizes: Vec<usize>,
    pub g: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builder {
    HvaTfi1d,
    HvaTfi2d,
    HvaHeisenbergChain,
    HvaKagome,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    PlusAll,
    GhzOdd,
    DimerCovering,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitBlock {
    /// Defaults to the builder of the model.
    pub builder: Option<Builder>,
    /// Heisenberg chain: number of single layers (default 2N).
    /// Kagome: number of four-layer cycles (default 16).
    pub depth: Option<usize>,
    pub initial_state: Option<InitialKind>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqeBlock {
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    pub max_iterations: Option<usize>,
    pub gradient_tolerance: Option<f64>,
    pub energy_tolerance: Option<f64>,
    pub init_scale: Option<f64>,
    pub ramp_dt: Option<f64>,
    pub lbfgs_memory: Option<usize>,
    /// Reuse these angles instead of optimizing.
    pub checkpoint: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExcitationBlock {
    pub width: usize,
    pub mode: Option<BasisMode>,
    pub alphabet: Option<Alphabet>,
    pub parity_filter: Option<ParityFilter>,
    pub delta_sz: Option<Vec<i32>>,
    pub slot_window: Option<usize>,
    pub tau: f64,
    pub momenta: Option<Vec<Vec<usize>>>,
    /// Measure total spin on every level.
    pub spin_labels: bool,
    /// Levels kept (and labeled) per sector.
    pub max_levels: Option<usize>,
}

impl Default for ExcitationBlock {
    fn default() -> Self {
        Self {
            width: 1,
            mode: None,
            alphabet: None,
            parity_filter: None,
            delta_sz: None,
            slot_window: None,
            tau: 1e-10,
            momenta: None,
            spin_labels: false,
            max_levels: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    None,
    Fermion,
    Ed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleBlock {
    pub kind: OracleKind,
    /// Energy window for level matching.
    pub tolerance: f64,
    /// Fermion oracle: at most this many quasiparticles.
    pub max_quasiparticles: Option<usize>,
    /// ED: lowest levels per sector.
    pub levels_per_sector: Option<usize>,
}

impl Default for OracleBlock {
    fn default() -> Self {
        Self { kind: OracleKind::None, tolerance: 1e-6, max_quasiparticles: None, levels_per_sector: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservablesBlock {
    pub dsf: bool,
    pub sigma: f64,
    pub omega_max: f64,
    pub omega_step: f64,
    pub momenta: Option<Vec<usize>>,
}

impl Default for ObservablesBlock {
    fn default() -> Self {
        let d = DsfSettings::default();
        Self { dsf: true, sigma: d.sigma, omega_max: d.omega_max, omega_step: d.omega_step, momenta: None }
    }
}

impl ObservablesBlock {
    pub fn settings(&self) -> DsfSettings {
        DsfSettings { sigma: self.sigma, omega_max: self.omega_max, omega_step: self.omega_step, momenta: self.momenta.clone() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HadamardBlock {
    pub enabled: bool,
    /// Shots per element and part; `exact = true` skips sampling.
    pub shots: u64,
    pub exact: bool,
    pub seed: u64,
    pub tau: f64,
    pub budget: ShotBudget,
}

impl Default for HadamardBlock {
    fn default() -> Self {
        Self { enabled: true, shots: 1_000_000, exact: false, seed: 0, tau: 1e-2, budget: ShotBudget::PerTerm }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    SubspaceBinary,
    SubspaceJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { directory: PathBuf::from("qcex-out"), formats: vec![Format::Csv, Format::Json] }
    }
}

impl OutputBlock {
    pub fn has(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// Everything built from a validated config.
pub struct Prepared {
    pub config: RunConfig,
    /// Directory relative paths are resolved against.
    pub base: PathBuf,
    pub model: Model,
    pub circuit: Circuit,
    pub circuit_tag: String,
    pub vqe: VqeSettings,
    pub basis: Option<ExcitationBasis>,
    pub basis_options: Option<BasisOptions>,
}

impl Prepared {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output.directory)
    }
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let path = e.span().map_or_else(|| "config".to_string(), |s| format!("config[{}..{}]", s.start, s.end));
        ConfigError::new(path, msg)
    })
}

fn finite(path: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(path, format!("must be finite, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<(), ConfigError> {
    finite(path, v)?;
    if v < 0.0 {
        return Err(ConfigError::new(path, format!("must be >= 0, got {v}")));
    }
    Ok(())
}

fn default_builder(kind: ModelKind) -> Builder {
    match kind {
        ModelKind::TfiChain => Builder::HvaTfi1d,
        ModelKind::TfiSquare => Builder::HvaTfi2d,
        ModelKind::HeisenbergChain => Builder::HvaHeisenbergChain,
        ModelKind::HeisenbergKagome => Builder::HvaKagome,
    }
}

/// Checks the config and builds model, circuit and basis. No optimization
/// or assembly happens here.
pub fn prepare(config: RunConfig, base: &Path) -> Result<Prepared, ConfigError> {
    let c = &config;
    let kind = c.model.kind;
    let expected = if matches!(kind, ModelKind::TfiChain | ModelKind::HeisenbergChain) { 1 } else { 2 };
    if c.model.sizes.len() != expected {
        return Err(ConfigError::new("model.sizes", format!("{kind:?} takes {expected} size(s), got {:?}", c.model.sizes)));
    }
    if c.model.sizes.iter().product::<usize>() > 24 || c.model.sizes.iter().any(|&s| s == 0) {
        return Err(ConfigError::new("model.sizes", "between 1 and 24 sites are supported"));
    }
    match (kind.is_tfi(), c.model.g) {
        (true, None) => return Err(ConfigError::new("model.g", "required for Ising models")),
        (true, Some(g)) => finite("model.g", g)?,
        (false, Some(_)) => return Err(ConfigError::new("model.g", "only Ising models take a field")),
        (false, None) => {}
    }
    let model = build_model(kind, &c.model.sizes, c.model.g).map_err(|e| ConfigError::new("model", e))?;
    let n = model.num_sites();

    let builder = c.circuit.builder.unwrap_or(default_builder(kind));
    if builder != default_builder(kind) {
        return Err(ConfigError::new("circuit.builder", format!("{builder:?} does not build circuits for {kind:?}")));
    }
    let initial = c.circuit.initial_state;
    match (builder, initial) {
        (Builder::HvaTfi1d | Builder::HvaTfi2d, Some(InitialKind::DimerCovering)) => {
            return Err(ConfigError::new("circuit.initial_state", "dimer_covering needs a Heisenberg builder"))
        }
        (Builder::HvaHeisenbergChain | Builder::HvaKagome, Some(InitialKind::PlusAll | InitialKind::GhzOdd)) => {
            return Err(ConfigError::new("circuit.initial_state", "plus_all and ghz_odd need an Ising builder"))
        }
        _ => {}
    }
    if c.circuit.depth.is_some() && matches!(builder, Builder::HvaTfi1d | Builder::HvaTfi2d) {
        return Err(ConfigError::new("circuit.depth", "Ising builders have a fixed depth"));
    }
    if c.circuit.depth == Some(0) {
        return Err(ConfigError::new("circuit.depth", "must be positive"));
    }
    let circuit = match builder {
        Builder::HvaTfi1d => build_hva_tfi_1d(n),
        Builder::HvaTfi2d => build_hva_tfi_2d(&model.lattice),
        Builder::HvaHeisenbergChain => build_hva_heisenberg_chain(n, c.circuit.depth.unwrap_or(2 * n)),
        Builder::HvaKagome => build_hva_kagome(&model.lattice, None, c.circuit.depth.unwrap_or(16)),
    }
    .map_err(|e| ConfigError::new("circuit", e))?;
    let circuit = match initial {
        Some(InitialKind::GhzOdd) => circuit.with_initial_state(InitialState::GhzOdd).map_err(|e| ConfigError::new("circuit.initial_state", e))?,
        _ => circuit,
    };
    let circuit_tag = format!(
        "{:?} sizes={:?} depth={} initial={:?}",
        builder,
        c.model.sizes,
        circuit.depth(),
        initial.unwrap_or(if kind.is_tfi() { InitialKind::PlusAll } else { InitialKind::DimerCovering })
    );

    let mut vqe = VqeSettings::default();
    let v = &c.vqe;
    if let Some(x) = v.restarts {
        if x == 0 {
            return Err(ConfigError::new("vqe.restarts", "must be positive"));
        }
        vqe.restarts = x;
    }
    if let Some(x) = v.seed {
        vqe.seed = x;
    }
    if let Some(x) = v.max_iterations {
        vqe.max_iterations = x;
    }
    for (path, src, dst) in [
        ("vqe.gradient_tolerance", v.gradient_tolerance, &mut vqe.gradient_tolerance),
        ("vqe.energy_tolerance", v.energy_tolerance, &mut vqe.energy_tolerance),
        ("vqe.init_scale", v.init_scale, &mut vqe.init_scale),
        ("vqe.ramp_dt", v.ramp_dt, &mut vqe.ramp_dt),
    ] {
        if let Some(x) = src {
            non_negative(path, x)?;
            *dst = x;
        }
    }
    if let Some(x) = v.lbfgs_memory {
        if x == 0 {
            return Err(ConfigError::new("vqe.lbfgs_memory", "must be positive"));
        }
        vqe.lbfgs_memory = x;
    }
    let base = base.to_path_buf();
    if let Some(p) = &v.checkpoint {
        let full = if p.is_absolute() { p.clone() } else { base.join(p) };
        if !full.is_file() {
            return Err(ConfigError::new("vqe.checkpoint", format!("{} does not exist", full.display())));
        }
    }

    let (basis, basis_options) = match &c.excitation {
        None => (None, None),
        Some(e) => {
            non_negative("excitation.tau", e.tau)?;
            if e.tau >= 1.0 {
                return Err(ConfigError::new("excitation.tau", "must be below 1"));
            }
            let mode = e.mode.unwrap_or(if circuit.is_translation_covariant() { BasisMode::Momentum } else { BasisMode::RealSpace });
            if mode == BasisMode::Momentum && !circuit.is_translation_covariant() {
                return Err(ConfigError::new("excitation.mode", "momentum mode needs a translation-covariant circuit"));
            }
            let alphabet = e.alphabet.unwrap_or(if kind.is_tfi() { Alphabet::Pauli } else { Alphabet::Ladder });
            if e.parity_filter.is_some() && !kind.is_tfi() {
                return Err(ConfigError::new("excitation.parity_filter", "only Ising models have spin-flip parity"));
            }
            if let Some(ms) = &e.momenta {
                if mode != BasisMode::Momentum {
                    return Err(ConfigError::new("excitation.momenta", "sector selection needs momentum mode"));
                }
                let orders: Vec<usize> = model.lattice.translations.iter().map(|t| t.order).collect();
                for (i, m) in ms.iter().enumerate() {
                    if m.len() != orders.len() || m.iter().zip(&orders).any(|(a, b)| a >= b) {
                        return Err(ConfigError::new(format!("excitation.momenta[{i}]"), format!("{m:?} outside the momentum grid {orders:?}")));
                    }
                }
            }
            let opts = BasisOptions {
                width: e.width,
                mode,
                alphabet,
                parity_filter: e.parity_filter,
                delta_sz: e.delta_sz.clone(),
                slot_window: e.slot_window,
                momenta: e.momenta.clone(),
            };
            let basis = enumerate_basis(&circuit, &model.lattice, &opts).map_err(|err| ConfigError::new("excitation", err))?;
            (Some(basis), Some(opts))
        }
    };

    match c.oracle.kind {
        OracleKind::Fermion if kind != ModelKind::TfiChain => {
            return Err(ConfigError::new("oracle.kind", "the fermion oracle solves the Ising chain only"))
        }
        OracleKind::Ed if n > 16 => return Err(ConfigError::new("oracle.kind", "exact diagonalization is limited to 16 sites")),
        _ => {}
    }
    non_negative("oracle.tolerance", c.oracle.tolerance)?;

    if let Some(o) = &c.observables {
        if o.dsf {
            if model.lattice.translations.len() != 1 {
                return Err(ConfigError::new("observables.dsf", "the structure factor is implemented for chains"));
            }
            if basis.is_none() {
                return Err(ConfigError::new("observables.dsf", "needs an [excitation] block"));
            }
            o.settings().frequencies().map_err(|e| ConfigError::new("observables", e))?;
            if let Some(m) = o.momenta.as_ref().and_then(|ms| ms.iter().find(|&&m| m >= n)) {
                return Err(ConfigError::new("observables.momenta", format!("m = {m} outside 0..{n}")));
            }
        }
    }

    if let Some(h) = &c.hadamard {
        if h.enabled {
            if !kind.is_tfi() || !circuit.is_translation_covariant() {
                return Err(ConfigError::new("hadamard", "the Hadamard-test mode needs an Ising model with a covariant circuit"));
            }
            match &basis_options {
                Some(o) if o.mode == BasisMode::Momentum && o.alphabet == Alphabet::Pauli => {}
                _ => return Err(ConfigError::new("hadamard", "needs an [excitation] block in momentum mode with the Pauli alphabet")),
            }
            if h.shots == 0 && !h.exact {
                return Err(ConfigError::new("hadamard.shots", "must be positive"));
            }
            non_negative("hadamard.tau", h.tau)?;
        }
    }
    if c.output.formats.is_empty() {
        return Err(ConfigError::new("output.formats", "at least one format is needed"));
    }

    Ok(Prepared { config, base, model, circuit, circuit_tag, vqe, basis, basis_options })
}

/// Reads, parses and validates a config file.
pub fn load(path: &Path) -> Result<(Prepared, Vec<u8>), ConfigError> {
    let bytes = std::fs::read(path).map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| ConfigError::new("config", e))?;
    let config = parse(text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((prepare(config, &base)?, bytes))
}
