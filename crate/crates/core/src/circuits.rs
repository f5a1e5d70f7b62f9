//! Layered parametrized circuits with declared perturbation slots, and the
//! Hamiltonian-variational builders for every supported model.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{BondTag, Lattice, LatticeKind};
use crate::statevec::{self, LocalGate, Pauli, PauliString, SiteOp, StateVector};

/// Gate generator; every gate is exp(-i theta/2 * generator).
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    /// A Pauli string with real coefficient.
    Pauli(PauliString),
    /// X_a X_b + Y_a Y_b + Z_a Z_b
    Exchange(usize, usize),
}

impl Generator {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Generator::Pauli(p) => p.letters().iter().map(|&(q, _)| q).collect(),
            Generator::Exchange(a, b) => vec![*a, *b],
        }
    }

    pub(crate) fn apply_exp(&self, amps: &mut [C64], theta: f64) {
        match self {
            Generator::Pauli(p) => statevec::rotate(amps, p.masks(), theta * p.coeff.re),
            Generator::Exchange(a, b) => statevec::exchange(amps, *a, *b, theta),
        }
    }

    /// <bra| generator |ket>
    pub fn matrix_element(&self, bra: &[C64], ket: &[C64]) -> C64 {
        match self {
            Generator::Pauli(p) => pauli_element(p, bra, ket),
            Generator::Exchange(a, b) => [Pauli::X, Pauli::Y, Pauli::Z]
                .into_iter()
                .map(|s| pauli_element(&PauliString::pair(1.0, *a, s, *b, s).expect("distinct"), bra, ket))
                .sum(),
        }
    }

    pub fn pauli_terms(&self) -> Vec<PauliString> {
        match self {
            Generator::Pauli(p) => vec![p.clone()],
            Generator::Exchange(a, b) => [Pauli::X, Pauli::Y, Pauli::Z]
                .into_iter()
                .map(|s| PauliString::pair(1.0, *a, s, *b, s).expect("distinct"))
                .collect(),
        }
    }
}

fn pauli_element(p: &PauliString, bra: &[C64], ket: &[C64]) -> C64 {
    let m = p.masks();
    let ph = p.coeff * m.y_phase();
    let mut acc = C64::new(0.0, 0.0);
    for (x, k) in ket.iter().enumerate() {
        let v = bra[x ^ m.flip].conj() * k;
        if (x & m.sign).count_ones() & 1 == 1 {
            acc -= v;
        } else {
            acc += v;
        }
    }
    acc * ph
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub generator: Generator,
    pub param: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub gates: Vec<Gate>,
    pub shared_parameter: bool,
}

enum Shape {
    Diagonal,
    SingleQubit,
    Disjoint,
    General,
}

impl Layer {
    fn shape(&self) -> Shape {
        let paulis: Option<Vec<&PauliString>> = self
            .gates
            .iter()
            .map(|g| match &g.generator {
                Generator::Pauli(p) if p.coeff.im == 0.0 => Some(p),
                _ => None,
            })
            .collect();
        if let Some(ps) = &paulis {
            if ps.iter().all(|p| p.masks().flip == 0) {
                return Shape::Diagonal;
            }
        }
        let mut seen = 0usize;
        for g in &self.gates {
            for q in g.generator.qubits() {
                if seen & (1 << q) != 0 {
                    return Shape::General;
                }
                seen |= 1 << q;
            }
        }
        match paulis {
            Some(ps) if ps.iter().all(|p| p.letters().len() == 1) => Shape::SingleQubit,
            _ => Shape::Disjoint,
        }
    }

    fn one_qubit_matrices(&self, params: &[f64], sign: f64) -> Vec<(usize, statevec::Mat2)> {
        self.gates
            .iter()
            .map(|g| {
                let Generator::Pauli(p) = &g.generator else { unreachable!("single-qubit layer") };
                let (q, pauli) = p.letters()[0];
                let (s, c) = (0.5 * sign * params[g.param] * p.coeff.re).sin_cos();
                let pm = pauli.matrix();
                let mut m = [[C64::new(0.0, 0.0); 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        m[i][j] = C64::new(0.0, -s) * pm[i][j] + if i == j { C64::new(c, 0.0) } else { C64::new(0.0, 0.0) };
                    }
                }
                (q, m)
            })
            .collect()
    }

    /// Applies the layer (sign = 1) or its inverse (sign = -1).
    pub fn apply(&self, params: &[f64], amps: &mut [C64], sign: f64) {
        match self.shape() {
            Shape::Diagonal => {
                let first = &self.gates[0];
                let angle = |g: &Gate| match &g.generator {
                    Generator::Pauli(p) => params[g.param] * p.coeff.re,
                    Generator::Exchange(..) => unreachable!("diagonal layer"),
                };
                let a0 = angle(first);
                if self.gates.iter().all(|g| angle(g) == a0) {
                    let signs: Vec<usize> = self
                        .gates
                        .iter()
                        .map(|g| match &g.generator {
                            Generator::Pauli(p) => p.masks().sign,
                            Generator::Exchange(..) => unreachable!("diagonal layer"),
                        })
                        .collect();
                    statevec::diagonal_uniform(amps, &signs, sign * a0);
                    return;
                }
                self.apply_sequential(params, amps, sign);
            }
            Shape::SingleQubit => statevec::one_qubit_layer(amps, &self.one_qubit_matrices(params, sign)),
            Shape::Disjoint | Shape::General => self.apply_sequential(params, amps, sign),
        }
    }

    fn apply_sequential(&self, params: &[f64], amps: &mut [C64], sign: f64) {
        if sign > 0.0 {
            for g in &self.gates {
                g.generator.apply_exp(amps, params[g.param]);
            }
        } else {
            for g in self.gates.iter().rev() {
                g.generator.apply_exp(amps, -params[g.param]);
            }
        }
    }

    /// <bra| G_g |ket> for every gate generator when the gates commute, so
    /// that all of them can be evaluated at the layer output.
    pub fn generator_elements(&self, bra: &[C64], ket: &[C64]) -> Option<Vec<C64>> {
        match self.shape() {
            Shape::Diagonal => {
                let (signs, coeffs): (Vec<usize>, Vec<C64>) = self
                    .gates
                    .iter()
                    .map(|g| match &g.generator {
                        Generator::Pauli(p) => (p.masks().sign, p.coeff),
                        Generator::Exchange(..) => unreachable!("diagonal layer"),
                    })
                    .unzip();
                let el = statevec::diagonal_elements(bra, ket, &signs);
                Some(el.into_iter().zip(coeffs).map(|(e, c)| e * c).collect())
            }
            Shape::SingleQubit => {
                let ops: Vec<(usize, statevec::Mat2)> = self
                    .gates
                    .iter()
                    .map(|g| {
                        let Generator::Pauli(p) = &g.generator else { unreachable!("single-qubit layer") };
                        let (q, pauli) = p.letters()[0];
                        let mut m = pauli.matrix();
                        m.iter_mut().flatten().for_each(|v| *v *= p.coeff);
                        (q, m)
                    })
                    .collect();
                Some(statevec::one_qubit_elements(bra, ket, &ops))
            }
            Shape::Disjoint => Some(self.gates.iter().map(|g| g.generator.matrix_element(bra, ket)).collect()),
            Shape::General => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "bonds")]
pub enum InitialState {
    PlusAll,
    GhzOdd,
    DimerCovering(Vec<(usize, usize)>),
}

impl InitialState {
    pub fn prepare(&self, num_qubits: usize) -> Result<StateVector> {
        match self {
            InitialState::PlusAll => StateVector::plus_all(num_qubits),
            InitialState::GhzOdd => StateVector::ghz_odd(num_qubits),
            InitialState::DimerCovering(pairs) => StateVector::dimer_covering(num_qubits, pairs),
        }
    }

    /// Eigenvalue of prod X, when the state has one.
    pub fn parity(&self) -> Option<i32> {
        match self {
            InitialState::PlusAll => Some(1),
            InitialState::GhzOdd => Some(-1),
            InitialState::DimerCovering(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitFamily {
    TfiChain,
    TfiSquare,
    HeisenbergChain,
    Kagome,
}

/// Role of a parameter in the adiabatic-ramp initialization.
#[derive(Clone, Copy, Debug, PartialEq)]
enum RampRole {
    /// Part of the target Hamiltonian only, weight s.
    Problem,
    /// Part of the reference Hamiltonian only, weight 1 - s.
    Driver,
    /// Present throughout, weight 1.
    Static,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct RampEntry {
    s: f64,
    role: RampRole,
    coupling: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub family: CircuitFamily,
    num_qubits: usize,
    layers: Vec<Layer>,
    initial: InitialState,
    slots: Vec<usize>,
    num_params: usize,
    translation_covariant: bool,
    ramp: Vec<RampEntry>,
}

/// The perturbation placed at an insertion slot.
#[derive(Clone, Debug, PartialEq)]
pub enum InsertedOp {
    /// coeff * (ops[0] on sites[0]) (ops[1] on sites[1]) ...
    Product { sites: Vec<usize>, ops: Vec<SiteOp>, coeff: C64 },
    Gate(LocalGate),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Insertion {
    /// Index into the circuit's slot list.
    pub slot: usize,
    pub op: InsertedOp,
}

impl Circuit {
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn initial_state(&self) -> &InitialState {
        &self.initial
    }

    /// Slot positions, each the number of layers applied before the insertion.
    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn is_translation_covariant(&self) -> bool {
        self.translation_covariant
    }

    /// Replaces the reference state. Only the Ising families accept GHZ-odd.
    pub fn with_initial_state(mut self, initial: InitialState) -> Result<Self> {
        match (&initial, self.family) {
            (InitialState::DimerCovering(_), CircuitFamily::TfiChain | CircuitFamily::TfiSquare) => {
                return Err(Error::InvalidCircuit("dimer covering is not a valid Ising reference state".into()))
            }
            (InitialState::PlusAll | InitialState::GhzOdd, CircuitFamily::HeisenbergChain | CircuitFamily::Kagome) => {
                return Err(Error::InvalidCircuit("Heisenberg circuits start from a dimer covering".into()))
            }
            _ => {}
        }
        self.initial = initial;
        Ok(self)
    }

    /// Overrides the slot list. Positions must lie in 0..=depth.
    pub fn with_slots(mut self, slots: Vec<usize>) -> Result<Self> {
        if let Some(&p) = slots.iter().find(|&&p| p > self.depth()) {
            return Err(Error::InvalidCircuit(format!("slot position {p} beyond depth {}", self.depth())));
        }
        self.slots = slots;
        Ok(self)
    }

    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params {
            return Err(Error::ParameterCount { expected: self.num_params, found: params.len() });
        }
        Ok(())
    }

    pub fn apply_layer(&self, layer: usize, params: &[f64], amps: &mut [C64]) {
        self.layers[layer].apply(params, amps, 1.0);
    }

    pub fn apply_layer_inverse(&self, layer: usize, params: &[f64], amps: &mut [C64]) {
        self.layers[layer].apply(params, amps, -1.0);
    }

    /// Prepares U_D ... U_{p+1} G U_p ... U_1 |Psi_0>, truncated after
    /// `up_to_layer` layers when given.
    pub fn run(&self, params: &[f64], up_to_layer: Option<usize>, inserted: Option<&Insertion>) -> Result<StateVector> {
        self.check_params(params)?;
        let stop = up_to_layer.unwrap_or(self.depth());
        if stop > self.depth() {
            return Err(Error::InvalidCircuit(format!("up_to_layer {stop} beyond depth {}", self.depth())));
        }
        let insert_at = match inserted {
            Some(ins) => {
                let p = *self.slots.get(ins.slot).ok_or_else(|| {
                    Error::InvalidInsertion(format!("slot {} of {}", ins.slot, self.slots.len()))
                })?;
                self.check_insertion(&ins.op)?;
                Some((p, &ins.op))
            }
            None => None,
        };
        let mut state = self.initial.prepare(self.num_qubits)?;
        for layer in 0..=stop {
            if let Some((p, op)) = insert_at {
                if p == layer {
                    apply_inserted(op, &mut state)?;
                }
            }
            if layer < stop {
                self.apply_layer(layer, params, state.amplitudes_mut());
            }
        }
        Ok(state)
    }

    /// Applies layers `from..to` to `amps`.
    pub fn apply_layers(&self, params: &[f64], amps: &mut [C64], from: usize, to: usize) -> Result<()> {
        self.check_params(params)?;
        if from > to || to > self.depth() {
            return Err(Error::InvalidCircuit(format!("layer range {from}..{to} with depth {}", self.depth())));
        }
        for l in from..to {
            self.apply_layer(l, params, amps);
        }
        Ok(())
    }

    fn check_insertion(&self, op: &InsertedOp) -> Result<()> {
        let sites: &[usize] = match op {
            InsertedOp::Product { sites, ops, .. } => {
                if sites.len() != ops.len() || sites.is_empty() || sites.len() > 4 {
                    return Err(Error::InvalidInsertion(format!("{} sites with {} operators", sites.len(), ops.len())));
                }
                sites
            }
            InsertedOp::Gate(g) => g.support(),
        };
        for (i, &q) in sites.iter().enumerate() {
            if q >= self.num_qubits {
                return Err(Error::InvalidInsertion(format!("site {q} outside {} qubits", self.num_qubits)));
            }
            if sites[..i].contains(&q) {
                return Err(Error::InvalidInsertion(format!("site {q} repeated")));
            }
        }
        Ok(())
    }

    /// Angles of the adiabatic-ramp initialization: each gate angle follows
    /// a linear interpolation from the reference to the target Hamiltonian
    /// over the blocks, with time step `dt`. `driver_scale` multiplies the
    /// coupling of driver terms (the transverse field for Ising circuits).
    pub fn ramp_params(&self, dt: f64, driver_scale: f64) -> Vec<f64> {
        self.ramp
            .iter()
            .map(|r| {
                let (w, c) = match r.role {
                    RampRole::Problem => (r.s, r.coupling),
                    RampRole::Driver => (1.0 - r.s, r.coupling * driver_scale),
                    RampRole::Static => (1.0, r.coupling),
                };
                2.0 * dt * w * c
            })
            .collect()
    }
}

pub(crate) fn apply_inserted(op: &InsertedOp, state: &mut StateVector) -> Result<()> {
    match op {
        InsertedOp::Product { sites, ops, coeff } => {
            crate::statevec::apply_site_ops(state.amplitudes_mut(), sites, ops);
            if *coeff != C64::new(1.0, 0.0) {
                state.scale(*coeff);
            }
            Ok(())
        }
        InsertedOp::Gate(g) => g.apply_in_place(state),
    }
}

fn zz(a: usize, b: usize) -> Generator {
    Generator::Pauli(PauliString::pair(1.0, a, Pauli::Z, b, Pauli::Z).expect("distinct sites"))
}

fn x_layer(n: usize, param: usize) -> Layer {
    Layer {
        gates: (0..n).map(|i| Gate { generator: Generator::Pauli(PauliString::single(1.0, i, Pauli::X)), param }).collect(),
        shared_parameter: true,
    }
}

/// N/2 blocks of [ZZ on even bonds, ZZ on odd bonds, X on all sites]. The two
/// ZZ layers of block b share parameter 2b, the X layer uses 2b + 1. One slot
/// per block between the second ZZ layer and the X layer.
pub fn build_hva_tfi_1d(n: usize) -> Result<Circuit> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidCircuit(format!("1D Ising HVA needs even N >= 4, got {n}")));
    }
    let blocks = n / 2;
    let mut layers = Vec::new();
    let mut slots = Vec::new();
    let mut ramp = Vec::new();
    for b in 0..blocks {
        let (beta, gamma) = (2 * b, 2 * b + 1);
        for start in [0, 1] {
            let gates = (start..n).step_by(2).map(|i| Gate { generator: zz(i, (i + 1) % n), param: beta }).collect();
            layers.push(Layer { gates, shared_parameter: true });
        }
        slots.push(layers.len());
        layers.push(x_layer(n, gamma));
        let s = (b + 1) as f64 / (blocks + 1) as f64;
        ramp.push(RampEntry { s, role: RampRole::Problem, coupling: -1.0 });
        ramp.push(RampEntry { s, role: RampRole::Driver, coupling: -1.0 });
    }
    Ok(Circuit {
        family: CircuitFamily::TfiChain,
        num_qubits: n,
        layers,
        initial: InitialState::PlusAll,
        slots,
        num_params: 2 * blocks,
        translation_covariant: true,
        ramp,
    })
}

/// LxLy/2 blocks of [ZZ x-even, ZZ x-odd, ZZ y-even, ZZ y-odd, X], the four
/// ZZ layers sharing one angle. One slot per block before its X layer.
pub fn build_hva_tfi_2d(lattice: &Lattice) -> Result<Circuit> {
    let (lx, ly) = (lattice.lx, lattice.ly);
    if lattice.kind != LatticeKind::Square || lx % 2 != 0 || ly % 2 != 0 || lx < 4 || ly < 4 {
        return Err(Error::InvalidCircuit(format!("2D Ising HVA needs an even square lattice (>= 4), got {lx}x{ly}")));
    }
    let n = lx * ly;
    let blocks = n / 2;
    let colour = |tag: BondTag, parity: usize| -> Vec<(usize, usize)> {
        lattice
            .bonds
            .iter()
            .filter(|b| b.tag == tag)
            .filter(|b| {
                let c = lattice.coordinates[b.a];
                let coord = if tag == BondTag::X { c[0] } else { c[1] };
                coord as usize % 2 == parity
            })
            .map(|b| (b.a, b.b))
            .collect()
    };
    let colourings = [colour(BondTag::X, 0), colour(BondTag::X, 1), colour(BondTag::Y, 0), colour(BondTag::Y, 1)];
    let mut layers = Vec::new();
    let mut slots = Vec::new();
    let mut ramp = Vec::new();
    for b in 0..blocks {
        let (beta, gamma) = (2 * b, 2 * b + 1);
        for bonds in &colourings {
            let gates = bonds.iter().map(|&(a, c)| Gate { generator: zz(a, c), param: beta }).collect();
            layers.push(Layer { gates, shared_parameter: true });
        }
        slots.push(layers.len());
        layers.push(x_layer(n, gamma));
        let s = (b + 1) as f64 / (blocks + 1) as f64;
        ramp.push(RampEntry { s, role: RampRole::Problem, coupling: -1.0 });
        ramp.push(RampEntry { s, role: RampRole::Driver, coupling: -1.0 });
    }
    Ok(Circuit {
        family: CircuitFamily::TfiSquare,
        num_qubits: n,
        layers,
        initial: InitialState::PlusAll,
        slots,
        num_params: 2 * blocks,
        translation_covariant: true,
        ramp,
    })
}

/// `depth` single layers alternating between odd bonds (1,2),(3,4),... and
/// even bonds (0,1),(2,3),..., starting with the odd bonds since the dimer
/// reference already sits on the even ones. All angles independent; a slot
/// after every layer.
pub fn build_hva_heisenberg_chain(n: usize, depth: usize) -> Result<Circuit> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidCircuit(format!("Heisenberg chain HVA needs even N >= 4, got {n}")));
    }
    if depth == 0 {
        return Err(Error::InvalidCircuit("depth must be positive".into()));
    }
    let mut layers = Vec::new();
    let mut ramp = Vec::new();
    let mut p = 0;
    for l in 0..depth {
        let start = if l % 2 == 0 { 1 } else { 0 };
        let s = (l / 2 + 1) as f64 / (depth / 2 + 1) as f64;
        let gates = (start..n)
            .step_by(2)
            .map(|i| {
                let g = Gate { generator: Generator::Exchange(i, (i + 1) % n), param: p };
                ramp.push(RampEntry {
                    s,
                    role: if start == 1 { RampRole::Problem } else { RampRole::Static },
                    coupling: 1.0,
                });
                p += 1;
                g
            })
            .collect();
        layers.push(Layer { gates, shared_parameter: false });
    }
    let covering = (0..n).step_by(2).map(|i| (i, i + 1)).collect();
    Ok(Circuit {
        family: CircuitFamily::HeisenbergChain,
        num_qubits: n,
        layers,
        initial: InitialState::DimerCovering(covering),
        slots: (1..=depth).collect(),
        num_params: p,
        translation_covariant: false,
        ramp,
    })
}

/// Splits the bonds of a 4-regular lattice into four perfect matchings.
/// Bonds of `first` (a perfect matching, if given) are forced into the first
/// class; the rest is found by deterministic backtracking.
pub fn kagome_matchings(lattice: &Lattice, first: Option<&[(usize, usize)]>) -> Result<[Vec<(usize, usize)>; 4]> {
    let n = lattice.num_sites();
    let edges: Vec<(usize, usize)> = lattice.bonds.iter().map(|b| (b.a, b.b)).collect();
    let same = |e: (usize, usize), f: (usize, usize)| e == f || (e.1, e.0) == f;
    let mut colour = vec![usize::MAX; edges.len()];
    let mut used = vec![[false; 4]; n];
    if let Some(cov) = first {
        if !lattice.is_perfect_matching(cov) {
            return Err(Error::InvalidCircuit(format!("{cov:?} is not a perfect nearest-neighbour covering")));
        }
        for &c in cov {
            let i = edges.iter().position(|&e| same(e, c)).expect("checked above");
            colour[i] = 0;
            used[c.0][0] = true;
            used[c.1][0] = true;
        }
    }
    fn solve(i: usize, edges: &[(usize, usize)], colour: &mut [usize], used: &mut [[bool; 4]]) -> bool {
        if i == edges.len() {
            return true;
        }
        if colour[i] != usize::MAX {
            return solve(i + 1, edges, colour, used);
        }
        let (a, b) = edges[i];
        for c in 0..4 {
            if !used[a][c] && !used[b][c] {
                used[a][c] = true;
                used[b][c] = true;
                colour[i] = c;
                if solve(i + 1, edges, colour, used) {
                    return true;
                }
                used[a][c] = false;
                used[b][c] = false;
                colour[i] = usize::MAX;
            }
        }
        false
    }
    if !solve(0, &edges, &mut colour, &mut used) {
        return Err(Error::InvalidCircuit("no decomposition into four perfect matchings".into()));
    }
    let mut out: [Vec<(usize, usize)>; 4] = Default::default();
    for (e, &c) in edges.iter().zip(&colour) {
        out[c].push(*e);
    }
    Ok(out)
}

/// 16 repetitions of the four matching layers M1, M2, M3, M0 where M0 is the
/// dimer covering of the reference state. All angles independent; one slot
/// after each four-layer cycle.
pub fn build_hva_kagome(lattice: &Lattice, covering: Option<&[(usize, usize)]>, cycles: usize) -> Result<Circuit> {
    if lattice.kind != LatticeKind::Kagome || lattice.num_sites() != 12 {
        return Err(Error::InvalidCircuit("kagome HVA needs the 12-site kagome torus".into()));
    }
    if cycles == 0 {
        return Err(Error::InvalidCircuit("cycles must be positive".into()));
    }
    let m = kagome_matchings(lattice, covering)?;
    let order = [1, 2, 3, 0];
    let mut layers = Vec::new();
    let mut ramp = Vec::new();
    let mut slots = Vec::new();
    let mut p = 0;
    for c in 0..cycles {
        let s = (c + 1) as f64 / (cycles + 1) as f64;
        for &k in &order {
            let gates = m[k]
                .iter()
                .map(|&(a, b)| {
                    let g = Gate { generator: Generator::Exchange(a, b), param: p };
                    ramp.push(RampEntry {
                        s,
                        role: if k == 0 { RampRole::Static } else { RampRole::Problem },
                        coupling: 1.0,
                    });
                    p += 1;
                    g
                })
                .collect();
            layers.push(Layer { gates, shared_parameter: false });
        }
        slots.push(layers.len());
    }
    Ok(Circuit {
        family: CircuitFamily::Kagome,
        num_qubits: 12,
        layers,
        initial: InitialState::DimerCovering(m[0].clone()),
        slots,
        num_params: p,
        translation_covariant: false,
        ramp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, parity_operator, total_spin_squared, ModelKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(c: &Circuit, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..c.num_params()).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn close(a: &StateVector, b: &StateVector, tol: f64) -> bool {
        a.amplitudes().iter().zip(b.amplitudes()).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn tfi_1d_shape() {
        let c = build_hva_tfi_1d(16).unwrap();
        assert_eq!(c.depth(), 24);
        assert_eq!(c.num_params(), 16);
        assert_eq!(c.slots().len(), 8);
        assert!(build_hva_tfi_1d(7).is_err());
    }

    #[test]
    fn tfi_2d_shape() {
        let l = Lattice::square(4, 4).unwrap();
        let c = build_hva_tfi_2d(&l).unwrap();
        assert_eq!(c.depth(), 40);
        assert_eq!(c.num_params(), 16);
        assert_eq!(c.slots().len(), 8);
        for layer in &c.layers()[..4] {
            let mut q: Vec<_> = layer.gates.iter().flat_map(|g| g.generator.qubits()).collect();
            q.sort();
            q.dedup();
            assert_eq!(q.len(), 2 * layer.gates.len());
        }
    }

    #[test]
    fn heisenberg_shape_and_zero_params() {
        let c = build_hva_heisenberg_chain(16, 32).unwrap();
        assert_eq!(c.depth(), 32);
        assert!(c.layers().iter().all(|l| l.gates.len() == 8));
        assert_eq!(c.num_params(), 256);
        let small = build_hva_heisenberg_chain(6, 4).unwrap();
        let s = small.run(&vec![0.0; small.num_params()], None, None).unwrap();
        assert!(s.expect_pauli_sum(&total_spin_squared(6)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn kagome_shape_and_singlet() {
        let model = build_model(ModelKind::HeisenbergKagome, &[2, 2], None).unwrap();
        let c = build_hva_kagome(&model.lattice, None, 16).unwrap();
        assert_eq!(c.depth(), 64);
        assert_eq!(c.slots().len(), 16);
        let zero = c.run(&vec![0.0; c.num_params()], None, None).unwrap();
        assert!((zero.expect_pauli_sum(&model.terms).unwrap() + 18.0).abs() < 1e-12);
        let s = c.run(&random_params(&c, 3), None, None).unwrap();
        assert!(s.expect_pauli_sum(&total_spin_squared(12)).unwrap().abs() < 1e-10);
    }

    #[test]
    fn zero_parameters_give_initial_state() {
        let c = build_hva_tfi_1d(6).unwrap();
        let s = c.run(&vec![0.0; 6], None, None).unwrap();
        assert!(close(&s, &StateVector::plus_all(6).unwrap(), 1e-15));
        let p = random_params(&c, 1);
        let s0 = c.run(&p, Some(0), None).unwrap();
        assert!(close(&s0, &StateVector::plus_all(6).unwrap(), 0.0));
    }

    #[test]
    fn translation_covariance_with_insertion() {
        let n = 6;
        let c = build_hva_tfi_1d(n).unwrap();
        let p = random_params(&c, 2);
        let t: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        let ins = |site: usize| Insertion {
            slot: 1,
            op: InsertedOp::Product { sites: vec![site], ops: vec![SiteOp::Y], coeff: C64::new(1.0, 0.0) },
        };
        let mut s = c.run(&p, None, Some(&ins(0))).unwrap();
        for j in 1..n {
            s = s.translate(&t).unwrap();
            assert!(close(&s, &c.run(&p, None, Some(&ins(j))).unwrap(), 1e-12));
        }
    }

    #[test]
    fn parity_covariance() {
        let c = build_hva_tfi_1d(6).unwrap().with_initial_state(InitialState::GhzOdd).unwrap();
        let s = c.run(&random_params(&c, 5), None, None).unwrap();
        let flipped = s.apply_pauli_sum(&parity_operator(6)).unwrap();
        let mut neg = s.clone();
        neg.scale(C64::new(-1.0, 0.0));
        assert!(close(&flipped, &neg, 1e-12));
    }

    #[test]
    fn identity_insertion_is_noop() {
        let c = build_hva_tfi_1d(4).unwrap();
        let p = random_params(&c, 9);
        let ins = Insertion { slot: 1, op: InsertedOp::Gate(LocalGate::identity(vec![2, 3]).unwrap()) };
        let a = c.run(&p, None, None).unwrap();
        let b = c.run(&p, None, Some(&ins)).unwrap();
        assert!(close(&a, &b, 0.0));
        let bad = Insertion { slot: 7, op: ins.op.clone() };
        assert!(c.run(&p, None, Some(&bad)).is_err());
    }
}
