//! Layered circuits, Pauli–Lindblad noise models and observables.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Clifford, Direction, Pauli, PauliString, PauliSum, PauliTerm, MAX_QUBITS};

pub type ChannelId = usize;

#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    Clifford(Clifford),
    /// `exp(−iθP/2)` for the Pauli string `axis`, written on absolute qubit indices.
    Rotation { axis: PauliString, theta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
}

impl Gate {
    pub fn clifford(gate: Clifford, qubits: &[usize]) -> Self {
        Gate {
            kind: GateKind::Clifford(gate),
            qubits: qubits.to_vec(),
        }
    }

    /// Rotation about the Pauli whose letter on `qubits[k]` is `letters[k]`.
    pub fn rotation(letters: &[Pauli], qubits: &[usize], theta: f64) -> Self {
        let axis = PauliString::from_letters(
            &qubits.iter().copied().zip(letters.iter().copied()).collect::<Vec<_>>(),
        );
        Gate {
            kind: GateKind::Rotation { axis, theta },
            qubits: qubits.to_vec(),
        }
    }

    pub fn rx(q: usize, theta: f64) -> Self {
        Self::rotation(&[Pauli::X], &[q], theta)
    }

    pub fn rz(q: usize, theta: f64) -> Self {
        Self::rotation(&[Pauli::Z], &[q], theta)
    }

    pub fn rzz(a: usize, b: usize, theta: f64) -> Self {
        Self::rotation(&[Pauli::Z, Pauli::Z], &[a, b], theta)
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self::clifford(Clifford::CX, &[control, target])
    }

    pub fn support_mask(&self) -> u128 {
        self.qubits.iter().fold(0, |m, &q| m | (1u128 << q))
    }

    pub fn arity(&self) -> usize {
        self.qubits.len()
    }

    /// True for named Cliffords and for rotations by a multiple of π/2.
    pub fn is_clifford(&self) -> bool {
        match &self.kind {
            GateKind::Clifford(_) => true,
            GateKind::Rotation { theta, .. } => {
                let q = theta / FRAC_PI_2;
                (q - q.round()).abs() < 1e-12
            }
        }
    }

    /// Conjugates `op` by this gate: `U op U†` forward, `U† op U` backward.
    pub fn conjugate(&self, op: &mut PauliSum, direction: Direction) {
        match &self.kind {
            GateKind::Clifford(c) => op
                .conjugate_clifford_in_place(*c, &self.qubits, direction)
                .expect("gate validated against the circuit width"),
            GateKind::Rotation { axis, theta } => op.rotate_in_place(axis, *theta, direction),
        }
    }

    /// The same gate acting on qubits `0..arity`, in the order of `self.qubits`.
    pub fn localized(&self) -> Gate {
        let local: Vec<usize> = (0..self.qubits.len()).collect();
        match &self.kind {
            GateKind::Clifford(c) => Gate::clifford(*c, &local),
            GateKind::Rotation { axis, theta } => {
                let letters: Vec<Pauli> = self.qubits.iter().map(|&q| axis.letter(q)).collect();
                Gate::rotation(&letters, &local, *theta)
            }
        }
    }

    /// Axis letters in qubit order, for rotations.
    pub fn axis_letters(&self) -> Option<Vec<Pauli>> {
        match &self.kind {
            GateKind::Rotation { axis, .. } => {
                Some(self.qubits.iter().map(|&q| axis.letter(q)).collect())
            }
            GateKind::Clifford(_) => None,
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let arity = match &self.kind {
            GateKind::Clifford(c) => c.arity(),
            GateKind::Rotation { axis, .. } => {
                if axis.is_identity() || axis.support() != self.support_mask() {
                    return Err(Error::InvalidAxis(axis.label()));
                }
                self.qubits.len()
            }
        };
        if self.qubits.len() != arity || !(1..=2).contains(&arity) {
            return Err(Error::InvalidCircuit(format!(
                "gate on qubits {:?} has the wrong arity",
                self.qubits
            )));
        }
        for &q in &self.qubits {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
        }
        if arity == 2 && self.qubits[0] == self.qubits[1] {
            return Err(Error::InvalidCircuit(format!(
                "gate support {:?} repeats a qubit",
                self.qubits
            )));
        }
        Ok(())
    }
}

fn edge(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Gate layers with pairwise disjoint supports inside each layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayeredCircuit {
    n_qubits: usize,
    layers: Vec<Vec<Gate>>,
    coupling: Vec<(usize, usize)>,
}

impl LayeredCircuit {
    pub fn new(n_qubits: usize, layers: Vec<Vec<Gate>>, coupling: Vec<(usize, usize)>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidCircuit("n_qubits must be positive".into()));
        }
        if n_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits(n_qubits));
        }
        let mut edges = BTreeSet::new();
        for &(a, b) in &coupling {
            for q in [a, b] {
                if q >= n_qubits {
                    return Err(Error::QubitOutOfRange { index: q, n_qubits });
                }
            }
            if a == b {
                return Err(Error::InvalidCircuit(format!("self-loop ({a}, {b}) in coupling")));
            }
            edges.insert(edge(a, b));
        }
        for (l, layer) in layers.iter().enumerate() {
            let mut used = 0u128;
            for gate in layer {
                gate.validate(n_qubits)?;
                let mask = gate.support_mask();
                if used & mask != 0 {
                    return Err(Error::InvalidCircuit(format!(
                        "layer {l}: gates overlap on qubits {:?}",
                        gate.qubits
                    )));
                }
                used |= mask;
                if gate.arity() == 2 && !edges.contains(&edge(gate.qubits[0], gate.qubits[1])) {
                    return Err(Error::InvalidCircuit(format!(
                        "layer {l}: two-qubit gate on {:?} is not on a coupling edge",
                        gate.qubits
                    )));
                }
            }
        }
        Ok(LayeredCircuit {
            n_qubits,
            layers,
            coupling: edges.into_iter().collect(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn layers(&self) -> &[Vec<Gate>] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Sorted, deduplicated `(min, max)` pairs.
    pub fn coupling(&self) -> &[(usize, usize)] {
        &self.coupling
    }

    pub fn is_clifford(&self) -> bool {
        self.first_non_clifford().is_none()
    }

    pub fn first_non_clifford(&self) -> Option<usize> {
        self.layers
            .iter()
            .position(|layer| layer.iter().any(|g| !g.is_clifford()))
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.coupling.binary_search(&edge(a, b)).is_ok()
    }
}

/// Two-qubit layout for the Ising interaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZzForm {
    /// One `R_ZZ(θ)` gate per bond.
    Native,
    /// `CX · R_Z(θ) · CX` on each bond, three layers per sublayer.
    CnotCompiled,
}

/// Trotterized 1D transverse-field Ising chain.
///
/// Each step is an `R_X(θ_X)` layer followed by the even-bond `R_ZZ(θ_ZZ)`
/// sublayer and then the odd-bond sublayer. For `H = −J Σ ZZ − h Σ X` and
/// time step `Δt`, `θ_ZZ = −2JΔt` and `θ_X = −2hΔt`. Empty layers are
/// dropped, so `θ_X = 0` still yields an `R_X` layer (of identity-angle
/// rotations) while `n = 2` has no odd sublayer.
pub fn build_tfim_1d(n: usize, steps: usize, theta_x: f64, theta_zz: f64) -> Result<LayeredCircuit> {
    build_tfim_1d_with(n, steps, theta_x, theta_zz, ZzForm::Native)
}

pub fn build_tfim_1d_with(
    n: usize,
    steps: usize,
    theta_x: f64,
    theta_zz: f64,
    form: ZzForm,
) -> Result<LayeredCircuit> {
    if n < 2 || steps < 1 {
        return Err(Error::Usage("the TFIM chain needs n ≥ 2 and steps ≥ 1".into()));
    }
    let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    let colors: Vec<Vec<(usize, usize)>> = vec![
        edges.iter().copied().filter(|e| e.0 % 2 == 0).collect(),
        edges.iter().copied().filter(|e| e.0 % 2 == 1).collect(),
    ];
    tfim_layers(n, steps, theta_x, theta_zz, &colors, form, edges)
}

/// Trotterized Ising model on an arbitrary coupling graph, with the bonds
/// split into sublayers by a greedy edge colouring in edge order.
pub fn build_tfim_graph(
    n: usize,
    edges: &[(usize, usize)],
    steps: usize,
    theta_x: f64,
    theta_zz: f64,
) -> Result<LayeredCircuit> {
    let mut colors: Vec<(u128, Vec<(usize, usize)>)> = Vec::new();
    let mut sorted: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| edge(a, b)).collect();
    sorted.sort_unstable();
    sorted.dedup();
    for &(a, b) in &sorted {
        if a >= MAX_QUBITS || b >= MAX_QUBITS {
            return Err(Error::TooManyQubits(a.max(b) + 1));
        }
        let mask = (1u128 << a) | (1u128 << b);
        match colors.iter_mut().find(|(used, _)| used & mask == 0) {
            Some((used, list)) => {
                *used |= mask;
                list.push((a, b));
            }
            None => colors.push((mask, vec![(a, b)])),
        }
    }
    let colors: Vec<_> = colors.into_iter().map(|(_, l)| l).collect();
    tfim_layers(n, steps, theta_x, theta_zz, &colors, ZzForm::Native, sorted)
}

fn tfim_layers(
    n: usize,
    steps: usize,
    theta_x: f64,
    theta_zz: f64,
    colors: &[Vec<(usize, usize)>],
    form: ZzForm,
    coupling: Vec<(usize, usize)>,
) -> Result<LayeredCircuit> {
    let mut layers = Vec::new();
    for _ in 0..steps {
        layers.push((0..n).map(|q| Gate::rx(q, theta_x)).collect());
        for bonds in colors.iter().filter(|b| !b.is_empty()) {
            match form {
                ZzForm::Native => {
                    layers.push(bonds.iter().map(|&(a, b)| Gate::rzz(a, b, theta_zz)).collect());
                }
                ZzForm::CnotCompiled => {
                    let cx: Vec<Gate> = bonds.iter().map(|&(a, b)| Gate::cx(a, b)).collect();
                    layers.push(cx.clone());
                    layers.push(bonds.iter().map(|&(_, b)| Gate::rz(b, theta_zz)).collect());
                    layers.push(cx);
                }
            }
        }
    }
    LayeredCircuit::new(n, layers, coupling)
}

/// Coupling graph of one heavy-hex cell: a 12-qubit ring (six degree-3 sites
/// and six bridge qubits) with two outward bridge qubits, 14 qubits in all.
pub fn heavy_hex_patch() -> (usize, Vec<(usize, usize)>) {
    let mut edges: Vec<(usize, usize)> = (0..12).map(|i| edge(i, (i + 1) % 12)).collect();
    edges.push((0, 12));
    edges.push((6, 13));
    edges.sort_unstable();
    (14, edges)
}

/// A single Pauli–Lindblad channel `ρ ↦ (1−p)ρ + p σρσ` with `p = (1−e^{−2λ})/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseChannel {
    pub id: ChannelId,
    /// Boundary index: the channel acts after `layer` gate layers.
    pub layer: usize,
    pub qubits: Vec<usize>,
    pub pauli: PauliString,
    pub lambda: f64,
}

impl NoiseChannel {
    pub fn probability(&self) -> f64 {
        crate::allocation::p_of(self.lambda)
    }

    pub fn support_mask(&self) -> u128 {
        self.pauli.support()
    }

    pub fn term(&self, n_qubits: usize) -> PauliTerm {
        PauliTerm::unit(n_qubits, self.pauli)
    }

    /// Letters on the channel support, e.g. `"XZ"`.
    pub fn letters(&self) -> String {
        self.pauli.letters_on(&self.qubits)
    }
}

/// Which layers receive a full set of local channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoisePlacement {
    /// After every layer that contains a two-qubit gate.
    AfterTwoQubitLayers,
    AfterEveryLayer,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    channels: Vec<NoiseChannel>,
}

impl NoiseModel {
    pub fn empty() -> Self {
        NoiseModel::default()
    }

    /// Validates channels against `circuit` and renumbers ids by position.
    pub fn new(circuit: &LayeredCircuit, channels: Vec<NoiseChannel>) -> Result<Self> {
        let mut out = Vec::with_capacity(channels.len());
        for (id, mut ch) in channels.into_iter().enumerate() {
            ch.id = id;
            let bad = |reason: String| Error::InvalidChannel { id, reason };
            if ch.layer > circuit.depth() {
                return Err(bad(format!(
                    "layer {} is past the last boundary {}",
                    ch.layer,
                    circuit.depth()
                )));
            }
            if !(ch.lambda >= 0.0 && ch.lambda.is_finite()) {
                return Err(bad(format!("rate {} is not a finite non-negative number", ch.lambda)));
            }
            match ch.qubits.as_slice() {
                [q] if *q < circuit.n_qubits() => {}
                [a, b] if a != b && circuit.has_edge(*a, *b) => {}
                _ => {
                    return Err(bad(format!(
                        "support {:?} is neither a qubit nor a coupling edge",
                        ch.qubits
                    )))
                }
            }
            let mask = ch.qubits.iter().fold(0u128, |m, &q| m | (1u128 << q));
            if ch.pauli.is_identity() || ch.pauli.support() & !mask != 0 {
                return Err(bad(format!(
                    "Pauli {} is not a non-identity operator on {:?}",
                    ch.pauli, ch.qubits
                )));
            }
            out.push(ch);
        }
        Ok(NoiseModel { channels: out })
    }

    /// Every non-identity Pauli on every qubit and coupling edge, at rate
    /// `lambda`, on each boundary selected by `placement`.
    pub fn uniform_local(circuit: &LayeredCircuit, lambda: f64, placement: NoisePlacement) -> Result<Self> {
        Self::uniform_with(circuit, lambda, placement, true)
    }

    /// Single-qubit channels only.
    pub fn uniform_single_qubit(
        circuit: &LayeredCircuit,
        lambda: f64,
        placement: NoisePlacement,
    ) -> Result<Self> {
        Self::uniform_with(circuit, lambda, placement, false)
    }

    fn uniform_with(
        circuit: &LayeredCircuit,
        lambda: f64,
        placement: NoisePlacement,
        two_local: bool,
    ) -> Result<Self> {
        if lambda < 0.0 {
            return Err(Error::NegativeRate(lambda));
        }
        let mut channels = Vec::new();
        for (l, layer) in circuit.layers().iter().enumerate() {
            let noisy = match placement {
                NoisePlacement::AfterEveryLayer => true,
                NoisePlacement::AfterTwoQubitLayers => layer.iter().any(|g| g.arity() == 2),
            };
            if noisy {
                channels.extend(local_channels(circuit, l + 1, lambda, two_local));
            }
        }
        Self::new(circuit, channels)
    }

    pub fn channels(&self) -> &[NoiseChannel] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.lambda).collect()
    }

    pub fn with_rates(&self, rates: &[f64]) -> NoiseModel {
        NoiseModel {
            channels: self
                .channels
                .iter()
                .zip(rates)
                .map(|(c, &lambda)| NoiseChannel { lambda, ..c.clone() })
                .collect(),
        }
    }
}

/// The 3 single-qubit and 9 two-qubit Pauli channels per site and edge at one boundary.
pub fn local_channels(circuit: &LayeredCircuit, boundary: usize, lambda: f64, two_local: bool) -> Vec<NoiseChannel> {
    let mut out = Vec::new();
    for q in 0..circuit.n_qubits() {
        for p in Pauli::NON_IDENTITY {
            out.push(NoiseChannel {
                id: 0,
                layer: boundary,
                qubits: vec![q],
                pauli: PauliString::single(q, p),
                lambda,
            });
        }
    }
    if two_local {
        for &(a, b) in circuit.coupling() {
            for pa in Pauli::NON_IDENTITY {
                for pb in Pauli::NON_IDENTITY {
                    out.push(NoiseChannel {
                        id: 0,
                        layer: boundary,
                        qubits: vec![a, b],
                        pauli: PauliString::from_letters(&[(a, pa), (b, pb)]),
                        lambda,
                    });
                }
            }
        }
    }
    out
}

/// A Hermitian observable with a declared spectral-norm bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    sum: PauliSum,
    norm_bound: f64,
}

impl Observable {
    /// The declared bound defaults to the Pauli one-norm.
    pub fn new(sum: PauliSum) -> Result<Self> {
        let bound = sum.one_norm();
        Self::with_norm_bound(sum, bound)
    }

    /// `norm_bound` is clamped to the one-norm, which is always valid.
    pub fn with_norm_bound(sum: PauliSum, norm_bound: f64) -> Result<Self> {
        if !sum.is_hermitian(1e-12) {
            return Err(Error::NonHermitianObservable);
        }
        let sum = PauliSum::from_real(sum.n_qubits(), sum.terms().iter().map(|(s, c)| (*s, c.re)));
        let norm_bound = norm_bound.min(sum.one_norm()).max(0.0);
        Ok(Observable { sum, norm_bound })
    }

    pub fn pauli(n_qubits: usize, string: PauliString) -> Self {
        Observable {
            sum: PauliSum::from_real(n_qubits, [(string, 1.0)]),
            norm_bound: 1.0,
        }
    }

    pub fn sum(&self) -> &PauliSum {
        &self.sum
    }

    pub fn n_qubits(&self) -> usize {
        self.sum.n_qubits()
    }

    /// Upper bound on `‖A‖∞`.
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn support_mask(&self) -> u128 {
        self.sum.support_mask()
    }

    /// Real coefficients with their Pauli strings.
    pub fn real_terms(&self) -> impl Iterator<Item = (PauliString, f64)> + '_ {
        self.sum.terms().iter().map(|(s, c)| (*s, c.re))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn tfim_layer_counts() {
        let c = build_tfim_1d(50, 20, PI / 16.0, -PI / 2.0).unwrap();
        let two_qubit = c
            .layers()
            .iter()
            .filter(|l| l.iter().any(|g| g.arity() == 2))
            .count();
        assert_eq!(two_qubit, 40);
        assert_eq!(c.depth(), 60);
        let small = build_tfim_1d(2, 1, 0.1, 0.2).unwrap();
        assert_eq!(small.depth(), 2);
        assert_eq!(small.layers()[0].len(), 2);
        assert_eq!(small.layers()[1], vec![Gate::rzz(0, 1, 0.2)]);
    }

    #[test]
    fn tfim_even_bonds_first() {
        let c = build_tfim_1d(5, 1, 0.1, 0.2).unwrap();
        assert_eq!(c.layers()[1], vec![Gate::rzz(0, 1, 0.2), Gate::rzz(2, 3, 0.2)]);
        assert_eq!(c.layers()[2], vec![Gate::rzz(1, 2, 0.2), Gate::rzz(3, 4, 0.2)]);
    }

    #[test]
    fn tfim_cnot_form() {
        let c = build_tfim_1d_with(4, 1, 0.1, -PI / 2.0, ZzForm::CnotCompiled).unwrap();
        assert_eq!(c.depth(), 7);
        assert!(c.is_clifford() == false);
        let cl = build_tfim_1d_with(4, 1, PI / 2.0, -PI / 2.0, ZzForm::CnotCompiled).unwrap();
        assert!(cl.is_clifford());
    }

    #[test]
    fn rejects_bad_circuits() {
        let overlap = vec![vec![Gate::rx(0, 0.1), Gate::rzz(0, 1, 0.1)]];
        assert!(LayeredCircuit::new(2, overlap, vec![(0, 1)]).is_err());
        let off_edge = vec![vec![Gate::rzz(0, 2, 0.1)]];
        assert!(LayeredCircuit::new(3, off_edge, vec![(0, 1)]).is_err());
        let out_of_range = vec![vec![Gate::rx(3, 0.1)]];
        assert!(matches!(
            LayeredCircuit::new(3, out_of_range, vec![]),
            Err(Error::QubitOutOfRange { .. })
        ));
    }

    #[test]
    fn uniform_noise_counts() {
        let c = build_tfim_1d(50, 1, 0.1, 0.2).unwrap();
        let noise = NoiseModel::uniform_local(&c, 0.01, NoisePlacement::AfterTwoQubitLayers).unwrap();
        assert_eq!(noise.len(), 2 * (150 + 441));
        assert!(noise.channels().iter().all(|ch| ch.layer == 2 || ch.layer == 3));
        assert!(noise.channels().iter().enumerate().all(|(i, ch)| ch.id == i));
    }

    #[test]
    fn noise_validation() {
        let c = build_tfim_1d(3, 1, 0.1, 0.2).unwrap();
        let ch = |qubits: Vec<usize>, pauli: &str, layer: usize, lambda: f64| NoiseChannel {
            id: 0,
            layer,
            qubits,
            pauli: pauli.parse().unwrap(),
            lambda,
        };
        assert!(NoiseModel::new(&c, vec![ch(vec![0, 2], "X0 X2", 1, 0.1)]).is_err());
        assert!(NoiseModel::new(&c, vec![ch(vec![0], "X1", 1, 0.1)]).is_err());
        assert!(NoiseModel::new(&c, vec![ch(vec![0], "X0", 9, 0.1)]).is_err());
        assert!(NoiseModel::new(&c, vec![ch(vec![0], "X0", 1, -0.1)]).is_err());
        assert!(NoiseModel::new(&c, vec![ch(vec![1, 0], "Z0 Y1", 0, 0.1)]).is_ok());
    }

    #[test]
    fn heavy_hex_is_small_and_valid() {
        let (n, edges) = heavy_hex_patch();
        assert!(n <= 16);
        let c = build_tfim_graph(n, &edges, 1, 0.1, 0.2).unwrap();
        assert!(c.layers().iter().all(|l| !l.is_empty()));
        assert!(c.coupling().iter().all(|&(a, b)| a < n && b < n));
    }

    #[test]
    fn builders_are_deterministic() {
        let a = build_tfim_1d(7, 3, 0.3, -0.4).unwrap();
        let b = build_tfim_1d(7, 3, 0.3, -0.4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn observable_requires_real_coefficients() {
        let s = PauliSum::from_terms(1, [("X0".parse().unwrap(), num_complex::Complex64::new(0.0, 1.0))]);
        assert!(matches!(Observable::new(s), Err(Error::NonHermitianObservable)));
    }
}
