//! Seeded random instances for property tests and acceptance runs.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::circuit::{Gate, LayeredCircuit, NoiseChannel, NoiseModel, Observable};
use crate::pauli::{Clifford, Pauli, PauliString, PauliSum};

const ONE_QUBIT_CLIFFORDS: [Clifford; 6] = [Clifford::H, Clifford::S, Clifford::Sdg, Clifford::X, Clifford::Y, Clifford::Z];

pub fn random_letter<R: Rng>(rng: &mut R) -> Pauli {
    Pauli::NON_IDENTITY[rng.random_range(0..3)]
}

/// Uniform over the `4^n − 1` non-identity strings on `qubits`.
pub fn random_pauli_on<R: Rng>(rng: &mut R, qubits: &[usize]) -> PauliString {
    loop {
        let letters: Vec<(usize, Pauli)> = qubits.iter().map(|&q| (q, Pauli::from_index(rng.random_range(0..4)))).collect();
        let s = PauliString::from_letters(&letters);
        if !s.is_identity() {
            return s;
        }
    }
}

/// Line coupling plus each extra pair with probability `extra`.
pub fn random_coupling<R: Rng>(rng: &mut R, n: usize, extra: f64) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|q| (q - 1, q)).collect();
    for a in 0..n {
        for b in a + 2..n {
            if rng.random_bool(extra) {
                edges.push((a, b));
            }
        }
    }
    edges
}

fn random_gate<R: Rng>(rng: &mut R, qubits: &[usize], clifford_fraction: f64) -> Gate {
    let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    match (qubits.len(), rng.random_bool(clifford_fraction)) {
        (1, true) => Gate::clifford(ONE_QUBIT_CLIFFORDS[rng.random_range(0..6)], qubits),
        (2, true) => {
            let c = if rng.random_bool(0.5) { Clifford::CX } else { Clifford::CZ };
            Gate::clifford(c, qubits)
        }
        (1, false) => Gate::rotation(&[random_letter(rng)], qubits, theta),
        _ => {
            let letters = [random_letter(rng), random_letter(rng)];
            Gate::rotation(&letters, qubits, theta)
        }
    }
}

/// Random layered circuit over `coupling`, mixing Cliffords and rotations.
/// Each layer greedily packs disjoint gates in a shuffled qubit/edge order.
pub fn random_circuit<R: Rng>(
    rng: &mut R,
    n: usize,
    depth: usize,
    coupling: &[(usize, usize)],
    clifford_fraction: f64,
) -> LayeredCircuit {
    let mut layers = Vec::with_capacity(depth);
    for _ in 0..depth {
        let mut slots: Vec<Vec<usize>> = coupling.iter().map(|&(a, b)| {
            if rng.random_bool(0.5) { vec![a, b] } else { vec![b, a] }
        }).collect();
        slots.extend((0..n).map(|q| vec![q]));
        slots.shuffle(rng);
        let mut used = 0u128;
        let mut layer = Vec::new();
        for s in slots {
            let mask = s.iter().fold(0u128, |m, &q| m | 1 << q);
            if used & mask != 0 || rng.random_bool(0.25) {
                continue;
            }
            used |= mask;
            layer.push(random_gate(rng, &s, clifford_fraction));
        }
        layers.push(layer);
    }
    LayeredCircuit::new(n, layers, coupling.to_vec()).expect("generated circuit is valid")
}

/// Random circuit with exactly `gates` gates, one per layer.
pub fn random_sparse_circuit<R: Rng>(rng: &mut R, n: usize, gates: usize, clifford_fraction: f64) -> LayeredCircuit {
    let coupling: Vec<(usize, usize)> = (1..n).map(|q| (q - 1, q)).collect();
    let layers = (0..gates)
        .map(|_| {
            let qubits = if n > 1 && rng.random_bool(0.6) {
                let (a, b) = coupling[rng.random_range(0..coupling.len())];
                if rng.random_bool(0.5) { vec![a, b] } else { vec![b, a] }
            } else {
                vec![rng.random_range(0..n)]
            };
            vec![random_gate(rng, &qubits, clifford_fraction)]
        })
        .collect();
    LayeredCircuit::new(n, layers, coupling).expect("generated circuit is valid")
}

/// `count` random one- and two-local channels at random boundaries, rates in `(0, max_lambda]`.
pub fn random_noise<R: Rng>(rng: &mut R, circuit: &LayeredCircuit, count: usize, max_lambda: f64) -> NoiseModel {
    let n = circuit.n_qubits();
    let channels = (0..count)
        .map(|_| {
            let qubits = if !circuit.coupling().is_empty() && rng.random_bool(0.4) {
                let (a, b) = circuit.coupling()[rng.random_range(0..circuit.coupling().len())];
                vec![a, b]
            } else {
                vec![rng.random_range(0..n)]
            };
            let pauli = random_pauli_on(rng, &qubits);
            NoiseChannel {
                id: 0,
                layer: rng.random_range(0..=circuit.depth()),
                qubits,
                pauli,
                lambda: max_lambda * (1.0 - rng.random::<f64>()),
            }
        })
        .collect();
    NoiseModel::new(circuit, channels).expect("generated channels are valid")
}

/// Random Hermitian sum of `terms` strings of weight at most `max_weight` on `n` qubits.
pub fn random_pauli_sum<R: Rng>(rng: &mut R, n: usize, terms: usize, max_weight: usize) -> PauliSum {
    let all: Vec<usize> = (0..n).collect();
    let items: Vec<(PauliString, f64)> = (0..terms)
        .map(|_| {
            let w = rng.random_range(1..=max_weight.min(n).max(1));
            let qubits: Vec<usize> = all.choose_multiple(rng, w).copied().collect();
            (random_pauli_on(rng, &qubits), rng.random_range(-1.0..1.0))
        })
        .collect();
    PauliSum::from_real(n, items)
}

/// Single Pauli observable on a random qubit, or a short random sum.
pub fn random_observable<R: Rng>(rng: &mut R, n: usize) -> Observable {
    if rng.random_bool(0.6) {
        let q = rng.random_range(0..n);
        Observable::pauli(n, PauliString::single(q, random_letter(rng)))
    } else {
        let terms = rng.random_range(1..=3);
        Observable::new(random_pauli_sum(rng, n, terms, 2)).expect("real coefficients are Hermitian")
    }
}
