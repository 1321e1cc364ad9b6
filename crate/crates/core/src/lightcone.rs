//! Lightcone geometry: the commutation-aware conventional lightcone and the
//! topological cones used to restrict operator evolution.

use crate::circuit::{Gate, LayeredCircuit, NoiseChannel, Observable};
use crate::pauli::{Direction, Pauli, PauliString, PauliSum};

/// Position of a gate: `layers[layer][index]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GateRef {
    pub layer: usize,
    pub index: usize,
}

/// Bit `p.index()` set for each tracked non-identity letter.
pub type LetterSet = u8;

fn letter_bit(p: Pauli) -> LetterSet {
    1 << p.index()
}

/// Letters on each local qubit of `V† P V` for every local Pauli `P`,
/// indexed by `P`'s letters as `4·a + b` (or just `a` for one-qubit gates).
fn letter_map(gate: &Gate) -> Vec<[LetterSet; 2]> {
    let local = gate.localized();
    let k = gate.arity();
    (0..4usize.pow(k as u32))
        .map(|code| {
            let letters: Vec<(usize, Pauli)> = (0..k)
                .map(|q| (q, Pauli::from_index(code >> (2 * (k - 1 - q)))))
                .collect();
            let mut op = PauliSum::from_real(k, [(PauliString::from_letters(&letters), 1.0)]);
            local.conjugate(&mut op, Direction::Backward);
            let mut out = [0; 2];
            for (s, c) in op.terms() {
                if c.norm() < 1e-12 {
                    continue;
                }
                for (q, slot) in out.iter_mut().enumerate().take(k) {
                    let l = s.letter(q);
                    if l != Pauli::I {
                        *slot |= letter_bit(l);
                    }
                }
            }
            out
        })
        .collect()
}

/// Per boundary and qubit, a superset of the letters the Heisenberg-evolved
/// observable `A^{(b)}` can carry on that qubit.
pub fn tracked_letters(circuit: &LayeredCircuit, obs: &Observable) -> Vec<Vec<LetterSet>> {
    let n = circuit.n_qubits();
    let mut current = vec![0 as LetterSet; n];
    for (s, _) in obs.sum().terms() {
        for q in s.qubits() {
            current[q] |= letter_bit(s.letter(q));
        }
    }
    let mut out = vec![current.clone()];
    for layer in circuit.layers().iter().rev() {
        let mut next = current.clone();
        for gate in layer {
            let sets: Vec<LetterSet> = gate.qubits.iter().map(|&q| current[q]).collect();
            if sets.iter().all(|&s| s == 0) {
                continue;
            }
            let map = letter_map(gate);
            let k = gate.arity();
            let mut acc = [0 as LetterSet; 2];
            for (code, outs) in map.iter().enumerate().skip(1) {
                let allowed = (0..k).all(|q| {
                    let l = (code >> (2 * (k - 1 - q))) & 3;
                    l == 0 || sets[q] & (1 << l) != 0
                });
                if allowed {
                    acc[0] |= outs[0];
                    acc[1] |= outs[1];
                }
            }
            for (q_idx, &q) in gate.qubits.iter().enumerate() {
                next[q] = acc[q_idx];
            }
        }
        current = next;
        out.push(current.clone());
    }
    out.reverse();
    out
}

/// `true` for every channel whose support meets a non-empty tracked letter
/// set at its boundary; all other channels commute with `A^{(b)}`.
pub fn conventional_lightcone(
    circuit: &LayeredCircuit,
    obs: &Observable,
    channels: &[NoiseChannel],
) -> Vec<bool> {
    let tracked = tracked_letters(circuit, obs);
    channels
        .iter()
        .map(|ch| ch.qubits.iter().any(|&q| tracked[ch.layer][q] != 0))
        .collect()
}

/// Gates in the backward topological cone of the observable.
#[derive(Clone, Debug)]
pub struct ObservableCone {
    gates: Vec<Vec<bool>>,
    /// Qubits in the cone at each boundary.
    support: Vec<u128>,
}

impl ObservableCone {
    pub fn new(circuit: &LayeredCircuit, obs: &Observable) -> Self {
        let mut mask = obs.support_mask();
        let mut support = vec![mask];
        let mut gates = Vec::with_capacity(circuit.depth());
        for layer in circuit.layers().iter().rev() {
            let flags: Vec<bool> = layer.iter().map(|g| g.support_mask() & mask != 0).collect();
            for (g, &f) in layer.iter().zip(&flags) {
                if f {
                    mask |= g.support_mask();
                }
            }
            gates.push(flags);
            support.push(mask);
        }
        gates.reverse();
        support.reverse();
        ObservableCone { gates, support }
    }

    pub fn contains(&self, gate: GateRef) -> bool {
        self.gates[gate.layer][gate.index]
    }

    pub fn layer_flags(&self, layer: usize) -> &[bool] {
        &self.gates[layer]
    }

    pub fn support_at(&self, boundary: usize) -> u128 {
        self.support[boundary]
    }
}

/// Qubits reachable from `mask` at `boundary`, for boundaries `boundary..=L`.
pub fn forward_cone(circuit: &LayeredCircuit, boundary: usize, mask: u128) -> Vec<u128> {
    let mut m = mask;
    let mut out = vec![m];
    for layer in &circuit.layers()[boundary..] {
        let mut next = m;
        for g in layer {
            if g.support_mask() & m != 0 {
                next |= g.support_mask();
            }
        }
        m = next;
        out.push(m);
    }
    out
}

/// Gates in both the channel's forward cone and the observable's backward cone.
pub fn lightcone_intersection(circuit: &LayeredCircuit, channel: &NoiseChannel, obs: &Observable) -> Vec<GateRef> {
    let cone = ObservableCone::new(circuit, obs);
    intersection_with(circuit, channel.layer, channel.support_mask(), &cone)
}

pub(crate) fn intersection_with(
    circuit: &LayeredCircuit,
    boundary: usize,
    mask: u128,
    cone: &ObservableCone,
) -> Vec<GateRef> {
    let mut m = mask;
    let mut out = Vec::new();
    for (offset, layer) in circuit.layers()[boundary..].iter().enumerate() {
        let l = boundary + offset;
        let mut next = m;
        for (index, g) in layer.iter().enumerate() {
            if g.support_mask() & m != 0 {
                next |= g.support_mask();
                if cone.contains(GateRef { layer: l, index }) {
                    out.push(GateRef { layer: l, index });
                }
            }
        }
        m = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_tfim_1d, NoiseModel, NoisePlacement};
    use std::f64::consts::PI;

    fn zz_chain(n: usize, reps: usize) -> LayeredCircuit {
        build_tfim_1d(n, reps, 0.0, 0.7).unwrap()
    }

    #[test]
    fn zz_only_confines_x0() {
        let c = zz_chain(6, 3);
        let obs = Observable::pauli(6, "X0".parse().unwrap());
        let noise = NoiseModel::uniform_local(&c, 0.01, NoisePlacement::AfterEveryLayer).unwrap();
        let inside = conventional_lightcone(&c, &obs, noise.channels());
        for (ch, &ins) in noise.channels().iter().zip(&inside) {
            let touches = ch.qubits.iter().any(|&q| q < 2);
            if ch.layer > 0 && !touches {
                assert!(!ins, "channel {:?} should be outside", ch);
            }
        }
        assert!(inside.iter().any(|&b| b));
    }

    #[test]
    fn identity_observable_has_empty_cone() {
        let c = zz_chain(4, 2);
        let obs = Observable::pauli(4, PauliString::IDENTITY);
        let noise = NoiseModel::uniform_local(&c, 0.01, NoisePlacement::AfterEveryLayer).unwrap();
        assert!(conventional_lightcone(&c, &obs, noise.channels()).iter().all(|&b| !b));
    }

    #[test]
    fn tfim_cone_grows_two_sites_per_step() {
        let n = 50;
        let c = build_tfim_1d(n, 20, PI / 16.0, -PI / 2.0).unwrap();
        let obs = Observable::pauli(n, "Z25".parse().unwrap());
        let tracked = tracked_letters(&c, &obs);
        let width = |b: usize| tracked[b].iter().filter(|&&s| s != 0).count();
        // Each step has three layers; boundary 60 is the end.
        for step in 1..=10 {
            let b = 60 - 3 * step;
            let w = width(b);
            assert!(w <= 1 + 4 * step, "step {step}: width {w}");
        }
        assert!(width(60 - 30) > width(60 - 3));
    }

    #[test]
    fn intersection_empty_at_end_and_when_disjoint() {
        let c = zz_chain(6, 2);
        let obs = Observable::pauli(6, "Z0".parse().unwrap());
        let cone = ObservableCone::new(&c, &obs);
        assert!(intersection_with(&c, c.depth(), 1 << 3, &cone).is_empty());
        let c2 = LayeredCircuit::new(
            4,
            vec![vec![Gate::rzz(0, 1, 0.3), Gate::rzz(2, 3, 0.3)]],
            vec![(0, 1), (2, 3)],
        )
        .unwrap();
        let cone2 = ObservableCone::new(&c2, &obs);
        assert!(intersection_with(&c2, 0, 1 << 3, &cone2).is_empty());
        assert_eq!(intersection_with(&c2, 0, 1 << 1, &cone2).len(), 1);
    }
}
