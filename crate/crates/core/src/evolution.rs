//! Interaction-picture evolution of a Pauli error to the end of the circuit
//! (`E_F`) or to its start (`E_I`), abandoned once the operator grows past
//! `B_max`.

use crate::circuit::{LayeredCircuit, Observable};
use crate::lightcone::ObservableCone;
use crate::pauli::{Direction, PauliSum, PauliTerm, PRUNE_THRESHOLD};

pub const DEFAULT_B_MAX: usize = 500_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Evolved {
    Sum(PauliSum),
    Exceeded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionOutcome {
    pub result: Evolved,
    pub layers_traversed: usize,
    /// Largest size statistic seen at a layer boundary.
    pub peak_b: usize,
}

impl EvolutionOutcome {
    pub fn sum(&self) -> Option<&PauliSum> {
        match &self.result {
            Evolved::Sum(s) => Some(s),
            Evolved::Exceeded => None,
        }
    }

    pub fn exceeded(&self) -> bool {
        matches!(self.result, Evolved::Exceeded)
    }
}

/// `E_F = U E U†` with `U` the gates after boundary `at_layer`. Gates outside
/// the observable's backward cone are skipped: they cancel in `U† A U`, so
/// `‖[E_F, A]‖` is unchanged.
pub fn evolve_forward(
    error: &PauliTerm,
    at_layer: usize,
    circuit: &LayeredCircuit,
    obs: &Observable,
    b_max: usize,
) -> EvolutionOutcome {
    let cone = ObservableCone::new(circuit, obs);
    evolve_forward_in(error, at_layer, circuit, &cone, b_max)
}

pub fn evolve_forward_in(
    error: &PauliTerm,
    at_layer: usize,
    circuit: &LayeredCircuit,
    cone: &ObservableCone,
    b_max: usize,
) -> EvolutionOutcome {
    let layers = circuit.layers()[at_layer..]
        .iter()
        .enumerate()
        .map(|(k, layer)| (at_layer + k, layer));
    run(
        PauliSum::from_term(error),
        layers,
        Direction::Forward,
        b_max,
        |l, i| cone.layer_flags(l)[i],
    )
}

/// `E_I = V† E V` with `V` the gates before boundary `at_layer`.
pub fn evolve_backward(
    error: &PauliTerm,
    at_layer: usize,
    circuit: &LayeredCircuit,
    b_max: usize,
) -> EvolutionOutcome {
    let layers = circuit.layers()[..at_layer].iter().enumerate().rev();
    run(
        PauliSum::from_term(error),
        layers,
        Direction::Backward,
        b_max,
        |_, _| true,
    )
}

fn run<'a>(
    mut op: PauliSum,
    layers: impl Iterator<Item = (usize, &'a Vec<crate::circuit::Gate>)>,
    direction: Direction,
    b_max: usize,
    keep: impl Fn(usize, usize) -> bool,
) -> EvolutionOutcome {
    let mut peak_b = op.size_statistic();
    let mut traversed = 0;
    let mut support = op.support_mask();
    for (l, layer) in layers {
        let mut touched = false;
        for (i, gate) in layer.iter().enumerate() {
            if gate.support_mask() & support != 0 && keep(l, i) {
                gate.conjugate(&mut op, direction);
                touched = true;
            }
        }
        traversed += 1;
        if touched {
            op.prune(PRUNE_THRESHOLD);
            support = op.support_mask();
        }
        let b = op.size_statistic();
        peak_b = peak_b.max(b);
        if b > b_max {
            return EvolutionOutcome {
                result: Evolved::Exceeded,
                layers_traversed: traversed,
                peak_b,
            };
        }
    }
    EvolutionOutcome {
        result: Evolved::Sum(op),
        layers_traversed: traversed,
        peak_b,
    }
}
