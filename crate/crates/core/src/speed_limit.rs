//! Local speed-limit bounds on the Heisenberg-evolved observable.
//!
//! `w[i][σ]` bounds `‖A_{σ,[i]}‖∞`, where `A = Σ_σ σ_i ⊗ A_{σ,[i]}` and
//! `A_{σ,[i]} = Tr_i(σ_i A)/2`. Bounds are propagated backward in time, one
//! gate at a time, through the absolute Pauli transfer matrix of each gate.

use serde::{Deserialize, Serialize};

use crate::circuit::{Gate, LayeredCircuit, Observable};
use crate::pauli::{Direction, Pauli, PauliString, PauliSum};

/// Transfer-matrix entries below this are treated as exact zeros.
pub const PTM_ZERO: f64 = 1e-12;

/// `|W|` for a gate on local qubits `(a, b)`: `m[in][out]` is the magnitude of
/// the coefficient of `out` in `V† in V`, with two-qubit Paulis indexed as
/// `4·σ_a + σ_b`. One-qubit gates act on `a` with `b` a fictitious idle qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct PtmAbs {
    pub arity: usize,
    pub m: [[f64; 16]; 16],
}

fn pair_string(code: usize) -> PauliString {
    PauliString::from_letters(&[(0, Pauli::from_index(code >> 2)), (1, Pauli::from_index(code & 3))])
}

pub fn ptm_abs(gate: &Gate) -> PtmAbs {
    let local = gate.localized();
    let mut m = [[0.0; 16]; 16];
    for (input, row) in m.iter_mut().enumerate() {
        let mut op = PauliSum::from_real(2, [(pair_string(input), 1.0)]);
        local.conjugate(&mut op, Direction::Backward);
        for (s, c) in op.terms() {
            let out = 4 * s.letter(0).index() + s.letter(1).index();
            let v = c.norm();
            row[out] = if v < PTM_ZERO { 0.0 } else { v };
        }
    }
    PtmAbs { arity: gate.arity(), m }
}

/// One boundary's worth of local bounds, `w[qubit][σ]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalBounds {
    pub w: Vec<[f64; 4]>,
    pub cap: f64,
}

/// `w = Σ|a_k|` over terms whose letter on `i` is `σ`, capped at `‖A‖`.
pub fn init_bounds(obs: &Observable) -> LocalBounds {
    let n = obs.n_qubits();
    let mut w = vec![[0.0; 4]; n];
    for (s, a) in obs.real_terms() {
        for (q, slot) in w.iter_mut().enumerate() {
            slot[s.letter(q).index()] += a.abs();
        }
    }
    let mut b = LocalBounds {
        w,
        cap: obs.norm_bound(),
    };
    b.apply_cap();
    b
}

impl LocalBounds {
    fn apply_cap(&mut self) {
        let cap = self.cap;
        for row in &mut self.w {
            for v in row.iter_mut() {
                *v = v.min(cap);
            }
        }
    }

    /// Bounds for `V† A V` given bounds for `A`.
    pub fn propagate(&self, gate: &Gate) -> LocalBounds {
        let mut out = self.clone();
        out.propagate_in_place(gate, &ptm_abs(gate));
        out
    }

    pub fn propagate_in_place(&mut self, gate: &Gate, ptm: &PtmAbs) {
        match gate.qubits.as_slice() {
            &[i] => {
                let wi = self.w[i];
                let mut next = [0.0; 4];
                for (s_in, &wv) in wi.iter().enumerate() {
                    if wv == 0.0 {
                        continue;
                    }
                    for (s_out, slot) in next.iter_mut().enumerate() {
                        *slot += ptm.m[4 * s_in][4 * s_out] * wv;
                    }
                }
                self.w[i] = next;
            }
            &[i, j] => {
                let (wi, wj) = (self.w[i], self.w[j]);
                let mut ni = [0.0; 4];
                let mut nj = [0.0; 4];
                for (input, row) in ptm.m.iter().enumerate() {
                    let weight = wi[input >> 2].min(wj[input & 3]);
                    if weight == 0.0 {
                        continue;
                    }
                    for (out, &entry) in row.iter().enumerate() {
                        if entry != 0.0 {
                            ni[out >> 2] += entry * weight;
                            nj[out & 3] += entry * weight;
                        }
                    }
                }
                self.w[i] = ni;
                self.w[j] = nj;
            }
            _ => unreachable!("gates act on one or two qubits"),
        }
        let cap = self.cap;
        for &q in &gate.qubits {
            for v in self.w[q].iter_mut() {
                *v = v.min(cap);
            }
        }
    }

    /// Tightens `w[i][τ]` to `exact/2` for each `τ` anticommuting with `σ`,
    /// given `exact ≥ ‖[σ_i, A]‖∞`. Never loosens an entry.
    pub fn seed_from_exact(&mut self, exact: &[(usize, Pauli, f64)]) {
        for &(i, sigma, value) in exact {
            for tau in Pauli::NON_IDENTITY {
                if sigma.anticommutes(tau) {
                    let slot = &mut self.w[i][tau.index()];
                    *slot = slot.min(value / 2.0);
                }
            }
        }
    }

    /// Zeroes the letters of qubit `i` outside `allowed` (bit `σ.index()` per letter).
    pub fn restrict_letters(&mut self, i: usize, allowed: u8) {
        for tau in Pauli::NON_IDENTITY {
            if allowed & (1 << tau.index()) == 0 {
                self.w[i][tau.index()] = 0.0;
            }
        }
    }

    /// `2·Σ_{τ anticommuting with σ} w[i][τ]`, a bound on `‖[σ_i, A]‖∞`.
    pub fn site_bound(&self, qubit: usize, sigma: Pauli) -> f64 {
        let s: f64 = Pauli::NON_IDENTITY
            .iter()
            .filter(|t| sigma.anticommutes(**t))
            .map(|t| self.w[qubit][t.index()])
            .sum();
        (2.0 * s).min(2.0 * self.cap)
    }

    /// Bound on `‖[E, A]‖∞` for a Pauli error, summing site bounds by the
    /// commutator product rule.
    pub fn commutator_bound(&self, error: &PauliString) -> f64 {
        let total: f64 = error.qubits().map(|q| self.site_bound(q, error.letter(q))).sum();
        total.min(2.0 * self.cap)
    }
}

pub fn propagate(bounds: &LocalBounds, gate: &Gate) -> LocalBounds {
    bounds.propagate(gate)
}

pub fn seed_from_exact(bounds: &LocalBounds, exact: &[(usize, Pauli, f64)]) -> LocalBounds {
    let mut out = bounds.clone();
    out.seed_from_exact(exact);
    out
}

pub fn commutator_bound(bounds: &LocalBounds, error: &PauliString) -> f64 {
    bounds.commutator_bound(error)
}

/// Local bounds at every boundary, `table[b]` describing `A^{(b)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsTable {
    pub boundaries: Vec<LocalBounds>,
}

impl BoundsTable {
    /// Backward propagation from the end, letting `refine(b, w)` tighten the
    /// bounds at each boundary before continuing to earlier layers.
    pub fn build(
        circuit: &LayeredCircuit,
        obs: &Observable,
        refine: impl Fn(usize, &mut LocalBounds),
    ) -> Self {
        let depth = circuit.depth();
        let mut current = init_bounds(obs);
        refine(depth, &mut current);
        let mut boundaries = vec![current.clone()];
        for (l, layer) in circuit.layers().iter().enumerate().rev() {
            for gate in layer {
                let touched = gate
                    .qubits
                    .iter()
                    .any(|&q| current.w[q][1..].iter().any(|&v| v != 0.0));
                if touched {
                    current.propagate_in_place(gate, &ptm_abs(gate));
                }
            }
            refine(l, &mut current);
            boundaries.push(current.clone());
        }
        boundaries.reverse();
        BoundsTable { boundaries }
    }

    pub fn at(&self, boundary: usize) -> &LocalBounds {
        &self.boundaries[boundary]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_tfim_1d;
    use crate::pauli::Clifford;

    #[test]
    fn identity_like_gate_has_identity_ptm() {
        let g = Gate::rx(0, 0.0);
        let p = ptm_abs(&g);
        for i in 0..16 {
            for j in 0..16 {
                assert_eq!(p.m[i][j], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn zz_rotation_preserves_z_type_rows() {
        let p = ptm_abs(&Gate::rzz(0, 1, 0.731));
        for a in [0usize, 3] {
            for b in [0usize, 3] {
                let row = 4 * a + b;
                for (j, &v) in p.m[row].iter().enumerate() {
                    assert_eq!(v, if j == row { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn cnot_ptm_is_permutation() {
        let p = ptm_abs(&Gate::clifford(Clifford::CX, &[0, 1]));
        for row in &p.m {
            assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
        // X on the control spreads to the target.
        assert_eq!(p.m[4 * 1][4 * 1 + 1], 1.0);
    }

    #[test]
    fn init_examples() {
        let a = init_bounds(&Observable::pauli(3, "X0".parse().unwrap()));
        assert_eq!(a.w[0], [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(a.w[1], [1.0, 0.0, 0.0, 0.0]);
        let id = init_bounds(&Observable::pauli(2, PauliString::IDENTITY));
        assert!(id.w.iter().all(|r| r == &[1.0, 0.0, 0.0, 0.0]));
        let s = PauliSum::from_real(1, [("X0".parse().unwrap(), 0.5), ("Z0".parse().unwrap(), 0.5)]);
        let b = init_bounds(&Observable::new(s).unwrap());
        assert_eq!(b.w[0], [0.0, 0.5, 0.0, 0.5]);
    }

    #[test]
    fn zz_toy_confinement() {
        let n = 6;
        let c = build_tfim_1d(n, 4, 0.0, 0.9).unwrap();
        let obs = Observable::pauli(n, "X0".parse().unwrap());
        let table = BoundsTable::build(&c, &obs, |_, _| {});
        for b in &table.boundaries {
            for q in 2..n {
                assert_eq!(&b.w[q][1..], &[0.0, 0.0, 0.0]);
            }
        }
        assert_eq!(table.at(0).commutator_bound(&"X5".parse().unwrap()), 0.0);
    }

    #[test]
    fn factor_two_convention() {
        let obs = Observable::pauli(1, "Z0".parse().unwrap());
        assert_eq!(init_bounds(&obs).commutator_bound(&"X0".parse().unwrap()), 2.0);
    }

    #[test]
    fn seeding_only_tightens() {
        let obs = Observable::pauli(2, "Y0".parse().unwrap());
        let b = init_bounds(&obs);
        let s = seed_from_exact(&b, &[(0, Pauli::X, 0.0)]);
        assert_eq!(s.w[0], [0.0, 0.0, 0.0, 0.0]);
        let unchanged = seed_from_exact(&b, &[]);
        assert_eq!(unchanged, b);
        let loose = seed_from_exact(&b, &[(0, Pauli::X, 10.0)]);
        assert_eq!(loose, b);
    }
}
