//! Dense reference simulation for small registers.
//!
//! Operators are stored as flat `2^n × 2^n` arrays indexed by `(row << n) | col`,
//! so left and right multiplication by a local gate both reduce to a local
//! action on a subset of index bits.

mod pec;

pub use pec::{pec_records, simulate_pec, PecEstimate, PecSampleRecord, PEC_BLOCK};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Gate, GateKind, LayeredCircuit, NoiseChannel, NoiseModel, Observable};
use crate::error::{Error, Result};
use crate::pauli::{i_pow, Clifford, PauliString, PauliSum};
use crate::shading::ShadedLightcone;

/// Largest register for density-operator oracles.
pub const DENSE_BUDGET: usize = 10;
/// Largest register for statevector sampling.
pub const STATEVECTOR_BUDGET: usize = 12;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

pub fn check_budget(n: usize, max: usize) -> Result<()> {
    if n > max {
        return Err(Error::DenseBudget { n, max });
    }
    Ok(())
}

/// Dense matrix of `σ_{x,z}` on `k` qubits, row-major `2^k × 2^k`.
fn pauli_dense(k: usize, s: &PauliString) -> Vec<C> {
    let dim = 1usize << k;
    let (x, z) = (s.x() as usize, s.z() as usize);
    let ph = i_pow(4 - s.y_count() % 4);
    let mut m = vec![ZERO; dim * dim];
    for row in 0..dim {
        let sign = if (z & row).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        m[row * dim + (row ^ x)] = ph * sign;
    }
    m
}

/// Local unitary of a gate, row-major, with local bit `k` ↔ `gate.qubits[k]`.
pub fn gate_matrix(gate: &Gate) -> Vec<C> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let i = C::new(0.0, 1.0);
    match &gate.kind {
        GateKind::Clifford(c) => match c {
            Clifford::H => vec![ONE * h, ONE * h, ONE * h, -ONE * h],
            Clifford::S => vec![ONE, ZERO, ZERO, i],
            Clifford::Sdg => vec![ONE, ZERO, ZERO, -i],
            Clifford::X => vec![ZERO, ONE, ONE, ZERO],
            Clifford::Y => vec![ZERO, -i, i, ZERO],
            Clifford::Z => vec![ONE, ZERO, ZERO, -ONE],
            Clifford::CX => {
                let mut m = vec![ZERO; 16];
                for l in 0..4usize {
                    let out = if l & 1 == 1 { l ^ 2 } else { l };
                    m[out * 4 + l] = ONE;
                }
                m
            }
            Clifford::CZ => {
                let mut m = vec![ZERO; 16];
                for l in 0..4 {
                    m[l * 4 + l] = if l == 3 { -ONE } else { ONE };
                }
                m
            }
        },
        GateKind::Rotation { theta, .. } => {
            let k = gate.arity();
            let local = gate.localized();
            let GateKind::Rotation { axis, .. } = &local.kind else {
                unreachable!()
            };
            let p = pauli_dense(k, axis);
            let dim = 1 << k;
            let (s, c) = (theta / 2.0).sin_cos();
            (0..dim * dim)
                .map(|idx| {
                    let id = if idx / dim == idx % dim { c } else { 0.0 };
                    C::new(id, 0.0) - i * s * p[idx]
                })
                .collect()
        }
    }
}

fn conj_all(m: &[C]) -> Vec<C> {
    m.iter().map(|v| v.conj()).collect()
}

fn transpose(m: &[C], dim: usize) -> Vec<C> {
    (0..dim * dim).map(|idx| m[(idx % dim) * dim + idx / dim]).collect()
}

/// `data ← (M acting on the index bits `positions`) data`.
fn apply_local(data: &mut [C], positions: &[usize], m: &[C]) {
    let k = positions.len();
    let dim = 1usize << k;
    let mask: usize = positions.iter().fold(0, |a, &p| a | (1 << p));
    let offsets: Vec<usize> = (0..dim)
        .map(|l| (0..k).fold(0, |a, b| a | (((l >> b) & 1) << positions[b])))
        .collect();
    let mut buf = vec![ZERO; dim];
    for base in 0..data.len() {
        if base & mask != 0 {
            continue;
        }
        for (l, &o) in offsets.iter().enumerate() {
            buf[l] = data[base | o];
        }
        for (r, &o) in offsets.iter().enumerate() {
            let row = &m[r * dim..(r + 1) * dim];
            data[base | o] = row.iter().zip(&buf).map(|(a, b)| a * b).sum();
        }
    }
}

/// `(σ_{x,z} v)[k] = (−i)^{x·z} (−1)^{z·k} v[k ⊕ x]` on a flat vector.
fn apply_pauli_bits(data: &mut [C], x: usize, z: usize, phase: C) {
    let old = data.to_vec();
    for (k, d) in data.iter_mut().enumerate() {
        let sign = if (z & k).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        *d = phase * sign * old[k ^ x];
    }
}

/// A `2^n × 2^n` operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOp {
    pub n: usize,
    pub data: Vec<C>,
}

impl DenseOp {
    pub fn zero_state(n: usize) -> Self {
        let mut data = vec![ZERO; 1 << (2 * n)];
        data[0] = ONE;
        DenseOp { n, data }
    }

    pub fn from_pauli_sum(sum: &PauliSum) -> Self {
        let n = sum.n_qubits();
        let dim = 1usize << n;
        let mut data = vec![ZERO; dim * dim];
        for (s, c) in sum.terms() {
            let (x, z) = (s.x() as usize, s.z() as usize);
            let ph = i_pow(4 - s.y_count() % 4) * c;
            for row in 0..dim {
                let sign = if (z & row).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                data[(row << n) | (row ^ x)] += ph * sign;
            }
        }
        DenseOp { n, data }
    }

    pub fn to_matrix(&self) -> DMatrix<C> {
        let dim = 1 << self.n;
        DMatrix::from_row_slice(dim, dim, &self.data)
    }

    pub fn from_matrix(m: &DMatrix<C>) -> Self {
        let dim = m.nrows();
        let n = dim.trailing_zeros() as usize;
        let data = (0..dim * dim).map(|idx| m[(idx / dim, idx % dim)]).collect();
        DenseOp { n, data }
    }

    fn row_bits(&self, qubits: &[usize]) -> Vec<usize> {
        qubits.iter().map(|q| q + self.n).collect()
    }

    /// `U M U†`.
    pub fn conjugate_forward(&mut self, gate: &Gate) {
        let u = gate_matrix(gate);
        let rows = self.row_bits(&gate.qubits);
        apply_local(&mut self.data, &rows, &u);
        apply_local(&mut self.data, &gate.qubits, &conj_all(&u));
    }

    /// `U† M U`.
    pub fn conjugate_backward(&mut self, gate: &Gate) {
        let u = gate_matrix(gate);
        let dim = 1 << gate.arity();
        let udag = conj_all(&transpose(&u, dim));
        let rows = self.row_bits(&gate.qubits);
        apply_local(&mut self.data, &rows, &udag);
        apply_local(&mut self.data, &gate.qubits, &transpose(&u, dim));
    }

    /// `P M P`.
    pub fn pauli_sandwich(&mut self, p: &PauliString) {
        let (x, z) = (p.x() as usize, p.z() as usize);
        let n = self.n;
        apply_pauli_bits(&mut self.data, (x << n) | x, (z << n) | z, ONE);
    }

    /// `(1−p) M + p σMσ`; self-dual, so it serves both pictures.
    pub fn pauli_channel(&mut self, p: &PauliString, prob: f64) {
        let mut flipped = self.clone();
        flipped.pauli_sandwich(p);
        for (a, b) in self.data.iter_mut().zip(&flipped.data) {
            *a = *a * (1.0 - prob) + b * prob;
        }
    }

    /// `Tr(A M)` for a Pauli sum `A`.
    pub fn trace_with(&self, a: &PauliSum) -> C {
        let n = self.n;
        let dim = 1usize << n;
        let mut acc = ZERO;
        for (s, c) in a.terms() {
            let (x, z) = (s.x() as usize, s.z() as usize);
            let ph = i_pow(4 - s.y_count() % 4) * c;
            for i in 0..dim {
                let sign = if (z & i).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                acc += ph * sign * self.data[((i ^ x) << n) | i];
            }
        }
        acc
    }

    pub fn spectral_norm(&self) -> f64 {
        let m = self.to_matrix();
        m.singular_values().max()
    }
}

/// Pure state vector, `2^n` amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    pub n: usize,
    pub amps: Vec<C>,
}

impl DenseState {
    pub fn zero(n: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        DenseState { n, amps }
    }

    pub fn apply_gate(&mut self, gate: &Gate) {
        apply_local(&mut self.amps, &gate.qubits, &gate_matrix(gate));
    }

    pub fn apply_gate_matrix(&mut self, qubits: &[usize], m: &[C]) {
        apply_local(&mut self.amps, qubits, m);
    }

    pub fn apply_pauli(&mut self, p: &PauliString) {
        apply_pauli_bits(&mut self.amps, p.x() as usize, p.z() as usize, i_pow(4 - p.y_count() % 4));
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, a: &PauliSum) -> f64 {
        let mut acc = ZERO;
        for (s, c) in a.terms() {
            let mut v = self.clone();
            v.apply_pauli(s);
            let inner: C = self.amps.iter().zip(&v.amps).map(|(p, q)| p.conj() * q).sum();
            acc += inner * c;
        }
        acc.re
    }
}

fn channels_at<'a>(channels: &'a [&'a NoiseChannel], b: usize) -> impl Iterator<Item = &'a NoiseChannel> + 'a {
    channels.iter().copied().filter(move |c| c.layer == b)
}

/// Density-operator evolution from `|0⟩⟨0|` through every gate and through
/// the listed channels at their boundaries.
pub fn evolve_density(circuit: &LayeredCircuit, channels: &[&NoiseChannel]) -> Result<DenseOp> {
    let n = circuit.n_qubits();
    check_budget(n, DENSE_BUDGET)?;
    let mut rho = DenseOp::zero_state(n);
    for (b, layer) in circuit.layers().iter().enumerate() {
        for ch in channels_at(channels, b) {
            rho.pauli_channel(&ch.pauli, ch.probability());
        }
        for g in layer {
            rho.conjugate_forward(g);
        }
    }
    for ch in channels_at(channels, circuit.depth()) {
        rho.pauli_channel(&ch.pauli, ch.probability());
    }
    Ok(rho)
}

/// `Tr(A ρ_F)` with every channel of the noise model active.
pub fn exact_expectation(circuit: &LayeredCircuit, noise: &NoiseModel, obs: &Observable) -> Result<f64> {
    let all: Vec<&NoiseChannel> = noise.channels().iter().collect();
    Ok(evolve_density(circuit, &all)?.trace_with(obs.sum()).re)
}

/// `Tr(A ρ_F)` with only the channels flagged in `present` active.
pub fn expectation_with(
    circuit: &LayeredCircuit,
    noise: &NoiseModel,
    present: &[bool],
    obs: &Observable,
) -> Result<f64> {
    let chosen: Vec<&NoiseChannel> = noise
        .channels()
        .iter()
        .filter(|c| present[c.id])
        .collect();
    Ok(evolve_density(circuit, &chosen)?.trace_with(obs.sum()).re)
}

/// Noiseless expectation via a state vector.
pub fn ideal_expectation(circuit: &LayeredCircuit, obs: &Observable) -> Result<f64> {
    check_budget(circuit.n_qubits(), STATEVECTOR_BUDGET)?;
    let mut psi = DenseState::zero(circuit.n_qubits());
    for layer in circuit.layers() {
        for g in layer {
            psi.apply_gate(g);
        }
    }
    Ok(psi.expectation(obs.sum()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimePoint {
    Initial,
    Middle,
    Final,
}

fn commutator(a: &DenseOp, b: &DenseOp) -> DMatrix<C> {
    let (ma, mb) = (a.to_matrix(), b.to_matrix());
    &ma * &mb - &mb * &ma
}

/// `Tr([E_t, ρ_t][E_t, A_t])/2` with each operator evolved to time `t`
/// separately. `context` channels at boundaries `≤ channel.layer` act on the
/// state side, later ones on the observable side. All three time points
/// agree when the evolution of `E` crosses no noise.
pub fn exact_channel_bias_at(
    circuit: &LayeredCircuit,
    obs: &Observable,
    channel: &NoiseChannel,
    context: &[&NoiseChannel],
    t: TimePoint,
) -> Result<f64> {
    let n = circuit.n_qubits();
    check_budget(n, DENSE_BUDGET)?;
    let b = channel.layer;
    let depth = circuit.depth();
    let before: Vec<&NoiseChannel> = context.iter().copied().filter(|c| c.layer <= b).collect();
    let after: Vec<&NoiseChannel> = context.iter().copied().filter(|c| c.layer > b).collect();
    let e_sum = PauliSum::from_real(n, [(channel.pauli, 1.0)]);

    // Schrödinger evolution of `m` across boundaries [from, to), applying the
    // listed channels at each boundary before the layer that follows it.
    let forward = |m: &mut DenseOp, from: usize, to: usize, chans: &[&NoiseChannel]| {
        for l in from..to {
            for ch in channels_at(chans, l) {
                m.pauli_channel(&ch.pauli, ch.probability());
            }
            for g in &circuit.layers()[l] {
                m.conjugate_forward(g);
            }
        }
    };
    // Heisenberg evolution of `m` from boundary `from` down to `to`.
    let backward = |m: &mut DenseOp, from: usize, to: usize, chans: &[&NoiseChannel], include_from: bool| {
        if include_from {
            for ch in channels_at(chans, from) {
                m.pauli_channel(&ch.pauli, ch.probability());
            }
        }
        for l in (to..from).rev() {
            for g in &circuit.layers()[l] {
                m.conjugate_backward(g);
            }
            for ch in channels_at(chans, l) {
                m.pauli_channel(&ch.pauli, ch.probability());
            }
        }
    };

    let (e, rho, a) = match t {
        TimePoint::Middle => {
            let mut rho = DenseOp::zero_state(n);
            forward(&mut rho, 0, b, &before);
            for ch in channels_at(&before, b) {
                rho.pauli_channel(&ch.pauli, ch.probability());
            }
            let mut a = DenseOp::from_pauli_sum(obs.sum());
            backward(&mut a, depth, b, &after, true);
            (DenseOp::from_pauli_sum(&e_sum), rho, a)
        }
        TimePoint::Final => {
            let mut rho = DenseOp::zero_state(n);
            forward(&mut rho, 0, b, &before);
            for ch in channels_at(&before, b) {
                rho.pauli_channel(&ch.pauli, ch.probability());
            }
            let mut e = DenseOp::from_pauli_sum(&e_sum);
            // E crosses the same later channels as ρ.
            for m in [&mut rho, &mut e] {
                forward(m, b, depth, &after);
                if b < depth {
                    for ch in channels_at(&after, depth) {
                        m.pauli_channel(&ch.pauli, ch.probability());
                    }
                }
            }
            (e, rho, DenseOp::from_pauli_sum(obs.sum()))
        }
        TimePoint::Initial => {
            let mut e = DenseOp::from_pauli_sum(&e_sum);
            backward(&mut e, b, 0, &before, true);
            let mut a = DenseOp::from_pauli_sum(obs.sum());
            backward(&mut a, depth, 0, &context.to_vec(), true);
            (e, DenseOp::zero_state(n), a)
        }
    };
    let prod = commutator(&e, &rho) * commutator(&e, &a);
    Ok((prod.trace() / 2.0).re)
}

/// Bias from a single Pauli error with no other noise: `Tr(A E ρ E) − Tr(A ρ)`
/// evaluated at time `t`.
pub fn exact_channel_bias(
    circuit: &LayeredCircuit,
    obs: &Observable,
    channel: &NoiseChannel,
    t: TimePoint,
) -> Result<f64> {
    exact_channel_bias_at(circuit, obs, channel, &[], t)
}

/// Dense `U† A U` for the gates after boundary `from`.
pub fn heisenberg_observable(circuit: &LayeredCircuit, obs: &Observable, from: usize) -> Result<DenseOp> {
    check_budget(circuit.n_qubits(), DENSE_BUDGET)?;
    let mut a = DenseOp::from_pauli_sum(obs.sum());
    for layer in circuit.layers()[from..].iter().rev() {
        for g in layer {
            a.conjugate_backward(g);
        }
    }
    Ok(a)
}

/// `‖A_{σ,[i]}‖∞` for `A^{(b)}` and every qubit `i` and letter `σ`, with
/// `A_{σ,[i]} = Tr_i(σ_i A)/2`.
pub fn exact_component_norms(circuit: &LayeredCircuit, obs: &Observable, from: usize) -> Result<Vec<[f64; 4]>> {
    let a = heisenberg_observable(circuit, obs, from)?;
    Ok(component_norms(&a))
}

pub fn component_norms(a: &DenseOp) -> Vec<[f64; 4]> {
    let n = a.n;
    let dim = 1usize << n;
    let half = dim / 2;
    let letters = [
        PauliString::IDENTITY,
        PauliString::single(0, crate::Pauli::X),
        PauliString::single(0, crate::Pauli::Y),
        PauliString::single(0, crate::Pauli::Z),
    ];
    let sigmas: Vec<Vec<C>> = letters.iter().map(|s| pauli_dense(1, s)).collect();
    (0..n)
        .map(|q| {
            let split = |idx: usize| -> (usize, usize) {
                let bit = (idx >> q) & 1;
                let low = idx & ((1 << q) - 1);
                let high = idx >> (q + 1);
                (bit, low | (high << q))
            };
            let mut out = [0.0; 4];
            for (li, sigma) in sigmas.iter().enumerate() {
                let mut m = DMatrix::<C>::zeros(half.max(1), half.max(1));
                for row in 0..dim {
                    let (br, r) = split(row);
                    for col in 0..dim {
                        let (bc, c) = split(col);
                        let v = a.data[(row << n) | col];
                        if v == ZERO {
                            continue;
                        }
                        // Σ_{a,b} σ[a,b] A[(b,r),(a,s)]
                        m[(r, c)] += sigma[bc * 2 + br] * v;
                    }
                }
                out[li] = (m / C::new(2.0, 0.0)).singular_values().max();
            }
            out
        })
        .collect()
}

/// Per-channel oracle record for a shaded lightcone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelCheck {
    pub id: usize,
    pub incremental_bias: f64,
    pub bound: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub channels: Vec<ChannelCheck>,
    pub ideal: f64,
    pub noisy: f64,
    pub total_bias: f64,
    pub total_bound: f64,
    pub violations: usize,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Inserts channels one at a time in the lightcone's insertion order and
/// compares each increment `|⟨A⟩_j − ⟨A⟩_{j−1}|` with `p·c`, then the total
/// bias with `Σ p·c`. `slack` absorbs floating-point noise.
pub fn verify_lightcone(
    circuit: &LayeredCircuit,
    noise: &NoiseModel,
    obs: &Observable,
    lc: &ShadedLightcone,
    slack: f64,
) -> Result<VerificationReport> {
    check_budget(circuit.n_qubits(), DENSE_BUDGET)?;
    if lc.channels.len() != noise.len() {
        return Err(Error::Usage(format!(
            "lightcone has {} channels but the noise model has {}",
            lc.channels.len(),
            noise.len()
        )));
    }
    let mut present = vec![false; noise.len()];
    let ideal = expectation_with(circuit, noise, &present, obs)?;
    let mut prev = ideal;
    let mut checks = vec![None; noise.len()];
    let mut violations = 0;
    for id in lc.insertion_order() {
        present[id] = true;
        let next = expectation_with(circuit, noise, &present, obs)?;
        let inc = (next - prev).abs();
        let bound = noise.channels()[id].probability() * lc.channels[id].c;
        if inc > bound + slack {
            violations += 1;
        }
        checks[id] = Some(ChannelCheck {
            id,
            incremental_bias: inc,
            bound,
            margin: bound - inc,
        });
        prev = next;
    }
    let total_bound = crate::shading::total_bias_bound(lc, &noise.rates());
    let total_bias = (prev - ideal).abs();
    if total_bias > total_bound + slack {
        violations += 1;
    }
    Ok(VerificationReport {
        channels: checks.into_iter().map(|c| c.expect("every channel inserted")).collect(),
        ideal,
        noisy: prev,
        total_bias,
        total_bound,
        violations,
    })
}
