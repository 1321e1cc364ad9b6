//! Monte-Carlo probabilistic error cancellation on a state vector.
//!
//! Each shot samples the hardware channels at `p(λ)` and the antinoise
//! channels at `p(λ*)`. Every antinoise firing flips the sign of the shot, and
//! the shot value is `γ · sign · outcome` with `γ = e^{2Σλ*}`, so the estimator
//! is unbiased for the expectation under rates `λ − λ*`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_budget, DenseState, STATEVECTOR_BUDGET};
use crate::allocation::p_of;
use crate::circuit::{LayeredCircuit, NoiseModel, Observable};
use crate::error::{Error, Result};

/// Shots per independently seeded block.
pub const PEC_BLOCK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PecSampleRecord {
    pub sign: i8,
    pub value: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PecEstimate {
    pub mean: f64,
    /// Unbiased per-shot sample variance.
    pub variance: f64,
    pub gamma: f64,
    pub shots: usize,
}

impl PecEstimate {
    pub fn std_error(&self) -> f64 {
        (self.variance / self.shots as f64).sqrt()
    }
}

/// Samples the set of fired channels: Poisson arrivals with hazard
/// `−ln(1 − p_k)` per channel, located by walking exponential gaps through the
/// cumulative hazard. A channel fires when it receives at least one arrival.
struct FiringSampler {
    cumulative: Vec<f64>,
}

impl FiringSampler {
    fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|&p| {
                acc += -(-p).ln_1p();
                acc
            })
            .collect();
        FiringSampler { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng, fired: &mut [bool]) -> usize {
        let total = self.cumulative.last().copied().unwrap_or(0.0);
        let mut t = 0.0;
        let mut count = 0;
        loop {
            let u: f64 = rng.random();
            t += -(1.0 - u).ln();
            if t >= total {
                return count;
            }
            let k = self.cumulative.partition_point(|&c| c <= t);
            if !fired[k] {
                fired[k] = true;
                count += 1;
            }
        }
    }
}

struct Setup<'a> {
    circuit: &'a LayeredCircuit,
    noise: &'a NoiseModel,
    obs: &'a Observable,
    hardware: FiringSampler,
    antinoise: FiringSampler,
    gamma: f64,
}

impl Setup<'_> {
    fn trajectory(&self, pattern: &[usize]) -> f64 {
        let channels = self.noise.channels();
        let mut psi = DenseState::zero(self.circuit.n_qubits());
        let mut next = 0;
        for b in 0..=self.circuit.depth() {
            while next < pattern.len() && channels[pattern[next]].layer == b {
                psi.apply_pauli(&channels[pattern[next]].pauli);
                next += 1;
            }
            if b < self.circuit.depth() {
                for g in &self.circuit.layers()[b] {
                    psi.apply_gate(g);
                }
            }
        }
        psi.expectation(self.obs.sum())
    }

    fn block(&self, seed: u64, block: usize, shots: usize, mut sink: impl FnMut(PecSampleRecord)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block as u64);
        let m = self.noise.len();
        let mut hw = vec![false; m];
        let mut anti = vec![false; m];
        let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
        // Boundary order for applying Paulis; same-boundary Paulis commute up to sign,
        // which cancels in the sandwich.
        let mut by_time: Vec<usize> = (0..m).collect();
        by_time.sort_by_key(|&k| (self.noise.channels()[k].layer, k));
        for _ in 0..shots {
            hw.iter_mut().for_each(|f| *f = false);
            anti.iter_mut().for_each(|f| *f = false);
            self.hardware.sample(&mut rng, &mut hw);
            let flips = self.antinoise.sample(&mut rng, &mut anti);
            let pattern: Vec<usize> = by_time.iter().copied().filter(|&k| hw[k] != anti[k]).collect();
            let e = *cache.entry(pattern).or_insert_with_key(|p| self.trajectory(p));
            let u: f64 = rng.random();
            let outcome = if u < (1.0 + e) / 2.0 { 1.0 } else { -1.0 };
            let sign: i8 = if flips % 2 == 0 { 1 } else { -1 };
            sink(PecSampleRecord {
                sign,
                value: self.gamma * sign as f64 * outcome,
                seed,
            });
        }
    }
}

fn setup<'a>(
    circuit: &'a LayeredCircuit,
    noise: &'a NoiseModel,
    lambda_star: &[f64],
    obs: &'a Observable,
) -> Result<Setup<'a>> {
    check_budget(circuit.n_qubits(), STATEVECTOR_BUDGET)?;
    if lambda_star.len() != noise.len() {
        return Err(Error::Usage(format!(
            "{} antinoise rates for {} channels",
            lambda_star.len(),
            noise.len()
        )));
    }
    for (&s, ch) in lambda_star.iter().zip(noise.channels()) {
        if !(s >= 0.0 && s <= ch.lambda) {
            return Err(Error::Usage(format!(
                "antinoise rate {s} for channel {} is outside [0, {}]",
                ch.id, ch.lambda
            )));
        }
    }
    let terms: Vec<_> = obs.real_terms().collect();
    if terms.len() != 1 || (terms[0].1.abs() - 1.0).abs() > 1e-12 {
        return Err(Error::Usage("sampling needs a single-Pauli observable with unit coefficient".into()));
    }
    let hw: Vec<f64> = noise.channels().iter().map(|c| c.probability()).collect();
    let anti: Vec<f64> = lambda_star.iter().map(|&s| p_of(s)).collect();
    Ok(Setup {
        circuit,
        noise,
        obs,
        hardware: FiringSampler::new(&hw),
        antinoise: FiringSampler::new(&anti),
        gamma: (2.0 * lambda_star.iter().sum::<f64>()).exp(),
    })
}

/// Mean and variance of `shots` PEC samples. Deterministic in `seed`
/// regardless of thread count: blocks are seeded independently and reduced
/// in order.
pub fn simulate_pec(
    circuit: &LayeredCircuit,
    noise: &NoiseModel,
    lambda_star: &[f64],
    obs: &Observable,
    shots: usize,
    seed: u64,
) -> Result<PecEstimate> {
    if shots < 2 {
        return Err(Error::Usage("at least two shots are needed".into()));
    }
    let s = setup(circuit, noise, lambda_star, obs)?;
    let blocks: Vec<(usize, usize)> = (0..shots.div_ceil(PEC_BLOCK))
        .map(|b| (b, PEC_BLOCK.min(shots - b * PEC_BLOCK)))
        .collect();
    let partial = crate::par_map(&blocks, |&(b, n)| {
        let (mut sum, mut sq) = (0.0, 0.0);
        s.block(seed, b, n, |r| {
            sum += r.value;
            sq += r.value * r.value;
        });
        (sum, sq)
    });
    let (sum, sq) = partial.iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let n = shots as f64;
    let mean = sum / n;
    Ok(PecEstimate {
        mean,
        variance: ((sq - n * mean * mean) / (n - 1.0)).max(0.0),
        gamma: s.gamma,
        shots,
    })
}

/// Individual sample records, for inspection.
pub fn pec_records(
    circuit: &LayeredCircuit,
    noise: &NoiseModel,
    lambda_star: &[f64],
    obs: &Observable,
    shots: usize,
    seed: u64,
) -> Result<Vec<PecSampleRecord>> {
    let s = setup(circuit, noise, lambda_star, obs)?;
    let mut out = Vec::with_capacity(shots);
    let mut b = 0;
    while out.len() < shots {
        let n = PEC_BLOCK.min(shots - out.len());
        s.block(seed, b, n, |r| out.push(r));
        b += 1;
    }
    Ok(out)
}
