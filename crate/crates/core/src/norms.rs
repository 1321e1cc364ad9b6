//! Commutator norms that turn evolved errors into bound values.
//!
//! For `ρ = |0⟩⟨0|` the commutator `[E, ρ]` has rank two, so its Schatten
//! norms follow from `s = Σ_{x≠0} |Σ_z c_{x,z} i^{x·z}|²`: nuclear `2√s`,
//! Frobenius `√(2s)`, spectral `√s`. The spectral norm `‖[E, A]‖∞` is found
//! by Lanczos on the Hermitian operator `i[E, A]` restricted to its support.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::Observable;
use crate::pauli::{i_pow, PauliSum};

pub const DEFAULT_N_MAX: u32 = 20;
pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-6;
/// Estimated complex multiply-adds allowed for one spectral-norm evaluation.
pub const DEFAULT_WORK_CAP: f64 = 4e9;

/// Lanczos basis vectors are capped at this many amplitudes in total.
const BASIS_BUDGET: usize = 1 << 24;
/// Per-group diagonals are cached up to this many amplitudes in total.
const DIAGONAL_BUDGET: usize = 1 << 22;
const MAX_KRYLOV: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    ExactNuclear,
    ExactSpectral,
    PauliOneNormFallback,
    Trivial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub method: NormMethod,
}

impl BoundValue {
    /// Caps `value` at `cap`, switching to the trivial tag when the cap binds.
    pub fn capped(value: f64, method: NormMethod, cap: f64) -> Self {
        if value >= cap {
            BoundValue { value: cap, method: NormMethod::Trivial }
        } else {
            BoundValue { value: value.max(0.0), method }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub tol: f64,
    pub n_max: u32,
    pub work_cap: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            tol: DEFAULT_SPECTRAL_TOL,
            n_max: DEFAULT_N_MAX,
            work_cap: DEFAULT_WORK_CAP,
        }
    }
}

/// `s = ‖P⊥ E|0⟩‖²`, computed from the Pauli coefficients without densifying.
pub fn zero_state_s(e: &PauliSum) -> f64 {
    let terms = e.terms();
    let mut s = 0.0;
    let mut i = 0;
    while i < terms.len() {
        let x = terms[i].0.x();
        let mut acc = Complex64::new(0.0, 0.0);
        while i < terms.len() && terms[i].0.x() == x {
            acc += terms[i].1 * i_pow(terms[i].0.y_count());
            i += 1;
        }
        if x != 0 {
            s += acc.norm_sqr();
        }
    }
    s
}

/// `‖[E_I, |0⟩⟨0|]‖₁ = 2√s`, capped at 2.
pub fn nuclear_norm_zero_state(e_i: &PauliSum) -> BoundValue {
    BoundValue::capped(2.0 * zero_state_s(e_i).sqrt(), NormMethod::ExactNuclear, 2.0)
}

/// `i[E, A]`, Hermitian with real coefficients when `E` and `A` are.
pub fn hermitian_commutator(e: &PauliSum, a: &Observable) -> PauliSum {
    e.commutator(a.sum())
        .expect("operator widths agree")
        .scale(Complex64::new(0.0, 1.0))
}

/// Σ|c| of `[E_F, A]`, capped at `2‖A‖`.
pub fn pauli_one_norm_fallback(e_f: &PauliSum, a: &Observable) -> BoundValue {
    let c = hermitian_commutator(e_f, a);
    BoundValue::capped(c.one_norm(), NormMethod::PauliOneNormFallback, 2.0 * a.norm_bound())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralEstimate {
    /// Largest Ritz value magnitude.
    pub value: f64,
    /// Residual norm; an eigenvalue lies within this distance of `value`.
    pub residual: f64,
    pub matvecs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralOutcome {
    Converged(SpectralEstimate),
    /// Support larger than `n_max`, work above the cap, or no convergence.
    FallbackNeeded,
}

/// Largest singular value of `[E_F, A]`.
pub fn spectral_norm_commutator(e_f: &PauliSum, a: &Observable, cfg: &SpectralConfig) -> SpectralOutcome {
    spectral_norm_hermitian(&hermitian_commutator(e_f, a), cfg)
}

/// Spectral norm of a Hermitian Pauli sum (real coefficients).
pub fn spectral_norm_hermitian(h: &PauliSum, cfg: &SpectralConfig) -> SpectralOutcome {
    if h.is_empty() {
        return SpectralOutcome::Converged(SpectralEstimate {
            value: 0.0,
            residual: 0.0,
            matvecs: 0,
        });
    }
    let n = h.support_size();
    if n > cfg.n_max || n >= usize::BITS - 8 {
        return SpectralOutcome::FallbackNeeded;
    }
    let op = ReducedOperator::new(h);
    let dim = op.dim;
    let krylov = MAX_KRYLOV.min(dim).min((BASIS_BUDGET / dim).max(2));
    let max_matvecs = (10 * dim).max(4 * krylov);
    let expected = op.setup_work() + op.matvec_work() * (krylov.min(dim) as f64) * 2.0;
    if expected > cfg.work_cap {
        return SpectralOutcome::FallbackNeeded;
    }
    let budget = ((cfg.work_cap - op.setup_work()) / op.matvec_work()) as usize;
    let op = op.prepared();
    match lanczos_extreme(&op, cfg.tol, max_matvecs.min(budget.max(krylov)), krylov) {
        Some(est) => SpectralOutcome::Converged(est),
        None => SpectralOutcome::FallbackNeeded,
    }
}

/// Best available bound on `‖[E_F, A]‖∞`: exact spectral when the reduced
/// operator fits, otherwise the Pauli one-norm, capped at `2‖A‖`.
pub fn a_side_bound(e_f: &PauliSum, a: &Observable, cfg: &SpectralConfig) -> BoundValue {
    let h = hermitian_commutator(e_f, a);
    let cap = 2.0 * a.norm_bound();
    let one = h.one_norm();
    match spectral_norm_hermitian(&h, cfg) {
        SpectralOutcome::Converged(est) => {
            let upper = est.value + est.residual;
            if upper <= one {
                BoundValue::capped(upper, NormMethod::ExactSpectral, cap)
            } else if est.value >= one * (1.0 - 1e-12) {
                // The one-norm is tight: the spectral value only exceeds it by rounding.
                BoundValue::capped(one, NormMethod::ExactSpectral, cap)
            } else {
                BoundValue::capped(one, NormMethod::PauliOneNormFallback, cap)
            }
        }
        SpectralOutcome::FallbackNeeded => BoundValue::capped(one, NormMethod::PauliOneNormFallback, cap),
    }
}

/// `H = Σ_x X^x D_x` on the `N` support qubits, with `D_x` diagonal.
struct ReducedOperator {
    dim: usize,
    n: u32,
    /// `(x, [(z, coefficient · (−i)^{x·z})])`, compressed to `N` bits.
    groups: Vec<(usize, Vec<(usize, Complex64)>)>,
    diagonals: Option<Vec<Vec<Complex64>>>,
}

fn compress(v: u128, positions: &[u32]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &p)| acc | ((((v >> p) & 1) as usize) << k))
}

impl ReducedOperator {
    fn new(h: &PauliSum) -> Self {
        let mask = h.support_mask();
        let positions: Vec<u32> = (0..128).filter(|&q| (mask >> q) & 1 == 1).collect();
        let n = positions.len() as u32;
        let mut groups: Vec<(usize, Vec<(usize, Complex64)>)> = Vec::new();
        for (s, c) in h.terms() {
            let x = compress(s.x(), &positions);
            let z = compress(s.z(), &positions);
            let phase = i_pow(4 - s.y_count() % 4);
            match groups.last_mut() {
                Some((gx, list)) if *gx == x => list.push((z, c * phase)),
                _ => groups.push((x, vec![(z, c * phase)])),
            }
        }
        ReducedOperator {
            dim: 1 << n,
            n,
            groups,
            diagonals: None,
        }
    }

    fn cache_diagonals(&self) -> bool {
        self.groups.len() * self.dim <= DIAGONAL_BUDGET
    }

    fn setup_work(&self) -> f64 {
        if !self.cache_diagonals() {
            return 0.0;
        }
        self.groups
            .iter()
            .map(|(_, g)| (g.len().min(self.n as usize + 1) * self.dim) as f64)
            .sum()
    }

    fn matvec_work(&self) -> f64 {
        let terms = if self.cache_diagonals() {
            self.groups.len()
        } else {
            self.groups.iter().map(|(_, g)| g.len()).sum()
        };
        (terms.max(1) * self.dim) as f64
    }

    fn prepared(mut self) -> Self {
        if self.cache_diagonals() {
            let diagonals = self.groups.iter().map(|(_, g)| self.diagonal(g)).collect();
            self.diagonals = Some(diagonals);
        }
        self
    }

    /// `D[k] = Σ_z a_z (−1)^{z·k}`.
    fn diagonal(&self, group: &[(usize, Complex64)]) -> Vec<Complex64> {
        if group.len() > self.n as usize {
            let mut d = vec![Complex64::new(0.0, 0.0); self.dim];
            for &(z, a) in group {
                d[z] += a;
            }
            walsh_hadamard(&mut d);
            d
        } else {
            (0..self.dim)
                .map(|k| {
                    group
                        .iter()
                        .map(|&(z, a)| if (z & k).count_ones() % 2 == 0 { a } else { -a })
                        .sum()
                })
                .collect()
        }
    }

    fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        match &self.diagonals {
            Some(diags) => {
                for ((x, _), d) in self.groups.iter().zip(diags) {
                    for (k, o) in out.iter_mut().enumerate() {
                        *o += d[k] * v[k ^ x];
                    }
                }
            }
            None => {
                for (x, group) in &self.groups {
                    for &(z, a) in group {
                        for (k, o) in out.iter_mut().enumerate() {
                            let t = a * v[k ^ x];
                            if (z & k).count_ones() % 2 == 0 {
                                *o += t;
                            } else {
                                *o -= t;
                            }
                        }
                    }
                }
            }
        }
    }
}

fn walsh_hadamard(a: &mut [Complex64]) {
    let mut h = 1;
    while h < a.len() {
        for chunk in a.chunks_mut(2 * h) {
            let (lo, hi) = chunk.split_at_mut(h);
            for (u, v) in lo.iter_mut().zip(hi.iter_mut()) {
                let (p, q) = (*u, *v);
                *u = p + q;
                *v = p - q;
            }
        }
        h *= 2;
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Fixed pseudo-random start vector; SplitMix64 of the index.
fn start_vector(dim: usize) -> Vec<Complex64> {
    let unit = |mut z: u64| {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut v: Vec<Complex64> = (0..dim as u64)
        .map(|k| Complex64::new(unit(2 * k), unit(2 * k + 1)))
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// Restarted Lanczos with full reorthogonalization for the eigenvalue of
/// largest magnitude. Restarts from the current Ritz vector.
fn lanczos_extreme(
    op: &ReducedOperator,
    tol: f64,
    max_matvecs: usize,
    krylov: usize,
) -> Option<SpectralEstimate> {
    let dim = op.dim;
    let mut start = start_vector(dim);
    let mut matvecs = 0;
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    loop {
        let mut basis: Vec<Vec<Complex64>> = vec![start];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut last_beta: f64;
        loop {
            let j = basis.len() - 1;
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            alphas.push(dot(&basis[j], &w).re);
            for _ in 0..2 {
                for b in &basis {
                    let h = dot(b, &w);
                    w.iter_mut().zip(b).for_each(|(x, y)| *x -= h * y);
                }
            }
            let beta = norm(&w);
            let scale = alphas.iter().fold(0.0f64, |m, a| m.max(a.abs())).max(betas.iter().fold(0.0, |m: f64, b| m.max(*b)));
            last_beta = beta;
            if beta <= 1e-13 * scale.max(1e-300) || basis.len() == krylov || basis.len() == dim {
                break;
            }
            betas.push(beta);
            basis.push(w.iter().map(|x| x / beta).collect());
        }
        let k = alphas.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (idx, theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &e)| if e.abs() > best.1.abs() { (i, e) } else { best });
        let y = eig.eigenvectors.column(idx);
        let invariant = k == dim || last_beta <= 1e-13 * theta.abs().max(1e-300);
        let residual = if invariant { 0.0 } else { last_beta * y[k - 1].abs() };
        if invariant || residual <= tol * theta.abs() {
            return Some(SpectralEstimate {
                value: theta.abs(),
                residual,
                matvecs,
            });
        }
        if matvecs >= max_matvecs {
            return None;
        }
        let mut next = vec![Complex64::new(0.0, 0.0); dim];
        for (coef, b) in y.iter().zip(&basis) {
            next.iter_mut().zip(b).for_each(|(x, v)| *x += v * *coef);
        }
        let nn = norm(&next);
        next.iter_mut().for_each(|x| *x /= nn);
        start = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;

    fn sum(n: usize, terms: &[(&str, f64)]) -> PauliSum {
        PauliSum::from_real(n, terms.iter().map(|(s, c)| (s.parse::<PauliString>().unwrap(), *c)))
    }

    #[test]
    fn nuclear_examples() {
        assert_eq!(nuclear_norm_zero_state(&sum(1, &[("X0", 1.0)])).value, 2.0);
        assert_eq!(nuclear_norm_zero_state(&sum(1, &[("Z0", 1.0)])).value, 0.0);
        // Y|0⟩ = i|1⟩.
        assert!((nuclear_norm_zero_state(&sum(2, &[("Y1", 0.6)])).value - 1.2).abs() < 1e-15);
        // (X + Y)/√2 |0⟩ = (1 + i)/√2 |1⟩.
        let v = nuclear_norm_zero_state(&sum(1, &[("X0", 0.5f64.sqrt()), ("Y0", 0.5f64.sqrt())])).value;
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_examples() {
        let cfg = SpectralConfig::default();
        let z = Observable::pauli(2, "Z0".parse().unwrap());
        match spectral_norm_commutator(&sum(2, &[("X0", 1.0)]), &z, &cfg) {
            SpectralOutcome::Converged(e) => assert!((e.value - 2.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        match spectral_norm_commutator(&sum(2, &[("X1", 1.0)]), &z, &cfg) {
            SpectralOutcome::Converged(e) => assert_eq!(e.value, 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fallback_examples() {
        let z = Observable::pauli(1, "Z0".parse().unwrap());
        assert_eq!(pauli_one_norm_fallback(&sum(1, &[("Z0", 1.0)]), &z).value, 0.0);
        assert_eq!(pauli_one_norm_fallback(&sum(1, &[("X0", 1.0)]), &z).value, 2.0);
    }

    #[test]
    fn support_above_n_max_falls_back() {
        let cfg = SpectralConfig { n_max: 1, ..Default::default() };
        let a = Observable::pauli(3, "Z0 Z1".parse().unwrap());
        let out = spectral_norm_commutator(&sum(3, &[("X0 X1 X2", 1.0), ("X0", 0.5)]), &a, &cfg);
        assert_eq!(out, SpectralOutcome::FallbackNeeded);
        let z0 = Observable::pauli(3, "Z0".parse().unwrap());
        let b = a_side_bound(&sum(3, &[("X0", 0.5)]), &z0, &cfg);
        assert_eq!(b.method, NormMethod::ExactSpectral);
    }

    #[test]
    fn walsh_hadamard_matches_definition() {
        let mut a: Vec<Complex64> = (0..8).map(|k| Complex64::new(k as f64, 1.0 - k as f64)).collect();
        let orig = a.clone();
        walsh_hadamard(&mut a);
        for k in 0..8usize {
            let want: Complex64 = (0..8usize)
                .map(|z| if (z & k).count_ones() % 2 == 0 { orig[z] } else { -orig[z] })
                .sum();
            assert!((a[k] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn diagonal_cache_and_direct_paths_agree() {
        let h = sum(
            4,
            &[("X0 Z1", 0.3), ("X0 Z2 Z3", -0.7), ("X0", 0.2), ("X0 Y1", 0.1), ("Z0 Z3", 1.1), ("Y2 Y3", 0.4)],
        );
        let op = ReducedOperator::new(&h);
        let cached = ReducedOperator::new(&h).prepared();
        let v = start_vector(op.dim);
        let mut a = vec![Complex64::new(0.0, 0.0); op.dim];
        let mut b = a.clone();
        op.apply(&v, &mut a);
        cached.apply(&v, &mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
    }
}
