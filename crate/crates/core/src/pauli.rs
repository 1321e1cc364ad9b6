//! Sparse Pauli operators in symplectic form.
//!
//! A Pauli string is stored as two packed bitmasks `(x, z)` and denotes the
//! Hermitian operator `σ_{x,z} = (-i)^{x·z} Z^z X^x`. With this phase
//! convention a Pauli sum is Hermitian exactly when every coefficient is
//! real, and a string factorizes as the tensor product of its single-qubit
//! letters.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of the packed bitmasks.
pub const MAX_QUBITS: usize = 128;

/// Terms with a smaller magnitude are dropped by [`PauliSum::prune`].
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Angles closer than this to a multiple of π/2 are treated as exact
/// quarter turns, so Clifford rotations never leave floating-point dust.
const QUARTER_TURN_SNAP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    pub const NON_IDENTITY: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Pauli {
        Pauli::ALL[i & 3]
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn anticommutes(self, other: Pauli) -> bool {
        self != Pauli::I && other != Pauli::I && self != other
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// Powers of `i`, indexed mod 4.
pub fn i_pow(k: u32) -> Complex64 {
    match k & 3 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// An unsigned Pauli string `σ_{x,z}`; bit `q` of each mask refers to qubit `q`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliString {
    x: u128,
    z: u128,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn new(x: u128, z: u128) -> Self {
        PauliString { x, z }
    }

    pub fn single(qubit: usize, letter: Pauli) -> Self {
        PauliString::IDENTITY.with_letter(qubit, letter)
    }

    pub fn from_letters(letters: &[(usize, Pauli)]) -> Self {
        letters
            .iter()
            .fold(PauliString::IDENTITY, |s, &(q, p)| s.with_letter(q, p))
    }

    pub fn x(&self) -> u128 {
        self.x
    }

    pub fn z(&self) -> u128 {
        self.z
    }

    pub fn letter(&self, qubit: usize) -> Pauli {
        Pauli::from_bits((self.x >> qubit) & 1 == 1, (self.z >> qubit) & 1 == 1)
    }

    pub fn with_letter(self, qubit: usize, letter: Pauli) -> Self {
        let bit = 1u128 << qubit;
        let (x, z) = letter.bits();
        PauliString {
            x: if x { self.x | bit } else { self.x & !bit },
            z: if z { self.z | bit } else { self.z & !bit },
        }
    }

    /// Qubits carrying a non-identity letter.
    pub fn support(&self) -> u128 {
        self.x | self.z
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.support() == 0
    }

    /// Number of `Y` letters, i.e. `x·z`.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn commutes(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Product `self · other = i^k σ`, returned as `(k mod 4, σ)`.
    pub fn mul(&self, other: &PauliString) -> (u32, PauliString) {
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let out = PauliString { x, z };
        // (-i)^{a1} (-i)^{a2} (-1)^{x1·z2} i^{a3}
        let k = 4 * 128 + 2 * (self.x & other.z).count_ones() + out.y_count()
            - self.y_count()
            - other.y_count();
        (k % 4, out)
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> {
        let mut mask = self.support();
        std::iter::from_fn(move || {
            if mask == 0 {
                None
            } else {
                let q = mask.trailing_zeros() as usize;
                mask &= mask - 1;
                Some(q)
            }
        })
    }

    /// Sparse label such as `X0 Y3 Z7`; the identity prints as `I`.
    pub fn label(&self) -> String {
        if self.is_identity() {
            return "I".to_string();
        }
        self.qubits()
            .map(|q| format!("{}{}", self.letter(q), q))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Letters on `qubits`, in order, e.g. `"XZ"`.
    pub fn letters_on(&self, qubits: &[usize]) -> String {
        qubits.iter().map(|&q| self.letter(q).to_char()).collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses sparse labels: `X0 Y3`, `X0Y3`, `x_0*z_2` or a bare `I`.
impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidPauli(s.to_string());
        let trimmed = s.trim();
        if trimmed.eq_ignore_ascii_case("I") || trimmed.is_empty() {
            return Ok(PauliString::IDENTITY);
        }
        let mut out = PauliString::IDENTITY;
        let mut chars = trimmed.chars().peekable();
        while let Some(c) = chars.next() {
            if c.is_whitespace() || c == '*' {
                continue;
            }
            let letter = Pauli::from_char(c).ok_or_else(bad)?;
            if chars.peek() == Some(&'_') {
                chars.next();
            }
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            let q: usize = digits.parse().map_err(|_| bad())?;
            if q >= MAX_QUBITS || out.letter(q) != Pauli::I {
                return Err(bad());
            }
            out = out.with_letter(q, letter);
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Schrödinger-picture motion toward the end of the circuit: `U Q U†`.
    Forward,
    /// Heisenberg-picture motion toward the start: `U† Q U`.
    Backward,
}

/// Named Clifford gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Clifford {
    H,
    S,
    Sdg,
    X,
    Y,
    Z,
    CX,
    CZ,
}

impl Clifford {
    pub fn arity(self) -> usize {
        match self {
            Clifford::CX | Clifford::CZ => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Clifford::H => "h",
            Clifford::S => "s",
            Clifford::Sdg => "sdg",
            Clifford::X => "x",
            Clifford::Y => "y",
            Clifford::Z => "z",
            Clifford::CX => "cx",
            Clifford::CZ => "cz",
        }
    }

    /// Quarter-turn decomposition, listed in order of application to the state:
    /// `U ∝ R_{P_m}(k_m π/2) ⋯ R_{P_1}(k_1 π/2)`.
    fn quarter_turns(self, qubits: &[usize]) -> Vec<(PauliString, u32)> {
        let a = qubits[0];
        let on = |q: usize, p: Pauli| PauliString::single(q, p);
        match self {
            Clifford::X => vec![(on(a, Pauli::X), 2)],
            Clifford::Y => vec![(on(a, Pauli::Y), 2)],
            Clifford::Z => vec![(on(a, Pauli::Z), 2)],
            Clifford::S => vec![(on(a, Pauli::Z), 1)],
            Clifford::Sdg => vec![(on(a, Pauli::Z), 3)],
            // H = X · R_Y(π/2)
            Clifford::H => vec![(on(a, Pauli::Y), 1), (on(a, Pauli::X), 2)],
            // CX = exp(iπ/4 (1 - Z_c)(1 - X_t))
            Clifford::CX => {
                let t = qubits[1];
                vec![
                    (on(a, Pauli::Z), 1),
                    (on(t, Pauli::X), 1),
                    (PauliString::from_letters(&[(a, Pauli::Z), (t, Pauli::X)]), 3),
                ]
            }
            Clifford::CZ => {
                let b = qubits[1];
                vec![
                    (on(a, Pauli::Z), 1),
                    (on(b, Pauli::Z), 1),
                    (PauliString::from_letters(&[(a, Pauli::Z), (b, Pauli::Z)]), 3),
                ]
            }
        }
    }
}

impl FromStr for Clifford {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "h" => Clifford::H,
            "s" => Clifford::S,
            "sdg" => Clifford::Sdg,
            "x" => Clifford::X,
            "y" => Clifford::Y,
            "z" => Clifford::Z,
            "cx" | "cnot" => Clifford::CX,
            "cz" => Clifford::CZ,
            _ => return Err(Error::UnknownGate(s.to_string())),
        })
    }
}

/// Conjugation of a single Pauli by `R_P(kπ/2)`; `None` when `P` commutes with it.
fn quarter_turn(
    s: &PauliString,
    axis: &PauliString,
    turns: u32,
    direction: Direction,
) -> Option<(PauliString, Complex64)> {
    if axis.commutes(s) || turns % 4 == 0 {
        return None;
    }
    match turns % 4 {
        2 => Some((*s, Complex64::new(-1.0, 0.0))),
        k => {
            // Backward: R†QR = cos θ Q + sin θ (iPQ); forward flips the sign of θ.
            let sign = match (k, direction) {
                (1, Direction::Backward) | (3, Direction::Forward) => 1.0,
                _ => -1.0,
            };
            let (phase, prod) = axis.mul(s);
            Some((prod, i_pow(phase + 1) * sign))
        }
    }
}

/// A Pauli string with a complex coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub n_qubits: usize,
    pub string: PauliString,
    pub coeff: Complex64,
}

impl PauliTerm {
    pub fn new(n_qubits: usize, string: PauliString, coeff: Complex64) -> Self {
        PauliTerm {
            n_qubits,
            string,
            coeff,
        }
    }

    pub fn unit(n_qubits: usize, string: PauliString) -> Self {
        Self::new(n_qubits, string, Complex64::new(1.0, 0.0))
    }
}

fn check_same(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::QubitMismatch { left: a, right: b });
    }
    Ok(())
}

/// Pauli-group product with the correct phase.
pub fn multiply(p: &PauliTerm, q: &PauliTerm) -> Result<PauliTerm> {
    check_same(p.n_qubits, q.n_qubits)?;
    let (k, s) = p.string.mul(&q.string);
    Ok(PauliTerm::new(p.n_qubits, s, p.coeff * q.coeff * i_pow(k)))
}

pub fn commutes(p: &PauliTerm, q: &PauliTerm) -> Result<bool> {
    check_same(p.n_qubits, q.n_qubits)?;
    Ok(p.string.commutes(&q.string))
}

/// A linear combination of Pauli strings, kept sorted by `(x, z)` with no
/// duplicate keys and no zero coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(PauliString, Complex64)>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: Vec::new(),
        }
    }

    pub fn from_term(term: &PauliTerm) -> Self {
        Self::from_terms(term.n_qubits, [(term.string, term.coeff)])
    }

    pub fn from_terms(
        n_qubits: usize,
        terms: impl IntoIterator<Item = (PauliString, Complex64)>,
    ) -> Self {
        let mut sum = PauliSum {
            n_qubits,
            terms: terms.into_iter().collect(),
        };
        sum.canonicalize();
        sum
    }

    /// Real-coefficient sum, e.g. an observable.
    pub fn from_real(n_qubits: usize, terms: impl IntoIterator<Item = (PauliString, f64)>) -> Self {
        Self::from_terms(
            n_qubits,
            terms.into_iter().map(|(s, c)| (s, Complex64::new(c, 0.0))),
        )
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(PauliString, Complex64)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Boolean-array footprint: two bits per qubit per term.
    pub fn size_statistic(&self) -> usize {
        2 * self.n_qubits * self.terms.len()
    }

    /// Largest number of non-identity letters in any single term.
    pub fn max_term_weight(&self) -> u32 {
        self.terms.iter().map(|(s, _)| s.weight()).max().unwrap_or(0)
    }

    /// Union of the supports of all terms.
    pub fn support_mask(&self) -> u128 {
        self.terms.iter().fold(0, |m, (s, _)| m | s.support())
    }

    /// Number of qubits touched by any term; the dimension exponent of the
    /// reduced dense representation.
    pub fn support_size(&self) -> u32 {
        self.support_mask().count_ones()
    }

    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).sum()
    }

    /// `Σ|c|²`, conserved by unitary conjugation.
    pub fn coeff_norm_sqr(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm_sqr()).sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|(_, c)| c.im.abs() <= tol)
    }

    pub fn coeff(&self, s: &PauliString) -> Complex64 {
        self.terms
            .binary_search_by(|(k, _)| k.cmp(s))
            .map(|i| self.terms[i].1)
            .unwrap_or_default()
    }

    pub fn scale(&self, factor: Complex64) -> PauliSum {
        PauliSum::from_terms(
            self.n_qubits,
            self.terms.iter().map(|&(s, c)| (s, c * factor)),
        )
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        check_same(self.n_qubits, other.n_qubits)?;
        Ok(PauliSum::from_terms(
            self.n_qubits,
            self.terms.iter().chain(other.terms.iter()).copied(),
        ))
    }

    pub fn mul(&self, other: &PauliSum) -> Result<PauliSum> {
        check_same(self.n_qubits, other.n_qubits)?;
        let mut out = Vec::with_capacity(self.len() * other.len());
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let (k, s) = a.mul(b);
                out.push((s, ca * cb * i_pow(k)));
            }
        }
        Ok(PauliSum::from_terms(self.n_qubits, out))
    }

    /// `[self, other] = self·other − other·self`; only anticommuting pairs survive.
    pub fn commutator(&self, other: &PauliSum) -> Result<PauliSum> {
        check_same(self.n_qubits, other.n_qubits)?;
        let mut out = Vec::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if !a.commutes(b) {
                    let (k, s) = a.mul(b);
                    out.push((s, ca * cb * i_pow(k) * 2.0));
                }
            }
        }
        Ok(PauliSum::from_terms(self.n_qubits, out))
    }

    /// Terms whose magnitude is at least `threshold`.
    pub fn prune(&mut self, threshold: f64) {
        self.terms.retain(|(_, c)| c.norm() >= threshold);
    }

    fn canonicalize(&mut self) {
        self.terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(PauliString, Complex64)> = Vec::with_capacity(self.terms.len());
        for (s, c) in self.terms.drain(..) {
            match merged.last_mut() {
                Some((last, acc)) if *last == s => *acc += c,
                _ => merged.push((s, c)),
            }
        }
        merged.retain(|(_, c)| *c != Complex64::new(0.0, 0.0));
        self.terms = merged;
    }

    fn check_support(&self, qubits: &[usize]) -> Result<()> {
        for &q in qubits {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        Ok(())
    }

    pub fn conjugate_clifford(
        &self,
        gate: Clifford,
        qubits: &[usize],
        direction: Direction,
    ) -> Result<PauliSum> {
        let mut out = self.clone();
        out.conjugate_clifford_in_place(gate, qubits, direction)?;
        Ok(out)
    }

    pub fn conjugate_clifford_in_place(
        &mut self,
        gate: Clifford,
        qubits: &[usize],
        direction: Direction,
    ) -> Result<()> {
        if qubits.len() != gate.arity() {
            return Err(Error::InvalidCircuit(format!(
                "gate `{}` acts on {} qubit(s), got {:?}",
                gate.name(),
                gate.arity(),
                qubits
            )));
        }
        self.check_support(qubits)?;
        let mut turns = gate.quarter_turns(qubits);
        if direction == Direction::Backward {
            turns.reverse();
        }
        let mask = turns.iter().fold(0, |m, (a, _)| m | a.support());
        let mut moved = false;
        for (s, c) in self.terms.iter_mut() {
            if s.support() & mask == 0 {
                continue;
            }
            for (axis, k) in &turns {
                if let Some((ns, f)) = quarter_turn(s, axis, *k, direction) {
                    *s = ns;
                    *c *= f;
                    moved = true;
                }
            }
        }
        if moved {
            self.terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        }
        Ok(())
    }

    /// Conjugation by `R_P(θ) = exp(−iθP/2)`; the axis must be a single Pauli
    /// string with unit coefficient.
    pub fn conjugate_rotation(
        &self,
        axis: &PauliTerm,
        theta: f64,
        direction: Direction,
    ) -> Result<PauliSum> {
        check_same(self.n_qubits, axis.n_qubits)?;
        if axis.string.is_identity() || (axis.coeff - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::InvalidAxis(format!("{}·{}", axis.coeff, axis.string)));
        }
        let mut out = self.clone();
        out.rotate_in_place(&axis.string, theta, direction);
        Ok(out)
    }

    pub(crate) fn rotate_in_place(&mut self, axis: &PauliString, theta: f64, direction: Direction) {
        let quarter = theta / std::f64::consts::FRAC_PI_2;
        let nearest = quarter.round();
        if (quarter - nearest).abs() < QUARTER_TURN_SNAP {
            let k = (nearest as i64).rem_euclid(4) as u32;
            let mut moved = false;
            for (s, c) in self.terms.iter_mut() {
                if let Some((ns, f)) = quarter_turn(s, axis, k, direction) {
                    *s = ns;
                    *c *= f;
                    moved = true;
                }
            }
            if moved {
                self.canonicalize();
            }
            return;
        }
        let signed = match direction {
            Direction::Backward => theta,
            Direction::Forward => -theta,
        };
        let (sin, cos) = signed.sin_cos();
        let mut extra = Vec::new();
        for (s, c) in self.terms.iter_mut() {
            if axis.commutes(s) {
                continue;
            }
            let (k, prod) = axis.mul(s);
            extra.push((prod, *c * i_pow(k + 1) * sin));
            *c *= cos;
        }
        if !extra.is_empty() {
            self.terms.extend(extra);
            self.canonicalize();
        }
    }

    /// Terms anticommuting with `p`.
    pub fn anticommuting_part(&self, p: &PauliString) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .filter(|(s, _)| !s.commutes(p))
                .copied()
                .collect(),
        }
    }
}

pub fn conjugate_clifford(
    op: &PauliSum,
    gate: Clifford,
    qubits: &[usize],
    direction: Direction,
) -> Result<PauliSum> {
    op.conjugate_clifford(gate, qubits, direction)
}

pub fn conjugate_rotation(
    op: &PauliSum,
    axis: &PauliTerm,
    theta: f64,
    direction: Direction,
) -> Result<PauliSum> {
    op.conjugate_rotation(axis, theta, direction)
}

/// `Σ|c|`, an upper bound on the spectral norm.
pub fn pauli_one_norm(op: &PauliSum) -> f64 {
    op.one_norm()
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (s, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if c.im == 0.0 {
                write!(f, "{}·{}", c.re, s)?;
            } else {
                write!(f, "({})·{}", c, s)?;
            }
        }
        Ok(())
    }
}
