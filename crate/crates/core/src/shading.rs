//! Shaded lightcones: a bias bound `c` for every noise channel.
//!
//! Each channel gets two candidates. The A-side candidate bounds
//! `‖[E_F, A_F]‖∞` by exact evolution, by the speed-limit table, or trivially;
//! it is valid when no channel inserted before it lies in its forward cone.
//! The ρ-side candidate `‖[E_I, ρ_I]‖₁ · ‖A‖` is valid when no channel inserted
//! before it acts earlier in time. [`partition_plan`] assigns sides so that
//! one insertion order satisfies every channel's condition: ρ-side channels
//! in reverse time order, then A-side channels in time order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::allocation::p_of;
use crate::circuit::{ChannelId, LayeredCircuit, NoiseChannel, NoiseModel, Observable};
use crate::error::{Error, Result};
use crate::evolution::{evolve_backward, evolve_forward_in, Evolved, DEFAULT_B_MAX};
use crate::lightcone::{forward_cone, tracked_letters, ObservableCone};
use crate::norms::{a_side_bound, nuclear_norm_zero_state, BoundValue, NormMethod, SpectralConfig};
use crate::pauli::{Pauli, PauliSum, PauliTerm};
use crate::par_map;
use crate::speed_limit::{BoundsTable, LocalBounds};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadeConfig {
    pub b_max: usize,
    pub spectral: SpectralConfig,
    /// Disables the speed-limit pass when false.
    pub speed_limit: bool,
}

impl Default for ShadeConfig {
    fn default() -> Self {
        ShadeConfig {
            b_max: DEFAULT_B_MAX,
            spectral: SpectralConfig::default(),
            speed_limit: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    RhoSide,
    ASide,
    CliffordProduct,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::RhoSide => "rho_side",
            Side::ASide => "a_side",
            Side::CliffordProduct => "clifford_product",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactNuclear,
    ExactSpectral,
    PauliOneNormFallback,
    SpeedLimit,
    OutsideLightcone,
    Trivial,
    CliffordProduct,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ExactNuclear => "exact_nuclear",
            Method::ExactSpectral => "exact_spectral",
            Method::PauliOneNormFallback => "pauli_one_norm_fallback",
            Method::SpeedLimit => "speed_limit",
            Method::OutsideLightcone => "outside_lightcone",
            Method::Trivial => "trivial",
            Method::CliffordProduct => "clifford_product",
        }
    }
}

impl From<NormMethod> for Method {
    fn from(m: NormMethod) -> Self {
        match m {
            NormMethod::ExactNuclear => Method::ExactNuclear,
            NormMethod::ExactSpectral => Method::ExactSpectral,
            NormMethod::PauliOneNormFallback => Method::PauliOneNormFallback,
            NormMethod::Trivial => Method::Trivial,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelBound {
    pub id: ChannelId,
    pub layer: usize,
    pub qubits: Vec<usize>,
    /// Letters on `qubits`, e.g. `"XZ"`.
    pub pauli: String,
    pub c: f64,
    pub method: Method,
    pub side: Side,
    pub a_side: f64,
    pub a_method: Method,
    pub rho_side: f64,
    pub rho_method: Method,
    pub inside: bool,
    /// Forward evolution of this (or a later) channel in its series exceeded `B_max`.
    pub forward_exceeded: bool,
    pub backward_exceeded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadedLightcone {
    pub n_qubits: usize,
    pub depth: usize,
    pub b_max: usize,
    pub n_max: u32,
    pub observable_norm_bound: f64,
    pub channels: Vec<ChannelBound>,
    pub partition: PartitionSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSummary {
    /// Global cut used to seed the greedy pass: boundaries `≤ cut` forced ρ-side.
    pub seed_cut: Option<usize>,
    pub rho_side_channels: usize,
    pub taper_verified: bool,
    pub description: String,
}

impl ShadedLightcone {
    pub fn bounds(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.c).collect()
    }

    pub fn sides(&self) -> Vec<Side> {
        self.channels.iter().map(|c| c.side).collect()
    }

    /// Channel ids in an insertion order under which every bound holds.
    pub fn insertion_order(&self) -> Vec<ChannelId> {
        insertion_order(&self.channels.iter().map(|c| (c.layer, c.side)).collect::<Vec<_>>())
    }
}

/// ρ-side channels latest first, then the rest earliest first; ties by id.
pub fn insertion_order(layer_side: &[(usize, Side)]) -> Vec<ChannelId> {
    let mut rho: Vec<ChannelId> = (0..layer_side.len())
        .filter(|&i| layer_side[i].1 == Side::RhoSide)
        .collect();
    rho.sort_by_key(|&i| (std::cmp::Reverse(layer_side[i].0), i));
    let mut rest: Vec<ChannelId> = (0..layer_side.len())
        .filter(|&i| layer_side[i].1 != Side::RhoSide)
        .collect();
    rest.sort_by_key(|&i| (layer_side[i].0, i));
    rho.extend(rest);
    rho
}

/// `Σ p(λ)·c`.
pub fn total_bias_bound(lc: &ShadedLightcone, rates: &[f64]) -> f64 {
    lc.channels.iter().zip(rates).fold(0.0, |acc, (ch, &l)| acc + p_of(l) * ch.c)
}

/// Channels sharing support and Pauli, in time order.
fn series(channels: &[NoiseChannel]) -> Vec<Vec<ChannelId>> {
    let mut map: BTreeMap<(Vec<usize>, crate::pauli::PauliString), Vec<ChannelId>> = BTreeMap::new();
    for ch in channels {
        let mut key = ch.qubits.clone();
        key.sort_unstable();
        map.entry((key, ch.pauli)).or_default().push(ch.id);
    }
    let mut out: Vec<Vec<ChannelId>> = map.into_values().collect();
    for s in &mut out {
        s.sort_by_key(|&id| (channels[id].layer, id));
    }
    out
}

#[derive(Clone, Copy, Debug)]
enum Sweep {
    Outside,
    Value(BoundValue),
    Exceeded,
}

fn forward_sweep(
    circuit: &LayeredCircuit,
    obs: &Observable,
    channels: &[NoiseChannel],
    inside: &[bool],
    cfg: &ShadeConfig,
) -> Vec<Sweep> {
    let cone = ObservableCone::new(circuit, obs);
    let n = circuit.n_qubits();
    let per_series = par_map(&series(channels), |ids| {
        let mut out = Vec::with_capacity(ids.len());
        let mut stopped = false;
        for &id in ids.iter().rev() {
            let ch = &channels[id];
            if !inside[id] {
                out.push((id, Sweep::Outside));
                continue;
            }
            if stopped {
                out.push((id, Sweep::Exceeded));
                continue;
            }
            let outcome = evolve_forward_in(&PauliTerm::unit(n, ch.pauli), ch.layer, circuit, &cone, cfg.b_max);
            match outcome.result {
                Evolved::Sum(e_f) => out.push((id, Sweep::Value(a_side_bound(&e_f, obs, &cfg.spectral)))),
                Evolved::Exceeded => {
                    stopped = true;
                    out.push((id, Sweep::Exceeded));
                }
            }
        }
        out
    });
    collect(per_series, channels.len())
}

fn backward_sweep(circuit: &LayeredCircuit, channels: &[NoiseChannel], inside: &[bool], b_max: usize) -> Vec<Sweep> {
    let n = circuit.n_qubits();
    let per_series = par_map(&series(channels), |ids| {
        let mut out = Vec::with_capacity(ids.len());
        let mut stopped = false;
        for &id in ids {
            let ch = &channels[id];
            if !inside[id] {
                out.push((id, Sweep::Outside));
                continue;
            }
            if stopped {
                out.push((id, Sweep::Exceeded));
                continue;
            }
            match evolve_backward(&PauliTerm::unit(n, ch.pauli), ch.layer, circuit, b_max).result {
                Evolved::Sum(e_i) => out.push((id, Sweep::Value(nuclear_norm_zero_state(&e_i)))),
                Evolved::Exceeded => {
                    stopped = true;
                    out.push((id, Sweep::Exceeded));
                }
            }
        }
        out
    });
    collect(per_series, channels.len())
}

fn collect(per_series: Vec<Vec<(ChannelId, Sweep)>>, len: usize) -> Vec<Sweep> {
    let mut out = vec![Sweep::Exceeded; len];
    for (id, s) in per_series.into_iter().flatten() {
        out[id] = s;
    }
    out
}

/// Speed-limit bounds seeded with the letter sets of the conventional
/// lightcone and with every single-qubit forward result.
fn speed_limit_table(
    circuit: &LayeredCircuit,
    obs: &Observable,
    channels: &[NoiseChannel],
    forward: &[Sweep],
) -> (BoundsTable, BTreeMap<(usize, usize, Pauli), f64>) {
    let tracked = tracked_letters(circuit, obs);
    let mut exact: BTreeMap<(usize, usize, Pauli), f64> = BTreeMap::new();
    for (ch, sweep) in channels.iter().zip(forward) {
        if ch.qubits.len() != 1 {
            continue;
        }
        let q = ch.qubits[0];
        let value = match sweep {
            Sweep::Outside => 0.0,
            Sweep::Value(v) => v.value,
            Sweep::Exceeded => continue,
        };
        let slot = exact.entry((ch.layer, q, ch.pauli.letter(q))).or_insert(value);
        *slot = slot.min(value);
    }
    let table = BoundsTable::build(circuit, obs, |b, w: &mut LocalBounds| {
        for (q, &letters) in tracked[b].iter().enumerate() {
            w.restrict_letters(q, letters);
        }
        let seeds: Vec<(usize, Pauli, f64)> = exact
            .range((b, 0, Pauli::I)..(b + 1, 0, Pauli::I))
            .map(|(&(_, q, p), &v)| (q, p, v))
            .collect();
        w.seed_from_exact(&seeds);
    });
    (table, exact)
}

/// Full pipeline: forward sweep, speed-limit pass, backward sweep, partition.
pub fn shade(
    circuit: &LayeredCircuit,
    obs: &Observable,
    noise: &NoiseModel,
    cfg: &ShadeConfig,
) -> Result<ShadedLightcone> {
    check_widths(circuit, obs)?;
    let channels = noise.channels();
    let inside = crate::lightcone::conventional_lightcone(circuit, obs, channels);
    let cap = 2.0 * obs.norm_bound();

    let forward = forward_sweep(circuit, obs, channels, &inside, cfg);
    let speed = cfg
        .speed_limit
        .then(|| speed_limit_table(circuit, obs, channels, &forward));
    let backward = backward_sweep(circuit, channels, &inside, cfg.b_max);

    let mut candidates = Vec::with_capacity(channels.len());
    for (id, ch) in channels.iter().enumerate() {
        let (mut a, mut a_method) = match forward[id] {
            Sweep::Outside => (0.0, Method::OutsideLightcone),
            Sweep::Value(v) => (v.value, Method::from(v.method)),
            Sweep::Exceeded => (cap, Method::Trivial),
        };
        if let (Some((table, exact)), true) = (&speed, inside[id]) {
            let w = table.at(ch.layer);
            let s: f64 = ch
                .qubits
                .iter()
                .map(|&q| {
                    let letter = ch.pauli.letter(q);
                    let site = w.site_bound(q, letter);
                    exact.get(&(ch.layer, q, letter)).map_or(site, |&e| site.min(e))
                })
                .sum::<f64>()
                .min(cap);
            if s < a {
                a = s;
                a_method = Method::SpeedLimit;
            }
        }
        let (rho, rho_method) = match backward[id] {
            Sweep::Outside => (0.0, Method::OutsideLightcone),
            Sweep::Value(v) => {
                let b = BoundValue::capped(v.value * obs.norm_bound(), v.method, cap);
                (b.value, Method::from(b.method))
            }
            Sweep::Exceeded => (cap, Method::Trivial),
        };
        candidates.push(ChannelBound {
            id,
            layer: ch.layer,
            qubits: ch.qubits.clone(),
            pauli: ch.letters(),
            c: a,
            method: a_method,
            side: Side::ASide,
            a_side: a,
            a_method,
            rho_side: rho,
            rho_method,
            inside: inside[id],
            forward_exceeded: matches!(forward[id], Sweep::Exceeded),
            backward_exceeded: matches!(backward[id], Sweep::Exceeded),
        });
    }

    let a_vals: Vec<f64> = candidates.iter().map(|c| c.a_side).collect();
    let rho_vals: Vec<f64> = candidates.iter().map(|c| c.rho_side).collect();
    let plan = partition_plan(&a_vals, &rho_vals, &noise.rates(), circuit, channels, &inside);
    for (cb, &side) in candidates.iter_mut().zip(&plan.sides) {
        cb.side = side;
        if side == Side::RhoSide {
            cb.c = cb.rho_side;
            cb.method = cb.rho_method;
        }
    }
    Ok(ShadedLightcone {
        n_qubits: circuit.n_qubits(),
        depth: circuit.depth(),
        b_max: cfg.b_max,
        n_max: cfg.spectral.n_max,
        observable_norm_bound: obs.norm_bound(),
        channels: candidates,
        partition: plan.summary(),
    })
}

fn check_widths(circuit: &LayeredCircuit, obs: &Observable) -> Result<()> {
    if circuit.n_qubits() != obs.n_qubits() {
        return Err(Error::QubitMismatch {
            left: circuit.n_qubits(),
            right: obs.n_qubits(),
        });
    }
    Ok(())
}

/// Independent check that no ρ-side channel lies in the forward topological
/// cone of an A-side channel. Channels outside the conventional lightcone
/// are exempt: they contribute exactly zero in any context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaperCertificate {
    pub checks: usize,
    pub violations: Vec<(ChannelId, ChannelId)>,
}

impl TaperCertificate {
    pub fn verify(circuit: &LayeredCircuit, channels: &[NoiseChannel], inside: &[bool], sides: &[Side]) -> Self {
        let rho: Vec<&NoiseChannel> = channels
            .iter()
            .filter(|c| sides[c.id] == Side::RhoSide && inside[c.id])
            .collect();
        let mut checks = 0;
        let mut violations = Vec::new();
        if !rho.is_empty() {
            for a in channels.iter().filter(|c| sides[c.id] == Side::ASide && inside[c.id]) {
                let cone = forward_cone(circuit, a.layer, a.support_mask());
                for r in rho.iter().filter(|r| r.layer > a.layer) {
                    checks += 1;
                    if cone[r.layer - a.layer] & r.support_mask() != 0 {
                        violations.push((a.id, r.id));
                    }
                }
            }
        }
        TaperCertificate { checks, violations }
    }

    pub fn verified(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub sides: Vec<Side>,
    pub seed_cut: Option<usize>,
    pub total: f64,
    pub certificate: TaperCertificate,
}

impl PartitionPlan {
    fn summary(&self) -> PartitionSummary {
        let rho = self.sides.iter().filter(|&&s| s == Side::RhoSide).count();
        let description = match self.seed_cut {
            None => format!("greedy from the start; {rho} channel(s) on the rho side"),
            Some(t) => format!("boundaries <= {t} forced to the rho side, greedy after; {rho} channel(s) on the rho side"),
        };
        PartitionSummary {
            seed_cut: self.seed_cut,
            rho_side_channels: rho,
            taper_verified: self.certificate.verified(),
            description,
        }
    }
}

struct Group {
    layer: usize,
    mask: u128,
    members: Vec<ChannelId>,
    cost_a: f64,
    cost_rho: f64,
}

/// Greedy side assignment over `(boundary, support)` groups. For every
/// global cut `T` (and for no cut), boundaries `≤ T` are forced ρ-side and
/// later groups flip to ρ-side when strictly cheaper and untouched by the
/// forward cone of any A-side channel. The cheapest run wins; earlier
/// candidates win ties, so equal costs stay A-side.
pub fn partition_plan(
    a_side: &[f64],
    rho_side: &[f64],
    rates: &[f64],
    circuit: &LayeredCircuit,
    channels: &[NoiseChannel],
    inside: &[bool],
) -> PartitionPlan {
    let mut groups: BTreeMap<(usize, Vec<usize>), Group> = BTreeMap::new();
    for ch in channels.iter().filter(|c| inside[c.id]) {
        let mut key = ch.qubits.clone();
        key.sort_unstable();
        let g = groups.entry((ch.layer, key)).or_insert_with(|| Group {
            layer: ch.layer,
            mask: ch.support_mask(),
            members: Vec::new(),
            cost_a: 0.0,
            cost_rho: 0.0,
        });
        let p = p_of(rates[ch.id]);
        g.members.push(ch.id);
        g.cost_a += p * a_side[ch.id];
        g.cost_rho += p * rho_side[ch.id];
    }
    let groups: Vec<Group> = groups.into_values().collect();
    let depth = circuit.depth();

    let run = |cut: Option<usize>| -> (Vec<bool>, f64) {
        let mut flipped = vec![false; groups.len()];
        let mut taint = 0u128;
        let mut total = 0.0;
        let mut g = 0;
        for b in 0..=depth {
            let start = g;
            while g < groups.len() && groups[g].layer == b {
                let grp = &groups[g];
                let forced = cut.is_some_and(|t| b <= t);
                let flip = forced || (grp.cost_rho < grp.cost_a && grp.mask & taint == 0);
                flipped[g] = flip;
                total += if flip { grp.cost_rho } else { grp.cost_a };
                g += 1;
            }
            for k in start..g {
                if !flipped[k] {
                    taint |= groups[k].mask;
                }
            }
            if b < depth && taint != 0 {
                for gate in &circuit.layers()[b] {
                    if gate.support_mask() & taint != 0 {
                        taint |= gate.support_mask();
                    }
                }
            }
        }
        (flipped, total)
    };

    let mut best = run(None);
    let mut best_cut = None;
    for t in 0..=depth {
        let cand = run(Some(t));
        if cand.1 < best.1 {
            best = cand;
            best_cut = Some(t);
        }
    }
    let mut sides = vec![Side::ASide; channels.len()];
    for (grp, &f) in groups.iter().zip(&best.0) {
        if f {
            for &id in &grp.members {
                sides[id] = Side::RhoSide;
            }
        }
    }
    let certificate = TaperCertificate::verify(circuit, channels, inside, &sides);
    PartitionPlan {
        sides,
        seed_cut: best_cut,
        total: best.1,
        certificate,
    }
}

/// Binary lightcone: `c = 2‖A‖` inside, `0` outside.
pub fn conventional_shade(circuit: &LayeredCircuit, obs: &Observable, noise: &NoiseModel) -> Result<ShadedLightcone> {
    check_widths(circuit, obs)?;
    let inside = crate::lightcone::conventional_lightcone(circuit, obs, noise.channels());
    let cap = 2.0 * obs.norm_bound();
    let channels = noise
        .channels()
        .iter()
        .map(|ch| {
            let (c, method) = if inside[ch.id] {
                (cap, Method::Trivial)
            } else {
                (0.0, Method::OutsideLightcone)
            };
            ChannelBound {
                id: ch.id,
                layer: ch.layer,
                qubits: ch.qubits.clone(),
                pauli: ch.letters(),
                c,
                method,
                side: Side::ASide,
                a_side: c,
                a_method: method,
                rho_side: c,
                rho_method: method,
                inside: inside[ch.id],
                forward_exceeded: false,
                backward_exceeded: false,
            }
        })
        .collect();
    Ok(ShadedLightcone {
        n_qubits: circuit.n_qubits(),
        depth: circuit.depth(),
        b_max: 0,
        n_max: 0,
        observable_norm_bound: obs.norm_bound(),
        channels,
        partition: PartitionSummary {
            seed_cut: None,
            rho_side_channels: 0,
            taper_verified: true,
            description: "conventional lightcone".into(),
        },
    })
}

/// Clifford circuits: each Pauli error stays a single Pauli, so every
/// channel gets `Σ_k |a_k| · ‖[E_I, ρ_I]‖₁ · ‖[E_F, P_k]‖∞ / 2` for
/// `A = Σ_k a_k P_k`, valid in any insertion order, tightened by the A-side
/// value `‖[E_F, A]‖∞`, which holds under time-ordered insertion.
pub fn clifford_shade(
    circuit: &LayeredCircuit,
    obs: &Observable,
    noise: &NoiseModel,
    b_max: usize,
) -> Result<ShadedLightcone> {
    check_widths(circuit, obs)?;
    if let Some(layer) = circuit.first_non_clifford() {
        return Err(Error::NonClifford { layer });
    }
    let n = circuit.n_qubits();
    let cap = 2.0 * obs.norm_bound();
    let inside = crate::lightcone::conventional_lightcone(circuit, obs, noise.channels());
    let cfg = SpectralConfig::default();
    let cone = ObservableCone::new(circuit, obs);
    let channels = par_map(noise.channels(), |ch| {
        let term = PauliTerm::unit(n, ch.pauli);
        let e_f = evolve_forward_in(&term, ch.layer, circuit, &cone, b_max.max(4 * n));
        let e_i = evolve_backward(&term, ch.layer, circuit, b_max.max(4 * n));
        let (e_f, e_i) = match (e_f.result, e_i.result) {
            (Evolved::Sum(f), Evolved::Sum(i)) => (f, i),
            _ => unreachable!("Clifford evolution keeps a single term"),
        };
        let nuc = nuclear_norm_zero_state(&e_i).value;
        let product: f64 = obs
            .real_terms()
            .map(|(p, a)| {
                let comm = if e_f.terms()[0].0.commutes(&p) { 0.0 } else { 2.0 };
                a.abs() * nuc * comm / 2.0
            })
            .sum();
        let a_side = a_side_bound(&e_f, obs, &cfg);
        let rho = (nuc * obs.norm_bound()).min(cap);
        let (c, method, side) = if !inside[ch.id] {
            (0.0, Method::OutsideLightcone, Side::ASide)
        } else if product <= a_side.value {
            (product.min(cap), Method::CliffordProduct, Side::CliffordProduct)
        } else {
            (a_side.value, Method::from(a_side.method), Side::ASide)
        };
        ChannelBound {
            id: ch.id,
            layer: ch.layer,
            qubits: ch.qubits.clone(),
            pauli: ch.letters(),
            c,
            method,
            side,
            a_side: a_side.value,
            a_method: Method::from(a_side.method),
            rho_side: rho,
            rho_method: Method::ExactNuclear,
            inside: inside[ch.id],
            forward_exceeded: false,
            backward_exceeded: false,
        }
    });
    Ok(ShadedLightcone {
        n_qubits: n,
        depth: circuit.depth(),
        b_max,
        n_max: cfg.n_max,
        observable_norm_bound: obs.norm_bound(),
        channels,
        partition: PartitionSummary {
            seed_cut: None,
            rho_side_channels: 0,
            taper_verified: true,
            description: "Clifford product bound; no partition".into(),
        },
    })
}

/// A Hermitian observable as a single-term sum helper for tests and demos.
pub fn single_pauli_observable(n: usize, label: &str) -> Result<Observable> {
    let s: crate::pauli::PauliString = label.parse()?;
    Observable::new(PauliSum::from_real(n, [(s, 1.0)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_tfim_1d, NoisePlacement};
    use std::f64::consts::PI;

    #[test]
    fn total_bias_examples() {
        let c = build_tfim_1d(2, 1, 0.1, 0.2).unwrap();
        let obs = single_pauli_observable(2, "Z0").unwrap();
        let noise = NoiseModel::new(
            &c,
            vec![NoiseChannel {
                id: 0,
                layer: 2,
                qubits: vec![0],
                pauli: "X0".parse().unwrap(),
                lambda: 0.01,
            }],
        )
        .unwrap();
        let lc = shade(&c, &obs, &noise, &ShadeConfig::default()).unwrap();
        // The state side is marginally cheaper than the trivial 2.
        let c0 = lc.channels[0].c;
        assert!(c0 > 1.99 && c0 <= 2.0);
        assert_eq!(total_bias_bound(&lc, &[0.0]), 0.0);
        let want = c0 * (1.0 - (-0.02f64).exp()) / 2.0;
        assert!((total_bias_bound(&lc, &[0.01]) - want).abs() < 1e-15);
        assert!((want - 0.0198).abs() < 1e-4);
    }

    #[test]
    fn outside_channels_are_zero() {
        let c = build_tfim_1d(6, 2, 0.0, 0.7).unwrap();
        let obs = single_pauli_observable(6, "X0").unwrap();
        let noise = NoiseModel::uniform_local(&c, 0.01, NoisePlacement::AfterEveryLayer).unwrap();
        let lc = shade(&c, &obs, &noise, &ShadeConfig::default()).unwrap();
        for cb in &lc.channels {
            if !cb.inside {
                assert_eq!(cb.c, 0.0);
                assert_eq!(cb.method, Method::OutsideLightcone);
            }
        }
    }

    #[test]
    fn dominates_conventional() {
        let c = build_tfim_1d(6, 2, PI / 16.0, -PI / 2.0).unwrap();
        let obs = single_pauli_observable(6, "Z3").unwrap();
        let noise = NoiseModel::uniform_local(&c, 0.01, NoisePlacement::AfterTwoQubitLayers).unwrap();
        let lc = shade(&c, &obs, &noise, &ShadeConfig::default()).unwrap();
        let conv = conventional_shade(&c, &obs, &noise).unwrap();
        let rates = noise.rates();
        assert!(total_bias_bound(&lc, &rates) <= total_bias_bound(&conv, &rates));
        assert!(lc.partition.taper_verified);
    }

    #[test]
    fn single_channel_picks_cheaper_side() {
        let c = build_tfim_1d(2, 1, 0.0, 0.3).unwrap();
        let obs = single_pauli_observable(2, "X0").unwrap();
        let ch = |p: &str, layer| NoiseChannel {
            id: 0,
            layer,
            qubits: vec![0],
            pauli: p.parse().unwrap(),
            lambda: 0.02,
        };
        let noise = NoiseModel::new(&c, vec![ch("Z0", 0)]).unwrap();
        let lc = shade(&c, &obs, &noise, &ShadeConfig::default()).unwrap();
        // Z on |0⟩ is harmless from the state side; the A side sees [Z, X] ≠ 0.
        assert_eq!(lc.channels[0].c, 0.0);
        assert_eq!(lc.channels[0].side, Side::RhoSide);
    }

    #[test]
    fn insertion_order_shape() {
        let order = insertion_order(&[(0, Side::RhoSide), (3, Side::ASide), (2, Side::RhoSide), (1, Side::ASide)]);
        assert_eq!(order, vec![2, 0, 3, 1]);
    }

    #[test]
    fn clifford_requires_clifford_gates() {
        let c = build_tfim_1d(3, 1, 0.3, -PI / 2.0).unwrap();
        let obs = single_pauli_observable(3, "Z1").unwrap();
        let noise = NoiseModel::empty();
        assert!(matches!(clifford_shade(&c, &obs, &noise, 1000), Err(Error::NonClifford { .. })));
    }

    #[test]
    fn clifford_examples() {
        let c = build_tfim_1d(3, 1, PI / 2.0, -PI / 2.0).unwrap();
        let obs = single_pauli_observable(3, "Z1").unwrap();
        let at = |p: &str, layer| NoiseChannel {
            id: 0,
            layer,
            qubits: vec![1],
            pauli: p.parse().unwrap(),
            lambda: 0.01,
        };
        let noise = NoiseModel::new(&c, vec![at("Z1", c.depth())]).unwrap();
        assert_eq!(clifford_shade(&c, &obs, &noise, 1000).unwrap().channels[0].c, 0.0);
        let single = build_tfim_1d(2, 1, 0.0, 0.0).unwrap();
        let obs2 = single_pauli_observable(2, "Z0").unwrap();
        let noise2 = NoiseModel::new(&single, vec![NoiseChannel { qubits: vec![0], pauli: "X0".parse().unwrap(), ..at("X0", 0) }]).unwrap();
        assert_eq!(clifford_shade(&single, &obs2, &noise2, 1000).unwrap().channels[0].c, 2.0);
    }
}
