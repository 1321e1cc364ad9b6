//! Antinoise budgeting.
//!
//! Mitigating channel `k` by `λ*_k ≤ λ_k` leaves residual bias
//! `c_k p(λ_k − λ*_k)` and multiplies the sampling cost by `e^{4λ*_k}`. The
//! residual is concave in `λ*`, so the optimum over `{Σλ* ≤ C, 0 ≤ λ* ≤ λ}`
//! sits on a vertex: every channel fully mitigated or untouched, except at
//! most one.

use serde::{Deserialize, Serialize};

use crate::circuit::ChannelId;
use crate::error::{Error, Result};
use crate::shading::ShadedLightcone;

/// `p(λ) = (1 − e^{−2λ})/2`.
pub fn p_of(lambda: f64) -> f64 {
    -(-2.0 * lambda).exp_m1() / 2.0
}

pub fn probability_from_rate(lambda: f64) -> Result<f64> {
    if lambda < 0.0 || lambda.is_nan() {
        return Err(Error::NegativeRate(lambda));
    }
    Ok(p_of(lambda))
}

/// `α = c·e^{−2λ}`, the marginal residual reduction per unit of budget at `λ* = 0`.
pub fn priorities(c: &[f64], rates: &[f64]) -> Vec<f64> {
    c.iter().zip(rates).map(|(&c, &l)| c * (-2.0 * l).exp()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub lambda_star: Vec<f64>,
    pub residual_bias_bound: f64,
    pub sampling_cost_gamma_sq: f64,
    pub budget_used: f64,
}

impl AllocationResult {
    /// Channels with `0 < λ* < λ`.
    pub fn partial_channels(&self, rates: &[f64]) -> Vec<ChannelId> {
        self.lambda_star
            .iter()
            .zip(rates)
            .enumerate()
            .filter(|(_, (&s, &l))| s > 0.0 && s < l)
            .map(|(i, _)| i)
            .collect()
    }

    /// `γ = e^{2Σλ*}`.
    pub fn gamma(&self) -> f64 {
        (2.0 * self.budget_used).exp()
    }
}

/// `Σ c·p(λ − λ*)`.
pub fn residual(c: &[f64], rates: &[f64], lambda_star: &[f64]) -> f64 {
    c.iter()
        .zip(rates)
        .zip(lambda_star)
        .fold(0.0, |acc, ((&c, &l), &s)| acc + c * p_of((l - s).max(0.0)))
}

/// `Π(1 − 2p)^{−1}` over channels, equal to `e^{2Σλ}`.
pub fn gamma_product(rates: &[f64]) -> f64 {
    rates.iter().map(|&l| 1.0 / (1.0 - 2.0 * p_of(l))).product()
}

fn result(c: &[f64], rates: &[f64], lambda_star: Vec<f64>) -> AllocationResult {
    // Folding from +0 keeps an empty budget from printing as -0.
    let used = lambda_star.iter().fold(0.0, |acc, x| acc + x);
    AllocationResult {
        residual_bias_bound: residual(c, rates, &lambda_star),
        sampling_cost_gamma_sq: (4.0 * used).exp(),
        budget_used: used,
        lambda_star,
    }
}

/// Channels with positive priority, by descending `α`, ties by `(layer, id)`.
pub fn priority_order(c: &[f64], rates: &[f64], layers: &[usize]) -> Vec<ChannelId> {
    let alpha = priorities(c, rates);
    let mut order: Vec<ChannelId> = (0..c.len()).filter(|&i| alpha[i] > 0.0 && rates[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        alpha[b]
            .total_cmp(&alpha[a])
            .then(layers[a].cmp(&layers[b]))
            .then(a.cmp(&b))
    });
    order
}

fn check(c: &[f64], rates: &[f64], layers: &[usize]) -> Result<()> {
    if c.len() != rates.len() || c.len() != layers.len() {
        return Err(Error::Usage(format!(
            "{} bounds, {} rates and {} layers do not line up",
            c.len(),
            rates.len(),
            layers.len()
        )));
    }
    if let Some(&bad) = rates.iter().find(|&&l| !(l >= 0.0)) {
        return Err(Error::NegativeRate(bad));
    }
    Ok(())
}

/// Sort-and-fill under a total budget `C = Σλ*`.
pub fn allocate_bounds(c: &[f64], rates: &[f64], layers: &[usize], budget: f64) -> Result<AllocationResult> {
    check(c, rates, layers)?;
    if !(budget >= 0.0) {
        return Err(Error::Usage(format!("budget must be non-negative, got {budget}")));
    }
    let mut lambda_star = vec![0.0; c.len()];
    let mut remaining = budget;
    for k in priority_order(c, rates, layers) {
        if rates[k] <= remaining {
            lambda_star[k] = rates[k];
            remaining -= rates[k];
        } else {
            lambda_star[k] = remaining;
            break;
        }
    }
    Ok(result(c, rates, lambda_star))
}

/// Smallest sort-and-fill budget whose residual bound is at most `epsilon`.
pub fn cost_for_bias_target_bounds(
    c: &[f64],
    rates: &[f64],
    layers: &[usize],
    epsilon: f64,
) -> Result<AllocationResult> {
    check(c, rates, layers)?;
    if !(epsilon >= 0.0) {
        return Err(Error::Usage(format!("epsilon must be non-negative, got {epsilon}")));
    }
    let order = priority_order(c, rates, layers);
    let contribution: Vec<f64> = order.iter().map(|&k| c[k] * p_of(rates[k])).collect();
    let mut suffix = vec![0.0; order.len() + 1];
    for i in (0..order.len()).rev() {
        suffix[i] = suffix[i + 1] + contribution[i];
    }
    let mut lambda_star = vec![0.0; c.len()];
    if suffix[0] <= epsilon {
        return Ok(result(c, rates, lambda_star));
    }
    for (i, &k) in order.iter().enumerate() {
        let rest = suffix[i + 1];
        if rest <= epsilon {
            // c p(λ − x) ≤ ε − rest  ⇔  x ≥ λ + ½ ln(1 − 2(ε − rest)/c).
            let slack = (epsilon - rest) / c[k];
            let x = rates[k] + 0.5 * (1.0 - 2.0 * slack).max(0.0).ln();
            lambda_star[k] = x.clamp(0.0, rates[k]);
            break;
        }
        lambda_star[k] = rates[k];
    }
    Ok(result(c, rates, lambda_star))
}

fn layers_of(lc: &ShadedLightcone) -> (Vec<f64>, Vec<usize>) {
    (lc.bounds(), lc.channels.iter().map(|c| c.layer).collect())
}

pub fn allocate(lc: &ShadedLightcone, rates: &[f64], budget: f64) -> Result<AllocationResult> {
    let (c, layers) = layers_of(lc);
    allocate_bounds(&c, rates, &layers, budget)
}

pub fn cost_for_bias_target(lc: &ShadedLightcone, rates: &[f64], epsilon: f64) -> Result<AllocationResult> {
    let (c, layers) = layers_of(lc);
    cost_for_bias_target_bounds(&c, rates, &layers, epsilon)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub budget: f64,
    pub residual_bias_bound: f64,
    pub sampling_cost_gamma_sq: f64,
}

/// Allocations at every vertex budget (prefix sums in priority order) and at
/// `samples` evenly spaced budgets up to full mitigation.
pub fn tradeoff_curve(c: &[f64], rates: &[f64], layers: &[usize], samples: usize) -> Result<Vec<TradeoffPoint>> {
    check(c, rates, layers)?;
    let order = priority_order(c, rates, layers);
    let mut budgets = vec![0.0];
    let mut acc = 0.0;
    for &k in &order {
        acc += rates[k];
        budgets.push(acc);
    }
    for i in 1..samples {
        budgets.push(acc * i as f64 / samples as f64);
    }
    budgets.sort_by(f64::total_cmp);
    budgets.dedup();
    budgets
        .into_iter()
        .map(|b| {
            let r = allocate_bounds(c, rates, layers, b)?;
            Ok(TradeoffPoint {
                budget: b,
                residual_bias_bound: r.residual_bias_bound,
                sampling_cost_gamma_sq: r.sampling_cost_gamma_sq,
            })
        })
        .collect()
}
