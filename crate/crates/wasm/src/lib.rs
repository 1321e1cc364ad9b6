//! Browser bindings for the demo page: a TFIM shaded-lightcone heatmap, the
//! antinoise tradeoff curve, and the speed-limit bound map.
//!
//! Every export takes plain numbers and returns a JSON string; errors come
//! back as a thrown string.

use lightcone_shading::allocation::{cost_for_bias_target, tradeoff_curve, TradeoffPoint};
use lightcone_shading::circuit::{build_tfim_1d, NoiseModel, NoisePlacement};
use lightcone_shading::io::heatmaps_svg;
use lightcone_shading::shading::{conventional_shade, shade, total_bias_bound, ShadeConfig};
use lightcone_shading::speed_limit::BoundsTable;
use lightcone_shading::{LayeredCircuit, Observable, Pauli, PauliString, ShadedLightcone};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Browser runs stay small: exact evolution is capped well below the CLI default.
const DEMO_B_MAX: usize = 20_000;
const MAX_QUBITS: usize = 24;
const MAX_STEPS: usize = 12;

struct Instance {
    circuit: LayeredCircuit,
    noise: NoiseModel,
    obs: Observable,
}

fn instance(n: usize, steps: usize, theta_x: f64, theta_zz: f64, lambda: f64, site: usize) -> Result<Instance, String> {
    if !(2..=MAX_QUBITS).contains(&n) || steps == 0 || steps > MAX_STEPS {
        return Err(format!("need 2 <= n <= {MAX_QUBITS} and 1 <= steps <= {MAX_STEPS}"));
    }
    if site >= n {
        return Err(format!("site {site} is outside a chain of {n}"));
    }
    let circuit = build_tfim_1d(n, steps, theta_x, theta_zz).map_err(|e| e.to_string())?;
    let noise =
        NoiseModel::uniform_local(&circuit, lambda, NoisePlacement::AfterTwoQubitLayers).map_err(|e| e.to_string())?;
    let obs = Observable::pauli(n, PauliString::single(site, Pauli::Z));
    Ok(Instance { circuit, noise, obs })
}

fn shaded(inst: &Instance) -> Result<ShadedLightcone, String> {
    let cfg = ShadeConfig {
        b_max: DEMO_B_MAX,
        ..ShadeConfig::default()
    };
    shade(&inst.circuit, &inst.obs, &inst.noise, &cfg).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct HeatmapView {
    channels: usize,
    shaded_total: f64,
    conventional_total: f64,
    /// Error type → SVG document.
    heatmaps: std::collections::BTreeMap<String, String>,
}

pub fn heatmap_json(n: usize, steps: usize, theta_x: f64, theta_zz: f64, lambda: f64, site: usize) -> Result<String, String> {
    let inst = instance(n, steps, theta_x, theta_zz, lambda, site)?;
    let lc = shaded(&inst)?;
    let conv = conventional_shade(&inst.circuit, &inst.obs, &inst.noise).map_err(|e| e.to_string())?;
    let rates = inst.noise.rates();
    let mut maps = heatmaps_svg(&lc);
    maps.retain(|ty, _| ty.len() == 1);
    let view = HeatmapView {
        channels: inst.noise.len(),
        shaded_total: total_bias_bound(&lc, &rates),
        conventional_total: total_bias_bound(&conv, &rates),
        heatmaps: maps,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct CurveView {
    shaded: Vec<TradeoffPoint>,
    conventional: Vec<TradeoffPoint>,
    /// γ² needed for a residual of 10% of the shaded unmitigated bound.
    epsilon: f64,
    shaded_gamma_sq: f64,
    conventional_gamma_sq: f64,
}

pub fn tradeoff_json(
    n: usize,
    steps: usize,
    theta_x: f64,
    theta_zz: f64,
    lambda: f64,
    site: usize,
    samples: usize,
) -> Result<String, String> {
    let inst = instance(n, steps, theta_x, theta_zz, lambda, site)?;
    let lc = shaded(&inst)?;
    let conv = conventional_shade(&inst.circuit, &inst.obs, &inst.noise).map_err(|e| e.to_string())?;
    let rates = inst.noise.rates();
    let layers: Vec<usize> = lc.channels.iter().map(|c| c.layer).collect();
    let curve = |l: &ShadedLightcone| tradeoff_curve(&l.bounds(), &rates, &layers, samples).map_err(|e| e.to_string());
    let epsilon = 0.1 * total_bias_bound(&lc, &rates);
    let gamma = |l: &ShadedLightcone| {
        cost_for_bias_target(l, &rates, epsilon)
            .map(|r| r.sampling_cost_gamma_sq)
            .map_err(|e| e.to_string())
    };
    let view = CurveView {
        shaded: curve(&lc)?,
        conventional: curve(&conv)?,
        epsilon,
        shaded_gamma_sq: gamma(&lc)?,
        conventional_gamma_sq: gamma(&conv)?,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SpeedLimitView {
    /// `w[boundary][qubit] = [I, X, Y, Z]`.
    w: Vec<Vec<[f64; 4]>>,
}

pub fn speed_limit_json(n: usize, steps: usize, theta_x: f64, theta_zz: f64, site: usize) -> Result<String, String> {
    let inst = instance(n, steps, theta_x, theta_zz, 0.0, site)?;
    let table = BoundsTable::build(&inst.circuit, &inst.obs, |_, _| {});
    let view = SpeedLimitView {
        w: table.boundaries.iter().map(|b| b.w.clone()).collect(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = tfimHeatmap)]
pub fn tfim_heatmap(n: usize, steps: usize, theta_x: f64, theta_zz: f64, lambda: f64, site: usize) -> Result<String, JsValue> {
    heatmap_json(n, steps, theta_x, theta_zz, lambda, site).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = tradeoffCurve)]
pub fn tradeoff_curve_js(
    n: usize,
    steps: usize,
    theta_x: f64,
    theta_zz: f64,
    lambda: f64,
    site: usize,
    samples: usize,
) -> Result<String, JsValue> {
    tradeoff_json(n, steps, theta_x, theta_zz, lambda, site, samples).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = speedLimitMap)]
pub fn speed_limit_map(n: usize, steps: usize, theta_x: f64, theta_zz: f64, site: usize) -> Result<String, JsValue> {
    speed_limit_json(n, steps, theta_x, theta_zz, site).map_err(|e| JsValue::from_str(&e))
}
