use lightcone_shading_wasm::{heatmap_json, speed_limit_json, tradeoff_json};
use serde_json::Value;
use std::f64::consts::PI;

#[test]
fn heatmap_has_single_qubit_maps_and_totals() {
    let v: Value = serde_json::from_str(&heatmap_json(6, 2, PI / 16.0, -PI / 2.0, 0.01, 3).unwrap()).unwrap();
    let maps = v["heatmaps"].as_object().unwrap();
    assert_eq!(maps.keys().collect::<Vec<_>>(), ["X", "Y", "Z"]);
    assert!(v["shaded_total"].as_f64().unwrap() <= v["conventional_total"].as_f64().unwrap());
}

#[test]
fn tradeoff_curve_is_monotone() {
    let v: Value = serde_json::from_str(&tradeoff_json(6, 2, PI / 16.0, -PI / 2.0, 0.01, 3, 16).unwrap()).unwrap();
    let pts = v["shaded"].as_array().unwrap();
    for w in pts.windows(2) {
        assert!(w[1]["residual_bias_bound"].as_f64() <= w[0]["residual_bias_bound"].as_f64());
        assert!(w[1]["sampling_cost_gamma_sq"].as_f64() >= w[0]["sampling_cost_gamma_sq"].as_f64());
    }
    assert!(v["shaded_gamma_sq"].as_f64().unwrap() <= v["conventional_gamma_sq"].as_f64().unwrap());
}

#[test]
fn speed_limit_map_confines_zz_only_circuits() {
    let v: Value = serde_json::from_str(&speed_limit_json(6, 3, 0.0, 0.7, 0).unwrap()).unwrap();
    let w = v["w"].as_array().unwrap();
    assert_eq!(w.len(), 10);
    // A Z observable commutes with every ZZ rotation.
    for b in w {
        for (q, row) in b.as_array().unwrap().iter().enumerate() {
            let x = row[1].as_f64().unwrap();
            assert_eq!(x, 0.0, "qubit {q}");
        }
    }
}

#[test]
fn rejects_bad_parameters() {
    assert!(heatmap_json(1, 2, 0.1, 0.1, 0.01, 0).is_err());
    assert!(heatmap_json(4, 2, 0.1, 0.1, 0.01, 4).is_err());
    assert!(tradeoff_json(4, 2, 0.1, 0.1, -0.01, 0, 4).is_err());
}
