//! File formats: circuit, noise and observable inputs; lightcone, allocation
//! and heatmap outputs.
//!
//! Inputs are strict: unknown keys are rejected and every error names the
//! JSON pointer of the offending value.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::allocation::{AllocationResult, TradeoffPoint};
use crate::circuit::{Gate, LayeredCircuit, NoiseChannel, NoiseModel, Observable};
use crate::error::{Error, Result};
use crate::pauli::{Clifford, Pauli, PauliString, PauliSum};
use crate::shading::{Method, ShadedLightcone, Side};

pub const FORMAT_VERSION: u32 = 1;

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

/// Parses `text` as `T`, reporting failures with a JSON pointer.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        pointer: pointer(e.path()),
        message: e.inner().to_string(),
    })
}

fn schema(pointer: String, message: impl ToString) -> Error {
    Error::Schema {
        pointer,
        message: message.to_string(),
    }
}

fn check_version(version: Option<u32>) -> Result<()> {
    match version {
        None | Some(FORMAT_VERSION) => Ok(()),
        Some(v) => Err(schema("/version".into(), format!("unsupported version {v}, expected {FORMAT_VERSION}"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub gate: String,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    pub n_qubits: usize,
    #[serde(default)]
    pub coupling: Vec<[usize; 2]>,
    pub layers: Vec<Vec<GateSpec>>,
}

/// Named Cliffords, or `r` followed by one axis letter per qubit (`rx`, `rzz`, `rxy`).
fn gate_from_spec(spec: &GateSpec) -> std::result::Result<Gate, String> {
    let name = spec.gate.to_ascii_lowercase();
    if let Ok(c) = name.parse::<Clifford>() {
        if spec.theta.is_some() {
            return Err(format!("`{}` takes no angle", spec.gate));
        }
        if spec.qubits.len() != c.arity() {
            return Err(format!("`{}` acts on {} qubit(s), got {}", spec.gate, c.arity(), spec.qubits.len()));
        }
        return Ok(Gate::clifford(c, &spec.qubits));
    }
    let letters: Option<Vec<Pauli>> = name
        .strip_prefix('r')
        .filter(|s| !s.is_empty())
        .map(|s| s.chars().map(|ch| Pauli::from_char(ch).filter(|p| *p != Pauli::I)).collect::<Option<_>>())
        .flatten();
    let Some(letters) = letters else {
        return Err(format!("unknown gate `{}`", spec.gate));
    };
    if letters.len() != spec.qubits.len() || !(1..=2).contains(&letters.len()) {
        return Err(format!("`{}` needs {} qubit(s), got {}", spec.gate, letters.len(), spec.qubits.len()));
    }
    let theta = spec.theta.ok_or_else(|| format!("`{}` needs an angle `theta`", spec.gate))?;
    if !theta.is_finite() {
        return Err("angle must be finite".into());
    }
    Ok(Gate::rotation(&letters, &spec.qubits, theta))
}

fn spec_from_gate(gate: &Gate) -> GateSpec {
    match &gate.kind {
        crate::circuit::GateKind::Clifford(c) => GateSpec {
            gate: c.name().to_string(),
            qubits: gate.qubits.clone(),
            theta: None,
        },
        crate::circuit::GateKind::Rotation { theta, .. } => {
            let letters: String = gate
                .axis_letters()
                .expect("rotation")
                .iter()
                .map(|p| p.to_char().to_ascii_lowercase())
                .collect();
            GateSpec {
                gate: format!("r{letters}"),
                qubits: gate.qubits.clone(),
                theta: Some(*theta),
            }
        }
    }
}

impl CircuitFile {
    pub fn from_circuit(c: &LayeredCircuit) -> Self {
        CircuitFile {
            version: Some(FORMAT_VERSION),
            n_qubits: c.n_qubits(),
            coupling: c.coupling().iter().map(|&(a, b)| [a, b]).collect(),
            layers: c.layers().iter().map(|l| l.iter().map(spec_from_gate).collect()).collect(),
        }
    }

    pub fn build(&self) -> Result<LayeredCircuit> {
        check_version(self.version)?;
        let mut layers = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut gates = Vec::with_capacity(layer.len());
            for (g, spec) in layer.iter().enumerate() {
                gates.push(gate_from_spec(spec).map_err(|m| schema(format!("/layers/{l}/{g}"), m))?);
            }
            layers.push(gates);
        }
        let coupling = self.coupling.iter().map(|&[a, b]| (a, b)).collect();
        LayeredCircuit::new(self.n_qubits, layers, coupling)
    }
}

pub fn parse_circuit(text: &str) -> Result<LayeredCircuit> {
    parse_json::<CircuitFile>(text)?.build()
}

pub fn circuit_to_json(c: &LayeredCircuit) -> String {
    serde_json::to_string_pretty(&CircuitFile::from_circuit(c)).expect("serializable")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub layer: usize,
    pub qubits: Vec<usize>,
    /// One letter per qubit (`"XZ"`), or a full label (`"X3 Z4"`).
    pub pauli: String,
    pub lambda: f64,
}

fn pauli_on(qubits: &[usize], text: &str) -> std::result::Result<PauliString, String> {
    let letters: Option<Vec<Pauli>> = text.chars().map(Pauli::from_char).collect();
    match letters {
        Some(ls) if ls.len() == qubits.len() => Ok(PauliString::from_letters(
            &qubits.iter().copied().zip(ls).collect::<Vec<_>>(),
        )),
        _ => text.parse::<PauliString>().map_err(|e| e.to_string()),
    }
}

pub fn parse_noise(text: &str, circuit: &LayeredCircuit) -> Result<NoiseModel> {
    let specs: Vec<ChannelSpec> = parse_json(text)?;
    let mut channels = Vec::with_capacity(specs.len());
    for (i, s) in specs.iter().enumerate() {
        if s.qubits.iter().any(|&q| q >= circuit.n_qubits()) {
            return Err(schema(format!("/{i}/qubits"), format!("qubit out of range for {} qubits", circuit.n_qubits())));
        }
        let pauli = pauli_on(&s.qubits, &s.pauli).map_err(|m| schema(format!("/{i}/pauli"), m))?;
        channels.push(NoiseChannel {
            id: i,
            layer: s.layer,
            qubits: s.qubits.clone(),
            pauli,
            lambda: s.lambda,
        });
    }
    NoiseModel::new(circuit, channels)
}

pub fn noise_to_json(noise: &NoiseModel) -> String {
    let specs: Vec<ChannelSpec> = noise
        .channels()
        .iter()
        .map(|c| ChannelSpec {
            layer: c.layer,
            qubits: c.qubits.clone(),
            pauli: c.letters(),
            lambda: c.lambda,
        })
        .collect();
    serde_json::to_string_pretty(&specs).expect("serializable")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableTermSpec {
    pub pauli_string: String,
    pub coeff: f64,
}

pub fn parse_observable(text: &str, n_qubits: usize) -> Result<Observable> {
    let specs: Vec<ObservableTermSpec> = parse_json(text)?;
    let mut terms = Vec::with_capacity(specs.len());
    for (i, s) in specs.iter().enumerate() {
        let p: PauliString = s
            .pauli_string
            .parse()
            .map_err(|e: Error| schema(format!("/{i}/pauli_string"), e))?;
        if p.support() >> n_qubits != 0 {
            return Err(schema(format!("/{i}/pauli_string"), format!("acts outside {n_qubits} qubits")));
        }
        terms.push((p, s.coeff));
    }
    if terms.len() == 1 && terms[0].1 == 1.0 {
        return Ok(Observable::pauli(n_qubits, terms[0].0));
    }
    Observable::new(PauliSum::from_real(n_qubits, terms))
}

/// An inline Pauli label such as `Z10`, or a JSON term list.
pub fn observable_from_spec(spec: &str, n_qubits: usize) -> Result<Observable> {
    let trimmed = spec.trim_start();
    if trimmed.starts_with('[') {
        return parse_observable(spec, n_qubits);
    }
    let p: PauliString = spec.parse()?;
    if p.support() >> n_qubits != 0 {
        return Err(Error::QubitOutOfRange {
            index: 127 - p.support().leading_zeros() as usize,
            n_qubits,
        });
    }
    Ok(Observable::pauli(n_qubits, p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightconeFile {
    pub version: u32,
    pub lightcone: ShadedLightcone,
}

pub fn lightcone_to_json(lc: &ShadedLightcone) -> String {
    serde_json::to_string_pretty(&LightconeFile {
        version: FORMAT_VERSION,
        lightcone: lc.clone(),
    })
    .expect("serializable")
}

pub fn parse_lightcone(text: &str) -> Result<ShadedLightcone> {
    let f: LightconeFile = parse_json(text)?;
    check_version(Some(f.version))?;
    Ok(f.lightcone)
}

pub const LIGHTCONE_CSV_HEADER: &str = "channel,layer,qubits,pauli,c,method,side";

pub fn lightcone_to_csv(lc: &ShadedLightcone) -> String {
    let mut out = String::from(LIGHTCONE_CSV_HEADER);
    out.push('\n');
    for ch in &lc.channels {
        let qubits: Vec<String> = ch.qubits.iter().map(|q| q.to_string()).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            ch.id,
            ch.layer,
            qubits.join("-"),
            ch.pauli,
            ch.c,
            ch.method.as_str(),
            ch.side.as_str()
        );
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationTarget {
    Budget(f64),
    Epsilon(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationFile {
    pub version: u32,
    pub target: AllocationTarget,
    pub lambda_star: Vec<f64>,
    pub residual_bias_bound: f64,
    pub sampling_cost_gamma_sq: f64,
    pub budget_used: f64,
}

pub fn allocation_to_json(target: AllocationTarget, r: &AllocationResult) -> String {
    serde_json::to_string_pretty(&AllocationFile {
        version: FORMAT_VERSION,
        target,
        lambda_star: r.lambda_star.clone(),
        residual_bias_bound: r.residual_bias_bound,
        sampling_cost_gamma_sq: r.sampling_cost_gamma_sq,
        budget_used: r.budget_used,
    })
    .expect("serializable")
}

pub const TRADEOFF_CSV_HEADER: &str = "budget,residual_bias_bound,sampling_cost_gamma_sq";

pub fn tradeoff_to_csv(points: &[TradeoffPoint]) -> String {
    let mut out = String::from(TRADEOFF_CSV_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.budget, p.residual_bias_bound, p.sampling_cost_gamma_sq);
    }
    out
}

/// Fill colour for `c ∈ [0, 2]` on a fixed single-hue ramp, dark at 0.
pub fn ramp_color(c: f64) -> String {
    let t = (c / 2.0).clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(12.0, 255.0), lerp(24.0, 236.0), lerp(48.0, 200.0))
}

const CELL: usize = 14;
const MARGIN_LEFT: usize = 48;
const MARGIN_TOP: usize = 36;

/// One heatmap per error type (the channel's letter string), keyed by that
/// string. Columns are boundaries, rows are sites: qubits for one-qubit
/// types, coupling edges for two-qubit types. Cells without a channel stay
/// blank. The partition boundary is drawn between cells on different sides,
/// fallback bounds get a slash and forward-exceeded cells a dot.
pub fn heatmaps_svg(lc: &ShadedLightcone) -> BTreeMap<String, String> {
    let mut by_type: BTreeMap<String, Vec<&crate::shading::ChannelBound>> = BTreeMap::new();
    for ch in &lc.channels {
        by_type.entry(ch.pauli.clone()).or_default().push(ch);
    }
    by_type
        .into_iter()
        .map(|(ty, chans)| {
            let svg = heatmap(lc, &ty, &chans);
            (ty, svg)
        })
        .collect()
}

fn heatmap(lc: &ShadedLightcone, ty: &str, chans: &[&crate::shading::ChannelBound]) -> String {
    let mut sites: Vec<Vec<usize>> = chans.iter().map(|c| c.qubits.clone()).collect();
    if ty.len() == 1 {
        sites = (0..lc.n_qubits).map(|q| vec![q]).collect();
    } else {
        sites.sort();
        sites.dedup();
    }
    let cols = lc.depth + 1;
    let rows = sites.len();
    let mut grid: Vec<Vec<Option<&crate::shading::ChannelBound>>> = vec![vec![None; cols]; rows];
    for ch in chans {
        let r = sites.binary_search(&ch.qubits).expect("site listed");
        // Several channels of one type on one cell cannot occur in generated
        // models; if they do, show the largest bound.
        let slot = &mut grid[r][ch.layer];
        if slot.is_none_or(|prev| ch.c > prev.c) {
            *slot = Some(ch);
        }
    }
    let width = MARGIN_LEFT + cols * CELL + 16;
    let height = MARGIN_TOP + rows * CELL + 40;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(s, r#"<text x="{MARGIN_LEFT}" y="14" font-size="12">error {ty}</text>"#);
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN_LEFT}" y="28">boundary →, site ↓, c on [0, 2]</text>"#
    );
    for (r, site) in sites.iter().enumerate() {
        let label: Vec<String> = site.iter().map(|q| q.to_string()).collect();
        let y = MARGIN_TOP + r * CELL + CELL - 3;
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#, MARGIN_LEFT - 4, label.join("-"));
        for (col, cell) in grid[r].iter().enumerate() {
            let x = MARGIN_LEFT + col * CELL;
            let y = MARGIN_TOP + r * CELL;
            match cell {
                None => {
                    let _ = writeln!(
                        s,
                        r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="#ffffff" stroke="#e0e0e0" stroke-width="0.5"/>"##
                    );
                }
                Some(ch) => {
                    let _ = writeln!(
                        s,
                        r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}"><title>channel {} c={}</title></rect>"#,
                        ramp_color(ch.c),
                        ch.id,
                        ch.c
                    );
                    if matches!(ch.method, Method::PauliOneNormFallback | Method::Trivial) {
                        let _ = writeln!(
                            s,
                            r##"<line x1="{x}" y1="{}" x2="{}" y2="{y}" stroke="#888888" stroke-width="1"/>"##,
                            y + CELL,
                            x + CELL
                        );
                    }
                    if ch.forward_exceeded {
                        let _ = writeln!(
                            s,
                            r##"<circle cx="{}" cy="{}" r="2" fill="#d62728"/>"##,
                            x + CELL / 2,
                            y + CELL / 2
                        );
                    }
                }
            }
        }
    }
    // Partition boundary between neighbouring cells on different sides.
    let side = |r: usize, c: usize| grid[r][c].map(|ch| ch.side == Side::RhoSide);
    for r in 0..rows {
        for c in 0..cols {
            let Some(here) = side(r, c) else { continue };
            if c + 1 < cols {
                if let Some(right) = side(r, c + 1) {
                    if right != here {
                        let x = MARGIN_LEFT + (c + 1) * CELL;
                        let y = MARGIN_TOP + r * CELL;
                        let _ = writeln!(
                            s,
                            r##"<line x1="{x}" y1="{y}" x2="{x}" y2="{}" stroke="#e31a1c" stroke-width="2"/>"##,
                            y + CELL
                        );
                    }
                }
            }
            if r + 1 < rows {
                if let Some(below) = side(r + 1, c) {
                    if below != here {
                        let x = MARGIN_LEFT + c * CELL;
                        let y = MARGIN_TOP + (r + 1) * CELL;
                        let _ = writeln!(
                            s,
                            r##"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="#e31a1c" stroke-width="2"/>"##,
                            x + CELL
                        );
                    }
                }
            }
        }
    }
    // Legend.
    let ly = MARGIN_TOP + rows * CELL + 12;
    for i in 0..=20 {
        let c = i as f64 / 10.0;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{ly}" width="6" height="10" fill="{}"/>"#,
            MARGIN_LEFT + i * 6,
            ramp_color(c)
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}">0</text>"#, MARGIN_LEFT, ly + 22);
    let _ = writeln!(s, r#"<text x="{}" y="{}">2</text>"#, MARGIN_LEFT + 120, ly + 22);
    s.push_str("</svg>\n");
    s
}
