//! `lcshade`: shade, allocate and verify from the command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lightcone_shading::allocation::{allocate, cost_for_bias_target, tradeoff_curve};
use lightcone_shading::circuit::{build_tfim_1d, NoiseModel, NoisePlacement};
use lightcone_shading::evolution::DEFAULT_B_MAX;
use lightcone_shading::io::{self, AllocationTarget, ChannelSpec};
use lightcone_shading::norms::{SpectralConfig, DEFAULT_N_MAX, DEFAULT_SPECTRAL_TOL};
use lightcone_shading::oracle::{exact_expectation, simulate_pec, verify_lightcone, DENSE_BUDGET};
use lightcone_shading::shading::{conventional_shade, shade, total_bias_bound, ShadeConfig};
use lightcone_shading::{with_threads, Error, LayeredCircuit, Observable, ShadedLightcone};

#[derive(Parser)]
#[command(name = "lcshade", version, about = "Per-channel bias bounds and antinoise budgets for noisy circuits")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "LCSHADE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bound every channel's bias and write JSON, CSV and SVG heatmaps.
    Shade(ShadeArgs),
    /// Distribute an antinoise budget, or find the cheapest one for a bias target.
    Allocate(AllocateArgs),
    /// Check a shaded lightcone against dense simulation (small registers only).
    Verify(VerifyArgs),
    /// Shade a 1D transverse-field Ising Trotter circuit with uniform noise.
    #[command(name = "tfim1d-demo")]
    Tfim1dDemo(DemoArgs),
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    noise: PathBuf,
    /// A Pauli label such as `Z10`, or a path to a JSON term list.
    #[arg(long)]
    observable: String,
}

#[derive(Args, Clone, Copy)]
struct Tuning {
    /// Largest Pauli-term count kept during exact evolution.
    #[arg(long, default_value_t = DEFAULT_B_MAX)]
    b_max: usize,
    /// Largest commutator support for exact spectral norms.
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    n_max: u32,
    #[arg(long, default_value_t = DEFAULT_SPECTRAL_TOL)]
    spectral_tol: f64,
    /// Skip the speed-limit pass.
    #[arg(long)]
    no_speed_limit: bool,
}

impl Tuning {
    fn config(self) -> ShadeConfig {
        ShadeConfig {
            b_max: self.b_max,
            spectral: SpectralConfig {
                tol: self.spectral_tol,
                n_max: self.n_max,
                ..SpectralConfig::default()
            },
            speed_limit: !self.no_speed_limit,
        }
    }
}

#[derive(Args)]
struct ShadeArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    tuning: Tuning,
    /// Binary conventional lightcone instead of shading.
    #[arg(long)]
    conventional: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// File name stem for the artifacts.
    #[arg(long, default_value = "lightcone")]
    stem: String,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("target").required(true).multiple(false).args(["budget", "epsilon"]))]
struct AllocateArgs {
    #[arg(long)]
    lightcone: PathBuf,
    #[arg(long)]
    noise: PathBuf,
    /// Total antinoise rate `Σλ*`.
    #[arg(long)]
    budget: Option<f64>,
    /// Residual bias bound to reach at least cost.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Evenly spaced budgets added to the tradeoff curve.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value = "allocation")]
    stem: String,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    tuning: Tuning,
    /// Verify this lightcone instead of shading afresh.
    #[arg(long)]
    lightcone: Option<PathBuf>,
    /// Also run full-mitigation sampling with this many shots.
    #[arg(long, default_value_t = 0)]
    pec_shots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Absolute tolerance for floating-point noise in the comparison.
    #[arg(long, default_value_t = 1e-12)]
    slack: f64,
    /// Write the report as JSON here as well.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Placement {
    TwoQubitLayers,
    EveryLayer,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long, default_value_t = std::f64::consts::PI / 16.0, allow_negative_numbers = true)]
    theta_x: f64,
    #[arg(long, default_value_t = -std::f64::consts::PI / 2.0, allow_negative_numbers = true)]
    theta_zz: f64,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    /// Measured qubit for the Z observable; defaults to the middle of the chain.
    #[arg(long)]
    site: Option<usize>,
    #[arg(long, value_enum, default_value_t = Placement::TwoQubitLayers)]
    placement: Placement,
    #[command(flatten)]
    tuning: Tuning,
    #[arg(long, default_value = "tfim1d")]
    out_dir: PathBuf,
}

type CliResult<T> = Result<T, String>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn write(dir: &Path, name: &str, text: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(path)
}

fn ctx(path: &Path) -> impl Fn(Error) -> String + '_ {
    move |e| format!("{}: {e}", path.display())
}

fn load_inputs(inputs: &Inputs) -> CliResult<(LayeredCircuit, NoiseModel, Observable)> {
    let circuit = io::parse_circuit(&read(&inputs.circuit)?).map_err(ctx(&inputs.circuit))?;
    let noise = io::parse_noise(&read(&inputs.noise)?, &circuit).map_err(ctx(&inputs.noise))?;
    let spec = if Path::new(&inputs.observable).is_file() {
        read(Path::new(&inputs.observable))?
    } else {
        inputs.observable.clone()
    };
    let obs = io::observable_from_spec(&spec, circuit.n_qubits()).map_err(|e| format!("observable: {e}"))?;
    Ok((circuit, noise, obs))
}

fn write_lightcone(dir: &Path, stem: &str, lc: &ShadedLightcone) -> CliResult<()> {
    write(dir, &format!("{stem}.json"), &io::lightcone_to_json(lc))?;
    write(dir, &format!("{stem}.csv"), &io::lightcone_to_csv(lc))?;
    for (ty, svg) in io::heatmaps_svg(lc) {
        write(dir, &format!("{stem}_heatmap_{ty}.svg"), &svg)?;
    }
    Ok(())
}

fn cmd_shade(args: ShadeArgs) -> CliResult<ExitCode> {
    let (circuit, noise, obs) = load_inputs(&args.inputs)?;
    let lc = if args.conventional {
        conventional_shade(&circuit, &obs, &noise)
    } else {
        shade(&circuit, &obs, &noise, &args.tuning.config())
    }
    .map_err(|e| e.to_string())?;
    write_lightcone(&args.out_dir, &args.stem, &lc)?;
    println!(
        "{} channels, total bias bound {}, written to {}",
        lc.channels.len(),
        total_bias_bound(&lc, &noise.rates()),
        args.out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_allocate(args: AllocateArgs) -> CliResult<ExitCode> {
    let lc = io::parse_lightcone(&read(&args.lightcone)?).map_err(ctx(&args.lightcone))?;
    let specs: Vec<ChannelSpec> = io::parse_json(&read(&args.noise)?).map_err(ctx(&args.noise))?;
    if specs.len() != lc.channels.len() {
        return Err(format!(
            "{} channels in the noise file but {} in the lightcone",
            specs.len(),
            lc.channels.len()
        ));
    }
    if let Some((i, _)) = specs.iter().zip(&lc.channels).enumerate().find(|(_, (s, c))| s.layer != c.layer) {
        return Err(format!("channel {i}: noise and lightcone disagree on its layer"));
    }
    let rates: Vec<f64> = specs.iter().map(|s| s.lambda).collect();
    let (target, result) = match (args.budget, args.epsilon) {
        (Some(b), None) => (AllocationTarget::Budget(b), allocate(&lc, &rates, b)),
        (None, Some(e)) => (AllocationTarget::Epsilon(e), cost_for_bias_target(&lc, &rates, e)),
        _ => unreachable!("clap enforces exactly one target"),
    };
    let result = result.map_err(|e| e.to_string())?;
    let layers: Vec<usize> = lc.channels.iter().map(|c| c.layer).collect();
    let curve = tradeoff_curve(&lc.bounds(), &rates, &layers, args.samples).map_err(|e| e.to_string())?;
    write(&args.out_dir, &format!("{}.json", args.stem), &io::allocation_to_json(target, &result))?;
    write(&args.out_dir, &format!("{}_tradeoff.csv", args.stem), &io::tradeoff_to_csv(&curve))?;
    println!(
        "budget used {}, residual bias bound {}, gamma^2 {}",
        result.budget_used, result.residual_bias_bound, result.sampling_cost_gamma_sq
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> CliResult<ExitCode> {
    let (circuit, noise, obs) = load_inputs(&args.inputs)?;
    if circuit.n_qubits() > DENSE_BUDGET {
        return Err(format!(
            "refusing to verify: {} qubits exceeds the dense simulation budget of {DENSE_BUDGET}",
            circuit.n_qubits()
        ));
    }
    let lc = match &args.lightcone {
        Some(path) => io::parse_lightcone(&read(path)?).map_err(ctx(path))?,
        None => shade(&circuit, &obs, &noise, &args.tuning.config()).map_err(|e| e.to_string())?,
    };
    let report = verify_lightcone(&circuit, &noise, &obs, &lc, args.slack).map_err(|e| e.to_string())?;
    println!("channel,exact_incremental_bias,p_times_c,margin");
    for c in &report.channels {
        println!("{},{},{},{}", c.id, c.incremental_bias, c.bound, c.margin);
    }
    println!(
        "total: |bias| {} <= bound {}: {}",
        report.total_bias,
        report.total_bound,
        report.total_bias <= report.total_bound + args.slack
    );
    if args.pec_shots > 0 {
        let ideal = exact_expectation(&circuit, &NoiseModel::empty(), &obs).map_err(|e| e.to_string())?;
        let est = simulate_pec(&circuit, &noise, &noise.rates(), &obs, args.pec_shots, args.seed)
            .map_err(|e| e.to_string())?;
        println!(
            "pec: ideal {ideal}, estimate {} ± {}, gamma {}",
            est.mean,
            est.std_error(),
            est.gamma
        );
    }
    if let Some(path) = &args.report {
        let text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
        fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    if report.passed() {
        println!("verified: 0 violations");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("FAILED: {} violation(s)", report.violations);
        Ok(ExitCode::from(1))
    }
}

fn cmd_demo(args: DemoArgs) -> CliResult<ExitCode> {
    let site = args.site.unwrap_or(args.n / 2);
    if site >= args.n {
        return Err(format!("site {site} is outside a chain of {}", args.n));
    }
    let circuit = build_tfim_1d(args.n, args.steps, args.theta_x, args.theta_zz).map_err(|e| e.to_string())?;
    let placement = match args.placement {
        Placement::TwoQubitLayers => NoisePlacement::AfterTwoQubitLayers,
        Placement::EveryLayer => NoisePlacement::AfterEveryLayer,
    };
    let noise = NoiseModel::uniform_local(&circuit, args.lambda, placement).map_err(|e| e.to_string())?;
    let obs = io::observable_from_spec(&format!("Z{site}"), args.n).map_err(|e| e.to_string())?;
    write(&args.out_dir, "circuit.json", &io::circuit_to_json(&circuit))?;
    write(&args.out_dir, "noise.json", &io::noise_to_json(&noise))?;
    let lc = shade(&circuit, &obs, &noise, &args.tuning.config()).map_err(|e| e.to_string())?;
    let conv = conventional_shade(&circuit, &obs, &noise).map_err(|e| e.to_string())?;
    write_lightcone(&args.out_dir, "shaded", &lc)?;
    write_lightcone(&args.out_dir, "conventional", &conv)?;
    let rates = noise.rates();
    let (shaded, conventional) = (total_bias_bound(&lc, &rates), total_bias_bound(&conv, &rates));
    let eps = 0.1 * shaded;
    let g = |lc: &ShadedLightcone| cost_for_bias_target(lc, &rates, eps).map(|r| r.sampling_cost_gamma_sq);
    let (gs, gc) = (g(&lc).map_err(|e| e.to_string())?, g(&conv).map_err(|e| e.to_string())?);
    println!("{} channels", noise.len());
    println!("total bias bound: shaded {shaded}, conventional {conventional}");
    println!("gamma^2 for epsilon = {eps}: shaded {gs}, conventional {gc}");
    println!("artifacts in {}", args.out_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let outcome = with_threads(threads, move || match cli.command {
        Command::Shade(a) => cmd_shade(a),
        Command::Allocate(a) => cmd_allocate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Tfim1dDemo(a) => cmd_demo(a),
    });
    match outcome {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
