use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lightcone_shading::allocation::allocate;
use lightcone_shading::io::{parse_json, parse_lightcone, ChannelSpec, LIGHTCONE_CSV_HEADER};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn lcshade(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcshade"))
        .args(args)
        .env("LCSHADE_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn shade_into(dir: &Path, case: &str, obs: &str, threads: &str) -> Output {
    let f = fixture(case);
    lcshade(
        &[
            "shade",
            "--circuit",
            f.join("circuit.json").to_str().unwrap(),
            "--noise",
            f.join("noise.json").to_str().unwrap(),
            "--observable",
            obs,
            "--out-dir",
            dir.to_str().unwrap(),
        ],
        threads,
    )
}

#[test]
fn golden_csv_is_stable_across_runs_and_threads() {
    let expected = fs::read_to_string(fixture("golden_n5/expected.csv")).unwrap();
    for threads in ["1", "4", "1"] {
        let dir = tempfile::tempdir().unwrap();
        ok(&shade_into(dir.path(), "golden_n5", "Z2", threads));
        let csv = fs::read_to_string(dir.path().join("lightcone.csv")).unwrap();
        assert_eq!(csv, expected, "threads = {threads}");
        assert!(dir.path().join("lightcone.json").is_file());
        assert!(dir.path().join("lightcone_heatmap_Z.svg").is_file());
    }
}

#[test]
fn zz_toy_is_dark_away_from_the_observable() {
    let dir = tempfile::tempdir().unwrap();
    ok(&shade_into(dir.path(), "zz_toy", "X0", "1"));
    let csv = fs::read_to_string(dir.path().join("lightcone.csv")).unwrap();
    let mut lit = 0;
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let qubit: usize = cols[2].parse().unwrap();
        let c: f64 = cols[4].parse().unwrap();
        if qubit >= 2 {
            assert_eq!(c, 0.0, "{line}");
        } else if c > 0.0 {
            lit += 1;
        }
    }
    assert!(lit > 0);
}

#[test]
fn empty_noise_gives_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let noise = dir.path().join("noise.json");
    fs::write(&noise, "[]").unwrap();
    let out = lcshade(
        &[
            "shade",
            "--circuit",
            fixture("golden_n5/circuit.json").to_str().unwrap(),
            "--noise",
            noise.to_str().unwrap(),
            "--observable",
            "X1",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ],
        "1",
    );
    ok(&out);
    let csv = fs::read_to_string(dir.path().join("lightcone.csv")).unwrap();
    assert_eq!(csv, format!("{LIGHTCONE_CSV_HEADER}\n"));
}

#[test]
fn schema_errors_name_the_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("circuit.json");
    let text = fs::read_to_string(fixture("golden_n5/circuit.json")).unwrap();
    fs::write(&bad, text.replacen("\"theta\": 0.41", "\"theta\": \"wide\"", 1)).unwrap();
    let out = lcshade(
        &[
            "shade",
            "--circuit",
            bad.to_str().unwrap(),
            "--noise",
            fixture("golden_n5/noise.json").to_str().unwrap(),
            "--observable",
            "Z0",
        ],
        "1",
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/layers/0/1/theta"), "{err}");
}

fn allocate_args<'a>(dir: &'a Path, lc: &'a str, noise: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["allocate", "--lightcone", lc, "--noise", noise, "--out-dir", dir.to_str().unwrap()];
    v.extend_from_slice(extra);
    v
}

#[test]
fn allocate_budget_and_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    ok(&shade_into(dir.path(), "golden_n5", "Z2", "1"));
    let lc_path = dir.path().join("lightcone.json");
    let noise_path = fixture("golden_n5/noise.json");
    let (lc_s, noise_s) = (lc_path.to_str().unwrap(), noise_path.to_str().unwrap());

    ok(&lcshade(&allocate_args(dir.path(), lc_s, noise_s, &["--budget", "0"]), "1"));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("allocation.json")).unwrap()).unwrap();
    assert_eq!(v["sampling_cost_gamma_sq"], 1.0);

    ok(&lcshade(&allocate_args(dir.path(), lc_s, noise_s, &["--epsilon", "0"]), "1"));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("allocation.json")).unwrap()).unwrap();
    assert_eq!(v["residual_bias_bound"], 0.0);

    // The tradeoff curve agrees with the library pointwise.
    let lc = parse_lightcone(&fs::read_to_string(&lc_path).unwrap()).unwrap();
    let specs: Vec<ChannelSpec> = parse_json(&fs::read_to_string(&noise_path).unwrap()).unwrap();
    let rates: Vec<f64> = specs.iter().map(|s| s.lambda).collect();
    let curve = fs::read_to_string(dir.path().join("allocation_tradeoff.csv")).unwrap();
    let mut rows = 0;
    for line in curve.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let r = allocate(&lc, &rates, cols[0]).unwrap();
        assert_eq!(r.residual_bias_bound, cols[1]);
        assert_eq!(r.sampling_cost_gamma_sq, cols[2]);
        rows += 1;
    }
    assert!(rows > 10);

    for extra in [&["--budget", "0.1", "--epsilon", "0.1"][..], &[][..]] {
        let out = lcshade(&allocate_args(dir.path(), lc_s, noise_s, extra), "1");
        assert_eq!(out.status.code(), Some(2), "{extra:?}");
    }
}

#[test]
fn verify_passes_sound_runs_and_catches_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture("golden_n5");
    let (circuit, noise) = (f.join("circuit.json"), f.join("noise.json"));
    let base = |extra: &[&str]| {
        let mut v = vec![
            "verify",
            "--circuit",
            circuit.to_str().unwrap(),
            "--noise",
            noise.to_str().unwrap(),
            "--observable",
            "Z2",
        ];
        v.extend_from_slice(extra);
        v.iter().map(|s| s.to_string()).collect::<Vec<_>>()
    };
    let args = base(&[]);
    let out = ok(&lcshade(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>(), "2"));
    assert!(out.contains("verified: 0 violations"));

    // Zero every bound: some inside channel must then be caught.
    ok(&shade_into(dir.path(), "golden_n5", "Z2", "1"));
    let mut lc = parse_lightcone(&fs::read_to_string(dir.path().join("lightcone.json")).unwrap()).unwrap();
    for ch in &mut lc.channels {
        ch.c = 0.0;
    }
    let corrupted = dir.path().join("corrupted.json");
    fs::write(&corrupted, lightcone_shading::io::lightcone_to_json(&lc)).unwrap();
    let args = base(&["--lightcone", corrupted.to_str().unwrap()]);
    let out = lcshade(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>(), "1");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAILED"));
}

#[test]
fn verify_noiseless_and_refuses_large_registers() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("noise.json");
    fs::write(&empty, "[]").unwrap();
    let out = ok(&lcshade(
        &[
            "verify",
            "--circuit",
            fixture("golden_n5/circuit.json").to_str().unwrap(),
            "--noise",
            empty.to_str().unwrap(),
            "--observable",
            "Z2",
        ],
        "1",
    ));
    assert!(out.contains("|bias| 0 <= bound 0"), "{out}");

    ok(&lcshade(
        &["tfim1d-demo", "--n", "11", "--steps", "1", "--out-dir", dir.path().to_str().unwrap()],
        "1",
    ));
    let out = lcshade(
        &[
            "verify",
            "--circuit",
            dir.path().join("circuit.json").to_str().unwrap(),
            "--noise",
            dir.path().join("noise.json").to_str().unwrap(),
            "--observable",
            "Z5",
        ],
        "1",
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dense simulation budget of 10"));
}

#[test]
fn demo_writes_both_lightcones() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&lcshade(
        &["tfim1d-demo", "--n", "8", "--steps", "3", "--out-dir", dir.path().to_str().unwrap()],
        "1",
    ));
    assert!(out.contains("total bias bound"));
    for name in ["circuit.json", "noise.json", "shaded.json", "shaded.csv", "conventional.csv", "shaded_heatmap_Z.svg"] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
}
