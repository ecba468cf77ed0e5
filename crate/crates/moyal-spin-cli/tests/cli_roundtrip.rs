//! End-to-end tests driving the compiled binary through temp files.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use moyal_spin::angular::SpinJ;
use moyal_spin::constellation::{Constellation, ConstellationJson};
use moyal_spin::discrete::{discrete_symbol, dual_kernel, Symbol, SymbolVariant};
use moyal_spin::opalg::{Operator, OperatorJson};
use num_complex::Complex64;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_moyal-spin"))
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("moyal-spin-test-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(cmd: &mut Command) -> i32 {
    cmd.output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn load_constellation(path: &PathBuf) -> Constellation {
    let json: ConstellationJson = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    Constellation::from_json(&json).unwrap()
}

#[test]
fn gen_spiral_is_allowed_and_tagged() {
    let dir = workdir("spiral");
    let out = dir.join("c.json");
    let polar = dir.join("c.csv");
    run_ok(bin().args([
        "gen",
        "spiral",
        "--two-s",
        "1",
        "--z0",
        "0.8@36deg",
        "--out",
        out.to_str().unwrap(),
        "--polar-csv",
        polar.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("tool_version"));
    let c = load_constellation(&out);
    assert_eq!(c.len(), 4);
    assert!(moyal_spin::constellation::validate(&c).allowed);

    // Polar CSV matches the stored points.
    let csv = fs::read_to_string(&polar).unwrap();
    let rows: Vec<&str> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("theta"))
        .collect();
    assert_eq!(rows.len(), 4);
    let first: Vec<f64> = rows[0].split(',').map(|v| v.parse().unwrap()).collect();
    assert!((first[0] - c.points()[0].theta()).abs() < 1e-15);
    assert!((first[1] - c.points()[0].phi()).abs() < 1e-15);

    // validate exits 0 on the same file.
    assert_eq!(
        exit_code(bin().args(["validate", out.to_str().unwrap()])),
        0
    );
}

#[test]
fn gen_random_is_deterministic() {
    let dir = workdir("random");
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    for path in [&a, &b] {
        run_ok(bin().args([
            "gen",
            "random",
            "--two-s",
            "2",
            "--seed",
            "7",
            "--out",
            path.to_str().unwrap(),
        ]));
    }
    assert_eq!(
        fs::read_to_string(&a).unwrap(),
        fs::read_to_string(&b).unwrap()
    );
    assert_eq!(load_constellation(&a).len(), 9);
}

#[test]
fn gen_free_overloaded_cone_reports_forbidden() {
    let dir = workdir("free");
    let out = dir.join("c.json");
    let code = exit_code(bin().args([
        "gen",
        "free",
        "--two-s",
        "1",
        "--cone",
        "0,0,1:60:4:0",
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(code, 3, "4 points on one cone exceed 4s+1 = 3");
    // The file and the report are still produced.
    assert!(out.exists());
}

#[test]
fn validate_equatorial_square_is_forbidden() {
    let dir = workdir("validate");
    let out = dir.join("c.json");
    // Four points on the equator (one circle) via nested cones is not
    // representable (angles must differ), so write the file directly.
    let json = ConstellationJson {
        tool_version: None,
        two_s: 1,
        points: vec![
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
        ],
    };
    fs::write(&out, serde_json::to_string(&json).unwrap()).unwrap();
    assert_eq!(
        exit_code(bin().args(["validate", out.to_str().unwrap()])),
        3
    );
}

#[test]
fn symbol_identity_and_metric_relation() {
    let dir = workdir("symbol");
    let c_path = dir.join("c.json");
    run_ok(bin().args([
        "gen",
        "random",
        "--two-s",
        "1",
        "--seed",
        "11",
        "--out",
        c_path.to_str().unwrap(),
    ]));
    let s = SpinJ::from_two_s(1).unwrap();

    let id_path = dir.join("id.json");
    let id: OperatorJson = Operator::identity(s).to_json();
    fs::write(&id_path, serde_json::to_string(&id).unwrap()).unwrap();

    let lower_path = dir.join("lower.csv");
    run_ok(bin().args([
        "symbol",
        "--constellation",
        c_path.to_str().unwrap(),
        "--operator",
        id_path.to_str().unwrap(),
        "--variant",
        "lower",
        "--out",
        lower_path.to_str().unwrap(),
    ]));
    let lower = Symbol::from_csv(s, &fs::read_to_string(&lower_path).unwrap()).unwrap();
    for v in lower.values() {
        assert!((v.re - 1.0).abs() < 1e-12 && v.im.abs() < 1e-12);
    }

    // Upper variant equals (2s+1) G^{-1} lower.
    let upper_path = dir.join("upper.csv");
    run_ok(bin().args([
        "symbol",
        "--constellation",
        c_path.to_str().unwrap(),
        "--operator",
        id_path.to_str().unwrap(),
        "--variant",
        "upper",
        "--out",
        upper_path.to_str().unwrap(),
    ]));
    let upper = Symbol::from_csv(s, &fs::read_to_string(&upper_path).unwrap()).unwrap();
    let c = load_constellation(&c_path);
    let kp = dual_kernel(&c).unwrap();
    for nu in 0..c.len() {
        let mut acc = Complex64::new(0.0, 0.0);
        for nup in 0..c.len() {
            acc += kp.gram_inv()[(nu, nup)] * lower.values()[nup];
        }
        acc *= 2.0;
        assert!((acc - upper.values()[nu]).norm() < 1e-9 * kp.gram_condition());
    }
}

#[test]
fn dual_manifest_contents() {
    let dir = workdir("dual");
    let c_path = dir.join("c.json");
    run_ok(bin().args([
        "gen",
        "spiral",
        "--two-s",
        "1",
        "--z0",
        "0.8@36deg",
        "--out",
        c_path.to_str().unwrap(),
    ]));
    let kp_path = dir.join("kp.json");
    run_ok(bin().args([
        "dual",
        "--constellation",
        c_path.to_str().unwrap(),
        "--method",
        "vandermonde",
        "--z0",
        "0.8@36deg",
        "--out",
        kp_path.to_str().unwrap(),
    ]));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&kp_path).unwrap()).unwrap();
    assert_eq!(manifest["two_s"], 1);
    assert_eq!(manifest["method"], "vandermonde");
    assert_eq!(manifest["q_ops"].as_array().unwrap().len(), 4);
    assert_eq!(manifest["dual_ops"].as_array().unwrap().len(), 4);
    assert_eq!(manifest["constellation_sha256"].as_str().unwrap().len(), 64);

    // The exported duals satisfy the trace pairing against the projectors.
    let s = SpinJ::from_two_s(1).unwrap();
    let q0: OperatorJson = serde_json::from_value(manifest["q_ops"][0].clone()).unwrap();
    let d0: OperatorJson = serde_json::from_value(manifest["dual_ops"][0].clone()).unwrap();
    let d1: OperatorJson = serde_json::from_value(manifest["dual_ops"][1].clone()).unwrap();
    let q0 = Operator::from_json(&q0).unwrap();
    let d0 = Operator::from_json(&d0).unwrap();
    let d1 = Operator::from_json(&d1).unwrap();
    let t00 = moyal_spin::opalg::trace_product(&q0, &d0).unwrap();
    let t01 = moyal_spin::opalg::trace_product(&q0, &d1).unwrap();
    let _ = s;
    assert!((t00.re - 2.0).abs() < 1e-8);
    assert!(t01.norm() < 1e-8);
}

#[test]
fn reconstruct_round_trip_through_files() {
    let dir = workdir("reconstruct");
    let c_path = dir.join("c.json");
    run_ok(bin().args([
        "gen",
        "random",
        "--two-s",
        "2",
        "--seed",
        "5",
        "--out",
        c_path.to_str().unwrap(),
    ]));
    let c = load_constellation(&c_path);
    let s = c.s();
    let kp = dual_kernel(&c).unwrap();

    // A valid density matrix: projector onto a superposition.
    let amps = [
        Complex64::new(0.6, 0.1),
        Complex64::new(-0.3, 0.5),
        Complex64::new(0.2, -0.4),
    ];
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let rho = Operator::from_fn(s, |a, b| amps[a] * amps[b].conj() / (norm * norm));
    let (p, _) = moyal_spin::tomography::probabilities(&rho, &kp).unwrap();

    // Probability CSV in the documented "nu,p" format.
    let p_path = dir.join("p.csv");
    let mut text = String::from("nu,p\n");
    for (i, v) in p.values().iter().enumerate() {
        text.push_str(&format!("{},{:.17e}\n", i + 1, v.re));
    }
    fs::write(&p_path, text).unwrap();

    let rho_path = dir.join("rho.json");
    run_ok(bin().args([
        "reconstruct",
        "--constellation",
        c_path.to_str().unwrap(),
        "--probabilities",
        p_path.to_str().unwrap(),
        "--out",
        rho_path.to_str().unwrap(),
    ]));
    let json: OperatorJson = serde_json::from_str(&fs::read_to_string(&rho_path).unwrap()).unwrap();
    let back = Operator::from_json(&json).unwrap();
    assert!(
        back.max_abs_diff(&rho) < 1e-9,
        "{}",
        back.max_abs_diff(&rho)
    );
}

#[test]
fn star_with_identity_echoes_operand() {
    let dir = workdir("star");
    let c_path = dir.join("c.json");
    run_ok(bin().args([
        "gen",
        "random",
        "--two-s",
        "1",
        "--seed",
        "3",
        "--out",
        c_path.to_str().unwrap(),
    ]));
    let c = load_constellation(&c_path);
    let s = c.s();
    let kp = dual_kernel(&c).unwrap();

    let id_sym = discrete_symbol(&Operator::identity(s), &kp, SymbolVariant::Lower).unwrap();
    let op = Operator::from_fn(s, |a, b| Complex64::new((a + b) as f64 * 0.3, 0.0));
    let op = op.add(&op.adjoint()).unwrap();
    let op_sym = discrete_symbol(&op, &kp, SymbolVariant::Lower).unwrap();

    let a_path = dir.join("a.csv");
    let b_path = dir.join("b.csv");
    fs::write(&a_path, id_sym.to_csv()).unwrap();
    fs::write(&b_path, op_sym.to_csv()).unwrap();

    let out_path = dir.join("out.csv");
    run_ok(bin().args([
        "star",
        "--constellation",
        c_path.to_str().unwrap(),
        "--a",
        a_path.to_str().unwrap(),
        "--b",
        b_path.to_str().unwrap(),
        "--threads",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]));
    let result = Symbol::from_csv(s, &fs::read_to_string(&out_path).unwrap()).unwrap();
    for (x, y) in result.values().iter().zip(op_sym.values()) {
        assert!((x - y).norm() < 1e-9 * kp.gram_condition());
    }
}

#[test]
fn wigner_grid_shape_and_identity_value() {
    let dir = workdir("wigner");
    let id_path = dir.join("id.json");
    let s = SpinJ::from_two_s(1).unwrap();
    fs::write(
        &id_path,
        serde_json::to_string(&Operator::identity(s).to_json()).unwrap(),
    )
    .unwrap();
    let out_path = dir.join("grid.csv");
    run_ok(bin().args([
        "wigner",
        "--operator",
        id_path.to_str().unwrap(),
        "--theta-steps",
        "5",
        "--phi-steps",
        "8",
        "--side",
        "q",
        "--out",
        out_path.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# moyal-spin"));
    assert!(header.contains("two_s=1"));
    assert_eq!(lines.next().unwrap(), "theta,phi,value");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5 * 8);
    // The Q-symbol of the identity is 1 everywhere.
    for row in rows {
        let value: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!((value - 1.0).abs() < 1e-10);
    }
}

#[test]
fn invalid_inputs_exit_two() {
    let dir = workdir("invalid");
    let out = dir.join("c.json");
    // Bad z0 literal.
    assert_eq!(
        exit_code(bin().args([
            "gen",
            "spiral",
            "--two-s",
            "1",
            "--z0",
            "garbage",
            "--out",
            out.to_str().unwrap(),
        ])),
        2
    );
    // Spiral seed on the unit circle.
    assert_eq!(
        exit_code(bin().args([
            "gen",
            "spiral",
            "--two-s",
            "1",
            "--z0",
            "1@45deg",
            "--out",
            out.to_str().unwrap(),
        ])),
        2
    );
    // Missing file.
    assert_eq!(
        exit_code(bin().args(["validate", dir.join("nope.json").to_str().unwrap()])),
        2
    );
}
