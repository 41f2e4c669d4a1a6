use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tendon-hand"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn close(v: &Value, expected: &[f64], tol: f64) -> bool {
    let got: Vec<f64> = v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    got.len() == expected.len() && got.iter().zip(expected).all(|(a, b)| (a - b).abs() <= tol)
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["fk", "0", "0", "0"]).status.code(), Some(0));
    assert_eq!(run(&["ik", "200", "0", "0"]).status.code(), Some(2));
    assert_eq!(run(&["fk", "0", "0"]).status.code(), Some(1));
    assert_eq!(run(&["grasp", "validate", "no_such_pose"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let out = run(&["fk", "0", "0", "0", "--finger", "pinky"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("index"));
}

#[test]
fn fk_reports_home_and_flexed_positions() {
    let home = json(&run(&["fk", "0", "0", "0"]));
    assert!(close(&home["position_mm"], &[92.0, 0.0, 0.0], 1e-9));
    assert_eq!(home["within_limits"], true);
    let flexed = json(&run(&["fk", "0", "90", "0"]));
    assert!(close(&flexed["position_mm"], &[16.0, 0.0, 76.0], 1e-9));
    let outside = json(&run(&["fk", "-40", "0", "0"]));
    assert_eq!(outside["within_limits"], false);
}

#[test]
fn ik_recovers_fk_angles() {
    let fk = json(&run(&["fk", "10", "40", "25"]));
    let p: Vec<String> = fk["position_mm"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap().to_string())
        .collect();
    let ik = json(&run(&["ik", &p[0], &p[1], &p[2]]));
    assert!(close(&ik["joints_deg"], &[10.0, 40.0, 25.0], 1e-7), "{ik}");
    assert!(ik["position_error_mm"].as_f64().unwrap() < 1e-9);
}

#[test]
fn simulate_is_byte_identical_for_a_seed() {
    let args = [
        "--seed",
        "11",
        "simulate",
        "--duration",
        "0.5",
        "--pose",
        "tripod",
        "--drop",
        "0.2",
        "--corrupt",
        "0.1",
        "--raw-codes",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let lines: Vec<&str> = std::str::from_utf8(&a.stdout).unwrap().lines().collect();
    assert_eq!(lines.len(), 25);
    let first: Value = serde_json::from_str(lines[0]).unwrap();
    assert!(first["raw_codes"].is_array());
    let other = run(&[
        "--seed",
        "12",
        "simulate",
        "--duration",
        "0.5",
        "--pose",
        "tripod",
        "--drop",
        "0.2",
        "--corrupt",
        "0.1",
    ]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn lossless_bus_matches_direct_simulation() {
    let direct = run(&["simulate", "--duration", "0.3", "--pose", "power_sphere"]);
    let bus = run(&["simulate", "--duration", "0.3", "--pose", "power_sphere", "--bus"]);
    assert_eq!(direct.stdout, bus.stdout);
}

#[test]
fn frame_log_and_trajectory_files() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.json");
    let log = dir.path().join("frames.log");
    let out = dir.path().join("tel.jsonl");
    std::fs::write(
        &traj,
        r#"{"waypoints":[
            {"t_s":0.0,"joints_deg":[[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0]]},
            {"t_s":0.2,"joints_deg":[[0,0,0],[0,30,20],[0,0,0],[0,0,0],[0,0,0]]}]}"#,
    )
    .unwrap();
    let status = run(&[
        "simulate",
        "--duration",
        "0.2",
        "--trajectory",
        traj.to_str().unwrap(),
        "--frame-log",
        log.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        status.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 10);
    let frames = std::fs::read_to_string(&log).unwrap();
    let first = frames.lines().next().unwrap();
    let hex = first.split(' ').nth(2).unwrap();
    assert!(hex.starts_with("AA") || hex.starts_with("aa"), "{first}");
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"waypoints":[{"t_s":0.0,"joints_deg":[[0,0,0]]}]}"#).unwrap();
    assert_eq!(
        run(&["simulate", "--trajectory", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn workspace_csv_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = run(&[
            "workspace",
            "--resolution",
            "6",
            "--csv",
            p.to_str().unwrap(),
            "--export-resolution",
            "5",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let report = json(&out);
        assert_eq!(report["fingers"].as_array().unwrap().len(), 5);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().next(), Some("x,y,z,finger_id"));
    assert_eq!(text.lines().count(), 1 + 5 * 125);
}

#[test]
fn config_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hand.json");
    let dumped = run(&["config"]);
    assert_eq!(dumped.status.code(), Some(0));
    std::fs::write(&path, &dumped.stdout).unwrap();
    let again = run(&["--config", path.to_str().unwrap(), "config"]);
    assert_eq!(dumped.stdout, again.stdout);
    let mut cfg: Value = serde_json::from_slice(&dumped.stdout).unwrap();
    cfg["hand"]["fingers"][1]["geometry"]["l1_mm"] = Value::from(-1.0);
    std::fs::write(&path, serde_json::to_vec(&cfg).unwrap()).unwrap();
    let rejected = run(&["--config", path.to_str().unwrap(), "fk", "0", "0", "0"]);
    assert_ne!(rejected.status.code(), Some(0));
}

#[test]
fn grasp_commands() {
    let list = run(&["grasp", "list"]);
    assert_eq!(json(&list).as_array().unwrap().len(), 33);
    assert_eq!(run(&["grasp", "validate", "--all"]).status.code(), Some(0));
    let ok = run(&["grasp", "execute", "tripod"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["converged"], true);
    let lost = run(&["grasp", "execute", "tripod", "--disconnect-after", "0.1"]);
    assert_eq!(lost.status.code(), Some(2));
    let report = json(&lost);
    assert_eq!(report["protective_stop"], true);
    assert_eq!(report["converged"], false);
}

#[test]
fn calibrate_reports_the_default_force() {
    let out = run(&["calibrate"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let f = r["max_force_n"].as_f64().unwrap();
    assert!((9.0..=13.0).contains(&f), "{f}");
    assert!(r["duality_residual"].as_f64().unwrap() <= 1e-9);
}

fn frame(board: u8, command: u8, payload: [u8; 8]) -> Vec<u8> {
    let mut f = vec![0xAA, board, command];
    f.extend_from_slice(&payload);
    let mut crc: u16 = 0xFFFF;
    for &byte in &f {
        crc ^= u16::from(byte) << 8;
        for _ in 0..8 {
            crc = if crc & 0x8000 != 0 {
                (crc << 1) ^ 0x1021
            } else {
                crc << 1
            };
        }
    }
    f.extend_from_slice(&crc.to_be_bytes());
    f
}

#[test]
fn host_protocol_over_stdio() {
    let mut targets = [0u8; 8];
    targets[0] = 1;
    for (i, deg) in [5.0f64, 45.0, 30.0].iter().enumerate() {
        let counts = (deg * 100.0).round() as i16;
        targets[2 + 2 * i..4 + 2 * i].copy_from_slice(&counts.to_le_bytes());
    }
    let mut input = Vec::new();
    for _ in 0..50 {
        input.extend(frame(9, 0x10, targets));
        input.extend(frame(9, 0x11, [0; 8]));
    }
    let mut child = bin()
        .arg("host")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&input).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(out.stdout.len(), 50 * 5 * 13);
    let last = &out.stdout[out.stdout.len() - 5 * 13..];
    let index = &last[13..26];
    assert_eq!(&index[..3], &[0xAA, 9, 0x90]);
    assert_eq!(&frame(index[1], index[2], index[3..11].try_into().unwrap()), index);
    assert_eq!(index[3], 1);
    for (i, deg) in [5.0f64, 45.0, 30.0].iter().enumerate() {
        let got = f64::from(i16::from_le_bytes([index[5 + 2 * i], index[6 + 2 * i]])) / 100.0;
        assert!((got - deg).abs() < 0.2, "joint {i}: {got}");
    }
}
