use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn laguerre(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_laguerre"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    })
}

const CANONICAL: &[&str] = &["deform", "--c", "1", "--k", "1", "--m", "0,1,2", "--grid", "-1:1:-1:1:65", "--out", "run"];

#[test]
fn seed_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["seed", "--kind", "radial", "--c", "1", "--grid", "-1:1:-1:1:65", "--out", "a"];
    let first = laguerre(&args, dir.path());
    assert_eq!(code(&first), 0);
    let summary = stdout_json(&first);
    let res = summary["max_residual"].as_f64().unwrap();
    // stencil error of the exact solution at h = 1/32
    assert!(res > 0.0 && res < 5e-3, "{res}");
    let mut again = args;
    again[8] = "b";
    assert_eq!(code(&laguerre(&again, dir.path())), 0);
    let a = fs::read(dir.path().join("a/potential.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/potential.csv")).unwrap());

    let zero = laguerre(&["seed", "--kind", "harmonic", "--a", "0", "--b", "0", "--out", "z"], dir.path());
    assert_eq!(code(&zero), 0);
    let text = fs::read_to_string(dir.path().join("z/potential.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.split(',').all(|v| v == "0")));
}

#[test]
fn solve_converges_and_reports_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = laguerre(&["solve", "--kind", "radial", "--c", "1", "--out", "s"], dir.path());
    assert_eq!(code(&out), 0);
    let trace = stdout_json(&out);
    assert_eq!(trace["converged"], Value::Bool(true));
    assert!(trace["final_residual"].as_f64().unwrap() < 1e-10);
    assert!(trace["iterations"].as_u64().unwrap() <= 12);
    assert!(dir.path().join("s/u.csv").exists());

    let out = laguerre(&["solve", "--kind", "harmonic", "--a", "0.5", "--out", "h"], dir.path());
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["single_step"], Value::Bool(true));

    let out = laguerre(
        &["solve", "--kind", "radial", "--c", "1", "--init", "3", "--max-iter", "1", "--out", "f"],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
    let written: Value = serde_json::from_slice(&fs::read(dir.path().join("f/trace.json")).unwrap()).unwrap();
    assert_eq!(written["converged"], Value::Bool(false));
    assert_eq!(written["trace"].as_array().unwrap().len(), 2);
    assert!(!dir.path().join("f/u.csv").exists());
}

#[test]
fn canonical_run_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = laguerre(CANONICAL, dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("run");
    for m in ["m_0", "m_1", "m_2"] {
        for f in ["report.json", "frames.csv", "f.obj", "sigma.obj", "sigma_radius.csv"] {
            assert!(run.join(m).join(f).exists(), "{m}/{f}");
        }
    }
    let lawson = fs::read_to_string(run.join("lawson.csv")).unwrap();
    let rows: Vec<Vec<&str>> = lawson.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for (row, h) in rows.iter().zip([1.0, 2.0, 3.0]) {
        assert_eq!(row[1], "hyperbolic");
        assert!((row[5].parse::<f64>().unwrap() - h).abs() < 1e-2);
        assert!(row[7].parse::<f64>().unwrap().abs() < 1e-2);
    }
    let verify = laguerre(&["verify", "--dir", "run"], dir.path());
    assert_eq!(code(&verify), 0, "{}", String::from_utf8_lossy(&verify.stdout));
    assert_eq!(stdout_json(&verify)["pass"], Value::Bool(true));

    // a second run is byte-identical
    let mut again = CANONICAL.to_vec();
    *again.last_mut().unwrap() = "run2";
    assert_eq!(code(&laguerre(&again, dir.path())), 0);
    for f in ["lawson.csv", "config.txt", "m_1/report.json", "m_2/frames.csv", "m_0/sigma.obj"] {
        assert_eq!(fs::read(run.join(f)).unwrap(), fs::read(dir.path().join("run2").join(f)).unwrap(), "{f}");
    }

    // the stored config reproduces the run
    let rerun = laguerre(&["deform", "--config", "run/config.txt", "--out", "run3"], dir.path());
    assert_eq!(code(&rerun), 0);
    assert_eq!(
        fs::read(run.join("m_2/report.json")).unwrap(),
        fs::read(dir.path().join("run3/m_2/report.json")).unwrap()
    );
}

fn leaves(v: &Value, path: Vec<String>, out: &mut Vec<Vec<String>>) {
    match v {
        Value::Object(map) => {
            for (k, w) in map {
                let mut p = path.clone();
                p.push(k.clone());
                leaves(w, p, out);
            }
        }
        Value::Array(items) => {
            for (i, w) in items.iter().enumerate() {
                let mut p = path.clone();
                p.push(i.to_string());
                leaves(w, p, out);
            }
        }
        _ => out.push(path),
    }
}

fn corrupt(v: &mut Value, path: &[String]) {
    let mut cur = v;
    for key in path {
        cur = match cur {
            Value::Object(map) => map.get_mut(key).unwrap(),
            Value::Array(items) => &mut items[key.parse::<usize>().unwrap()],
            _ => unreachable!(),
        };
    }
    *cur = match cur.clone() {
        Value::Number(n) => {
            let x = n.as_f64().unwrap();
            if n.is_f64() {
                serde_json::json!(if x == 0.0 { 1e-9 } else { x * (1.0 + 1e-9) })
            } else {
                serde_json::json!(n.as_i64().unwrap() + 1)
            }
        }
        Value::Bool(b) => Value::Bool(!b),
        Value::String(s) => Value::String(format!("{s}x")),
        Value::Null => serde_json::json!(0.5),
        other => other,
    };
}

#[test]
fn every_report_field_is_guarded() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&laguerre(CANONICAL, dir.path())), 0);
    let mut checked = 0;
    // the acceptance run covers every member; one is enough here
    for m in ["m_1"] {
        let path = dir.path().join("run").join(m).join("report.json");
        let original = fs::read(&path).unwrap();
        let report: Value = serde_json::from_slice(&original).unwrap();
        let mut paths = Vec::new();
        leaves(&report, Vec::new(), &mut paths);
        assert!(paths.len() > 40);
        for p in &paths {
            let mut bad = report.clone();
            corrupt(&mut bad, p);
            fs::write(&path, serde_json::to_string_pretty(&bad).unwrap()).unwrap();
            let out = laguerre(&["verify", "--dir", "run"], dir.path());
            assert_eq!(code(&out), 1, "{m}: corrupting {p:?} went unnoticed");
            checked += 1;
        }
        fs::write(&path, &original).unwrap();
    }
    assert!(checked > 40);
    assert_eq!(code(&laguerre(&["verify", "--dir", "run"], dir.path())), 0);
}

#[test]
fn verify_names_failed_gates() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&laguerre(CANONICAL, dir.path())), 0);
    let path = dir.path().join("run/m_1/report.json");
    let mut report: Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    report["quadric"]["rho"] = serde_json::json!(-0.3);
    fs::write(&path, serde_json::to_string_pretty(&report).unwrap()).unwrap();
    let out = laguerre(&["verify", "--dir", "run"], dir.path());
    assert_eq!(code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("quadric.rho"), "{stderr}");

    // tolerances below the discretization error fail with measured vs required
    let dir = tempfile::tempdir().unwrap();
    let coarse = ["deform", "--c", "1", "--k", "1", "--m", "0", "--grid", "-1:1:-1:1:33", "--out", "run"];
    assert_eq!(code(&laguerre(&coarse, dir.path())), 0);
    let out = laguerre(&["verify", "--dir", "run", "--tol-value", "1e-4"], dir.path());
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    let gates = v["failed_gates"].as_array().unwrap();
    let rho = gates.iter().find(|g| g["gate"] == "quadric.rho").unwrap();
    assert!(rho["measured"].as_f64().unwrap() > rho["required"].as_f64().unwrap());
    assert!(v["mismatches"].as_array().unwrap().is_empty());
}

#[test]
fn branches_and_partial_failures() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["deform", "--kind", "harmonic", "--a", "0.3", "--b", "-0.2", "--k", "1", "--m", "0", "--out", "lc"];
    assert_eq!(code(&laguerre(&args, dir.path())), 0);
    let r: Value = serde_json::from_slice(&fs::read(dir.path().join("lc/m_0/report.json")).unwrap()).unwrap();
    assert_eq!(r["quadric"]["class"], "lightcone");
    assert!(r["quadric"]["rho"].as_f64().unwrap().abs() < 1e-3);

    let args = ["deform", "--c", "1", "--k", "0", "--m", "0", "--out", "hp"];
    assert_eq!(code(&laguerre(&args, dir.path())), 0);
    let r: Value = serde_json::from_slice(&fs::read(dir.path().join("hp/m_0/report.json")).unwrap()).unwrap();
    assert_eq!(r["differentials"]["l_minimal"], Value::Bool(true));
    assert_eq!(r["hyperplane"]["class"], "spacelike");
    assert!(r["quadric"].is_null());

    // P small enough for the quadric to refuse, too large for a hyperplane
    let args = ["deform", "--c", "1", "--k", "1", "--m", "0,-0.9999992,1", "--grid", "-1:1:-1:1:33", "--out", "part"];
    assert_eq!(code(&laguerre(&args, dir.path())), 1);
    let part = dir.path().join("part");
    assert!(part.join("m_0/report.json").exists());
    assert!(part.join("m_1/report.json").exists());
    assert!(part.join("m_-0.9999992/error.txt").exists());
    let lawson = fs::read_to_string(part.join("lawson.csv")).unwrap();
    assert!(lawson.lines().nth(2).unwrap().contains("P"), "{lawson}");
    assert_eq!(code(&laguerre(&["verify", "--dir", "part"], dir.path())), 1);
}

#[test]
fn exit_codes_and_config_files() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&laguerre(&["deform", "--c", "one"], dir.path())), 2);
    assert_eq!(code(&laguerre(&["deform", "--c", "1", "--grid", "0:1:0:1:3"], dir.path())), 2);
    assert_eq!(code(&laguerre(&["deform", "--bogus"], dir.path())), 2);
    assert_eq!(code(&laguerre(&["verify", "--dir", "missing"], dir.path())), 3);
    assert_eq!(code(&laguerre(&["deform", "--kind", "cosh1d", "--c", "-1"], dir.path())), 2);

    fs::write(
        dir.path().join("run.cfg"),
        "# c = -1 is overridden below\nc = -1\nk = 1\nm = 0, 1\ngrid = -1:1:-1:1:33\nout = cfg_run\n",
    )
    .unwrap();
    let out = laguerre(&["deform", "--config", "run.cfg", "--c", "1"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stored = fs::read_to_string(dir.path().join("cfg_run/config.txt")).unwrap();
    assert!(stored.contains("c = 1\n") && stored.contains("m = 0,1\n"), "{stored}");

    fs::remove_file(dir.path().join("cfg_run/m_1/f.obj")).unwrap();
    assert_eq!(code(&laguerre(&["verify", "--dir", "cfg_run"], dir.path())), 3);
    assert_eq!(code(&laguerre(&["export", "--dir", "cfg_run"], dir.path())), 0);
    assert_eq!(code(&laguerre(&["verify", "--dir", "cfg_run"], dir.path())), 0);
}
