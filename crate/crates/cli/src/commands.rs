use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, Write as _};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use laguerre::blaschke::{
    certification_tol, liouville_residual, newton_solve_liouville, seed_potential, NewtonOptions, Potential,
    SeedKind,
};
use laguerre::cyclographic::point_to_sphere;
use laguerre::frames::{realize_legendre, FrameField, Scheme};
use laguerre::geometry::{gauss_map, write_obj};
use laguerre::grid::{Grid, ScalarField};
use laguerre::pipeline::{check_report, deform as run_deform, Gate, MemberRun, Report, Tolerances};
use laguerre::Error;

use crate::config::Settings;
use crate::Failure;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn read_field(path: &Path) -> Result<ScalarField, Failure> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    ScalarField::read_csv(BufReader::new(file)).map_err(|e| match e {
        Error::Io(e) => io_err(path, e),
        e => Failure::Usage(format!("{}: {e}", path.display())),
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Prints to stdout; a closed pipe is not an error worth reporting.
fn print_json<T: Serialize>(value: &T) {
    let text = serde_json::to_string_pretty(value).expect("report types serialize");
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn seed_kind(s: &Settings) -> Result<SeedKind, Failure> {
    match s.raw("kind").unwrap_or("radial") {
        "radial" => Ok(SeedKind::Radial { c: s.require_f64("c")? }),
        "cosh1d" => Ok(SeedKind::Cosh1d { c: s.require_f64("c")? }),
        "harmonic" => {
            if s.f64("c")?.is_some_and(|c| c != 0.0) {
                return Err(Failure::Usage("harmonic potentials have c = 0".into()));
            }
            Ok(SeedKind::Harmonic {
                a: s.f64_or("a", 0.0)?,
                b: s.f64_or("b", 0.0)?,
            })
        }
        other => Err(Failure::Usage(format!("unknown kind '{other}' (radial, cosh1d, harmonic)"))),
    }
}

fn character(kind: &SeedKind) -> f64 {
    match *kind {
        SeedKind::Radial { c } | SeedKind::Cosh1d { c } => c,
        _ => 0.0,
    }
}

/// The special potential named by `potential` (with `c`) or by `kind`.
fn load_potential(s: &Settings) -> Result<Potential, Failure> {
    let k = s.f64_or("k", 1.0)?;
    match s.path("potential") {
        Some(path) => {
            let u = read_field(&path)?;
            let c = s.require_f64("c")?;
            let tol = certification_tol(u.grid, c);
            Ok(Potential::special(u, c, k, tol)?)
        }
        None => Ok(seed_potential(&seed_kind(s)?, s.grid()?, k)?),
    }
}

fn grid_spec(g: &Grid) -> String {
    format!("{}:{}:{}:{}:{}:{}", g.x0, g.x1, g.y0, g.y1, g.nx, g.ny)
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Euler => "euler",
        Scheme::MidpointExp => "midpoint_exp",
    }
}

#[derive(Serialize)]
struct SeedSummary {
    kind: String,
    c: f64,
    grid: Grid,
    h: f64,
    max_residual: f64,
    path: String,
}

pub fn seed(s: &Settings) -> Result<(), Failure> {
    let kind = seed_kind(s)?;
    let grid = s.grid()?;
    let p = seed_potential(&kind, grid, s.f64_or("k", 1.0)?)?;
    let c = character(&kind);
    let path = s.out_dir().join("potential.csv");
    write_file(&path, p.u.to_csv_string().as_bytes())?;
    print_json(&SeedSummary {
        kind: s.raw("kind").unwrap_or("radial").to_string(),
        c,
        grid,
        h: grid.h(),
        max_residual: liouville_residual(&p.u, c).max_abs(),
        path: path.display().to_string(),
    });
    Ok(())
}

#[derive(Serialize)]
struct SolveTrace {
    c: f64,
    converged: bool,
    iterations: usize,
    single_step: bool,
    final_residual: f64,
    trace: Vec<f64>,
    error: Option<String>,
}

pub fn solve(s: &Settings) -> Result<(), Failure> {
    let (boundary, c) = match s.path("potential") {
        Some(path) => (read_field(&path)?, s.require_f64("c")?),
        None => {
            let kind = seed_kind(s)?;
            (seed_potential(&kind, s.grid()?, 0.0)?.u, character(&kind))
        }
    };
    // zero, boundary, a constant, or a CSV path
    let init = match s.raw("init").unwrap_or("zero") {
        "zero" => ScalarField::sample(boundary.grid, |_, _| 0.0),
        "boundary" => boundary.clone(),
        v => match v.parse::<f64>() {
            Ok(x) if x.is_finite() => ScalarField::sample(boundary.grid, |_, _| x),
            _ => read_field(Path::new(v))?,
        },
    };
    let opts = NewtonOptions {
        tol: s.f64_or("newton_tol", NewtonOptions::default().tol)?,
        max_iter: s.usize_or("max_iter", NewtonOptions::default().max_iter)?,
    };
    let dir = s.out_dir();
    let (trace, error, solution) = match newton_solve_liouville(c, &boundary, &init, opts) {
        Ok(sol) => (sol.trace.clone(), None, Some(sol)),
        Err(e @ (Error::NonConvergence { .. } | Error::SingularJacobian { .. })) => {
            let trace = match &e {
                Error::NonConvergence { trace } | Error::SingularJacobian { trace, .. } => trace.clone(),
                _ => unreachable!(),
            };
            (trace, Some(e.to_string()), None)
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(sol) = &solution {
        write_file(&dir.join("u.csv"), sol.u.to_csv_string().as_bytes())?;
    }
    let iterations = trace.len().saturating_sub(1);
    let summary = SolveTrace {
        c,
        converged: solution.is_some(),
        iterations,
        single_step: solution.is_some() && iterations == 1,
        final_residual: trace.last().copied().unwrap_or(f64::INFINITY),
        trace,
        error,
    };
    let json = serde_json::to_string_pretty(&summary).expect("trace serializes") + "\n";
    write_file(&dir.join("trace.json"), json.as_bytes())?;
    let _ = write!(std::io::stdout(), "{json}");
    match summary.error {
        Some(e) => Err(Failure::Gate(e)),
        None => Ok(()),
    }
}

fn member_dir(m: f64) -> String {
    format!("m_{m}")
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn snake<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        _ => String::new(),
    }
}

/// `f.obj`, `sigma.obj` (decoded sphere centers) and `sigma_radius.csv`.
fn mesh_files(frames: &FrameField) -> Result<Vec<(String, Vec<u8>)>, Failure> {
    let lift = realize_legendre(frames)?;
    let spheres = gauss_map(frames).map(point_to_sphere);
    let mut f_obj = Vec::new();
    write_obj(&lift.f, &mut f_obj)?;
    let mut s_obj = Vec::new();
    write_obj(&spheres.map(|s| s.center), &mut s_obj)?;
    let g = spheres.grid;
    let mut radius = String::from("i,j,radius\n");
    for (i, j) in g.nodes(0) {
        writeln!(radius, "{i},{j},{}", spheres.at(i, j).radius).expect("writing to a String cannot fail");
    }
    Ok(vec![
        ("f.obj".into(), f_obj),
        ("sigma.obj".into(), s_obj),
        ("sigma_radius.csv".into(), radius.into_bytes()),
    ])
}

const LAWSON_HEADER: &str =
    "m,class,rho,kappa,kappa_expected,H,H_expected,invariant,invariant_expected,metric_deviation,error\n";

fn lawson_line(m: f64, run: &Result<MemberRun, Error>) -> String {
    let r = match run {
        Err(e) => return format!("{m},,,,,,,,,,{}\n", csv_escape(&e.to_string())),
        Ok(run) => &run.report,
    };
    match (r.lawson_rows.first(), &r.hyperplane) {
        (Some(row), _) => format!(
            "{m},{},{},{},{},{},{},{},{},{},\n",
            snake(&row.class),
            row.rho,
            opt(row.kappa.map(|k| k.measured)),
            opt(row.kappa.map(|k| k.expected)),
            row.h.measured,
            row.h.expected,
            opt(row.invariant.map(|v| v.measured)),
            opt(row.invariant.map(|v| v.expected)),
            opt(row.metric_deviation),
        ),
        (None, Some(hp)) => format!(
            "{m},hyperplane_{},,,,,,,,{},\n",
            snake(&hp.class),
            opt(r.metric.m_deviation)
        ),
        (None, None) => format!("{m},,,,,,,,,{},\n", opt(r.metric.m_deviation)),
    }
}

#[derive(Serialize)]
struct MemberStatus {
    m: f64,
    ok: bool,
    error: Option<String>,
    failed_gates: Vec<Gate>,
}

/// Every file of a deform run, relative to the run directory, in a fixed
/// order, plus the per-member status.
struct RunFiles {
    files: Vec<(String, Vec<u8>)>,
    members: Vec<MemberStatus>,
}

fn stored_settings(p: &Potential, m_list: &[f64], scheme: Scheme, tol: &Tolerances) -> Settings {
    let mut s = Settings::default();
    let list: Vec<String> = m_list.iter().map(f64::to_string).collect();
    let entries = [
        ("c", p.character.unwrap_or(0.0).to_string()),
        ("k", p.k.to_string()),
        ("m", list.join(",")),
        ("scheme", scheme_name(scheme).to_string()),
        ("grid", grid_spec(&p.grid())),
        ("potential", "potential.csv".to_string()),
        ("out", ".".to_string()),
        ("tol_order", tol.order.to_string()),
        ("tol_value", tol.value.to_string()),
        ("tol_mean_curvature", tol.mean_curvature.to_string()),
        ("tol_h_floor", tol.h_floor.to_string()),
        ("tol_drift", tol.drift.to_string()),
        ("parabolic_eps", tol.parabolic_eps.to_string()),
    ];
    for (k, v) in entries {
        s.set(k, v).expect("stored keys are known");
    }
    s
}

fn build_run(p: &Potential, m_list: &[f64], scheme: Scheme, tol: Tolerances) -> Result<RunFiles, Failure> {
    let runs = run_deform(p, m_list, scheme, tol)?;
    let mut files = vec![
        ("config.txt".to_string(), stored_settings(p, m_list, scheme, &tol).to_text().into_bytes()),
        ("potential.csv".to_string(), p.u.to_csv_string().into_bytes()),
    ];
    let mut lawson = String::from(LAWSON_HEADER);
    let mut members = Vec::new();
    for (&m, run) in m_list.iter().zip(&runs) {
        let dir = member_dir(m);
        lawson.push_str(&lawson_line(m, run));
        match run {
            Ok(run) => {
                let json = serde_json::to_string_pretty(&run.report).expect("reports serialize") + "\n";
                files.push((format!("{dir}/report.json"), json.into_bytes()));
                let mut frames = Vec::new();
                run.frames.write_csv(&mut frames)?;
                files.push((format!("{dir}/frames.csv"), frames));
                for (name, bytes) in mesh_files(&run.frames)? {
                    files.push((format!("{dir}/{name}"), bytes));
                }
                let failed_gates: Vec<Gate> = check_report(&run.report).into_iter().filter(|g| !g.pass).collect();
                members.push(MemberStatus {
                    m,
                    ok: failed_gates.is_empty(),
                    error: None,
                    failed_gates,
                });
            }
            Err(e) => {
                files.push((format!("{dir}/error.txt"), format!("{e}\n").into_bytes()));
                members.push(MemberStatus {
                    m,
                    ok: false,
                    error: Some(e.to_string()),
                    failed_gates: Vec::new(),
                });
            }
        }
    }
    files.push(("lawson.csv".to_string(), lawson.into_bytes()));
    Ok(RunFiles { files, members })
}

pub fn deform(s: &Settings) -> Result<(), Failure> {
    let p = load_potential(s)?;
    let run = build_run(&p, &s.m_list()?, s.scheme()?, s.tolerances()?)?;
    let dir = s.out_dir();
    for (name, bytes) in &run.files {
        write_file(&dir.join(name), bytes)?;
    }
    print_json(&run.members);
    let failed: Vec<String> = run.members.iter().filter(|m| !m.ok).map(|m| format!("m={}", m.m)).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Gate(format!("members failed: {}", failed.join(", "))))
    }
}

fn diff_values(path: &str, stored: &Value, fresh: &Value, out: &mut Vec<String>) {
    match (stored, fresh) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in b {
                match a.get(k) {
                    Some(w) => diff_values(&format!("{path}.{k}"), w, v, out),
                    None => out.push(format!("{path}.{k}: missing")),
                }
            }
            for k in a.keys().filter(|k| !b.contains_key(*k)) {
                out.push(format!("{path}.{k}: unexpected"));
            }
        }
        (Value::Array(a), Value::Array(b)) if a.len() == b.len() => {
            for (i, (w, v)) in a.iter().zip(b).enumerate() {
                diff_values(&format!("{path}[{i}]"), w, v, out);
            }
        }
        _ if stored == fresh => {}
        _ => out.push(format!("{path}: stored {stored}, recomputed {fresh}")),
    }
}

#[derive(Serialize)]
struct FailedGate {
    m: f64,
    gate: String,
    measured: f64,
    required: f64,
}

#[derive(Serialize)]
struct Verification {
    pass: bool,
    files_checked: usize,
    mismatches: Vec<String>,
    failed_gates: Vec<FailedGate>,
    failed_members: Vec<String>,
}

/// Recomputes the run from its stored config and potential, compares every
/// artifact, and re-checks the stored reports' gates. Tolerance flags
/// passed to `verify` replace the stored ones for the gate check only.
pub fn verify(s: &Settings) -> Result<(), Failure> {
    let dir = s.out_dir();
    let stored = Settings::load(&dir.join("config.txt"))?;
    let p = load_potential(&stored)?;
    let m_list = stored.m_list()?;
    let fresh = build_run(&p, &m_list, stored.scheme()?, stored.tolerances()?)?;

    let mut gate_settings = stored.clone();
    for key in crate::config::KEYS.iter().filter(|k| k.starts_with("tol_") || **k == "parabolic_eps") {
        if let Some(v) = s.raw(key) {
            gate_settings.set(key, v.to_string())?;
        }
    }
    let gate_tol = gate_settings.tolerances()?;

    let mut mismatches = Vec::new();
    let mut failed_gates = Vec::new();
    for (name, bytes) in &fresh.files {
        let path = dir.join(name);
        let on_disk = fs::read(&path).map_err(|e| io_err(&path, e))?;
        if !name.ends_with("report.json") {
            if &on_disk != bytes {
                mismatches.push(format!("{name}: differs from the recomputed file"));
            }
            continue;
        }
        let fresh_value: Value = serde_json::from_slice(bytes).expect("fresh report parses");
        let report = match serde_json::from_slice::<Value>(&on_disk) {
            Ok(v) => {
                diff_values(name, &v, &fresh_value, &mut mismatches);
                serde_json::from_value::<Report>(v)
                    .map_err(|e| mismatches.push(format!("{name}: not a report ({e})")))
                    .ok()
            }
            Err(e) => {
                mismatches.push(format!("{name}: not JSON ({e})"));
                None
            }
        };
        if let Some(mut report) = report {
            report.config.tolerances = gate_tol;
            let m = report.config.m;
            failed_gates.extend(check_report(&report).into_iter().filter(|g| !g.pass).map(|g| FailedGate {
                m,
                gate: g.name,
                measured: g.measured,
                required: g.required,
            }));
        }
    }
    let failed_members: Vec<String> = fresh
        .members
        .iter()
        .filter_map(|m| m.error.as_ref().map(|e| format!("m={}: {e}", m.m)))
        .collect();
    let v = Verification {
        pass: mismatches.is_empty() && failed_gates.is_empty() && failed_members.is_empty(),
        files_checked: fresh.files.len(),
        mismatches,
        failed_gates,
        failed_members,
    };
    print_json(&v);
    if v.pass {
        return Ok(());
    }
    let mut names: Vec<String> = v.failed_gates.iter().map(|g| format!("m={} {}", g.m, g.gate)).collect();
    names.extend(v.mismatches.iter().cloned());
    names.extend(v.failed_members.iter().cloned());
    Err(Failure::Gate(format!("verification failed: {}", names.join("; "))))
}

fn export_one(frames_path: &Path, grid: Grid, scheme: Scheme, out: &Path) -> Result<(), Failure> {
    let file = fs::File::open(frames_path).map_err(|e| io_err(frames_path, e))?;
    let frames = FrameField::read_csv(BufReader::new(file), grid, scheme).map_err(|e| match e {
        Error::Io(e) => io_err(frames_path, e),
        e => Failure::Usage(format!("{}: {e}", frames_path.display())),
    })?;
    for (name, bytes) in mesh_files(&frames)? {
        write_file(&out.join(name), &bytes)?;
    }
    Ok(())
}

/// With `frames` (and the frame grid in `grid`), meshes that one file into
/// `out`; otherwise re-meshes every member of the run directory `out`.
pub fn export(s: &Settings) -> Result<(), Failure> {
    let out = s.out_dir();
    let mut written: Vec<PathBuf> = Vec::new();
    match s.path("frames") {
        Some(frames) => {
            export_one(&frames, s.grid()?, s.scheme()?, &out)?;
            written.push(out);
        }
        None => {
            let stored = Settings::load(&out.join("config.txt"))?;
            let grid = stored.grid()?.interior()?;
            for m in stored.m_list()? {
                let dir = out.join(member_dir(m));
                let frames = dir.join("frames.csv");
                if frames.exists() {
                    export_one(&frames, grid, stored.scheme()?, &dir)?;
                    written.push(dir);
                }
            }
        }
    }
    let list: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
    print_json(&list);
    Ok(())
}
