use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qsdc"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn oscillator_config() -> PathBuf {
    configs().join("oscillator.json")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Synthesized design for the oscillator config, shared across tests.
fn synthesized() -> &'static (TempDir, PathBuf) {
    static CELL: OnceLock<(TempDir, PathBuf)> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let out = dir.path().join("design.json");
        let o = run(&["synthesize", "--config", s(&oscillator_config()), "--out", s(&out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (dir, out)
    })
}

fn config_with(dir: &TempDir, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(oscillator_config()).unwrap()).unwrap();
    edit(&mut v);
    write(dir, name, &serde_json::to_string_pretty(&v).unwrap())
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_csv(p: &Path) -> Csv {
    let text = std::fs::read_to_string(p).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    Csv { header, rows }
}

#[test]
fn synthesized_design_has_expected_fields() {
    let d = read_json(&synthesized().1);
    for key in ["K", "P", "S1", "S2", "rho", "c", "sigma_star", "iterations", "history"] {
        assert!(d.get(key).is_some(), "missing {key}");
    }
    let c = d["c"].as_f64().unwrap();
    assert!((0.39..=0.55).contains(&c), "c = {c}");
    assert_eq!(d["K"].as_array().unwrap().len(), 1);
    assert_eq!(d["K"][0].as_array().unwrap().len(), 3);
    assert_eq!(d["history"].as_array().unwrap().len() as u64, d["iterations"].as_u64().unwrap());
}

#[test]
fn synthesize_then_verify_round_trip() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("report.json");
    let o = run(&["verify", "--design", s(&synthesized().1), "--config", s(&oscillator_config()), "--out", s(&report)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&report);
    assert_eq!(r["passed"], Value::Bool(true));
    assert_eq!(r["mode"], "certificate");
    assert!(r["m_lambda_max"].as_f64().unwrap() <= -1e-8);
    assert!(r["trace_value"].as_f64().unwrap() <= 0.0);
}

#[test]
fn verify_prints_report_without_out() {
    let o = run(&["verify", "--design", s(&synthesized().1), "--config", s(&oscillator_config())]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["passed"], Value::Bool(true));
}

#[test]
fn synthesis_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("again.json");
    let o = run(&["synthesize", "--config", s(&oscillator_config()), "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&synthesized().1).unwrap());
}

#[test]
fn malformed_inputs_exit_1() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("d.json");
    let bad = write(&dir, "bad.json", "{ \"plant\": ");
    assert_eq!(code(&run(&["synthesize", "--config", s(&bad), "--out", s(&out)])), 1);
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&run(&["synthesize", "--config", s(&missing), "--out", s(&out)])), 1);
    let unknown = config_with(&dir, "unknown.json", |v| v["plant"]["extra"] = Value::from(1));
    assert_eq!(code(&run(&["synthesize", "--config", s(&unknown), "--out", s(&out)])), 1);
    let wrong_dims = config_with(&dir, "dims.json", |v| v["plant"]["a_p"] = serde_json::json!([0.0, 1.0, -1.0]));
    assert_eq!(code(&run(&["synthesize", "--config", s(&wrong_dims), "--out", s(&out)])), 1);
    let bad_eps = config_with(&dir, "eps.json", |v| v["algorithm"]["epsilon"] = Value::from(-1.0));
    assert_eq!(code(&run(&["synthesize", "--config", s(&bad_eps), "--out", s(&out)])), 1);
    assert_eq!(code(&run(&["synthesize"])), 1);
}

#[test]
fn non_stabilizable_plant_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = config_with(&dir, "ns.json", |v| {
        v["plant"]["a_p"] = serde_json::json!([1.0, 0.0, 0.0, 1.0]);
        v["plant"]["b_p"] = serde_json::json!([0.0, 0.0]);
    });
    let o = run(&["synthesize", "--config", s(&cfg), "--out", s(&dir.path().join("d.json"))]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
}

#[test]
fn zero_gain_fails_verification() {
    let dir = TempDir::new().unwrap();
    let with_p = write(&dir, "k0p.json", r#"{"K": [[0.0, 0.0, 0.0]], "P": [[1,0,0],[0,1,0],[0,0,1]]}"#);
    let report = dir.path().join("r.json");
    let o = run(&["verify", "--design", s(&with_p), "--config", s(&oscillator_config()), "--out", s(&report)]);
    assert_eq!(code(&o), 2);
    let r = read_json(&report);
    assert_eq!(r["passed"], Value::Bool(false));
    assert_eq!(r["mode"], "multipliers");
    assert!(r["m_lambda_max"].as_f64().unwrap() >= 0.0);

    let gain_only = write(&dir, "k0.json", r#"{"K": [[0.0, 0.0, 0.0]]}"#);
    let o = run(&["verify", "--design", s(&gain_only), "--config", s(&oscillator_config()), "--out", s(&report)]);
    assert_eq!(code(&o), 2);
    assert_eq!(read_json(&report)["passed"], Value::Bool(false));
}

#[test]
fn printed_gain_verifies_alone() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("r.json");
    let design = configs().join("oscillator_reference_design.json");
    let cfg = oscillator_config();
    let args = ["verify", "--design", s(&design), "--config", s(&cfg), "--gain-only", "--out", s(&report)];
    assert_eq!(code(&run(&args)), 0);
    let r = read_json(&report);
    assert_eq!(r["mode"], "gain");
    assert!(r["m_lambda_max"].as_f64().unwrap() < -1e-3);
}

/// The four-digit printed `P` misses the certificate by a few 1e-6; the report
/// must say so rather than round it away.
#[test]
fn printed_lyapunov_matrix_is_reported_as_uncertified() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("r.json");
    let design = configs().join("oscillator_reference_design.json");
    let o = run(&["verify", "--design", s(&design), "--config", s(&oscillator_config()), "--out", s(&report)]);
    assert_eq!(code(&o), 2);
    let r = read_json(&report);
    assert_eq!(r["mode"], "multipliers");
    let m = r["m_lambda_max"].as_f64().unwrap();
    assert!(m > 0.0 && m < 1e-5, "{m:e}");
}

fn simulate_to(dir: &TempDir, design: &Path, cfg: &Path, name: &str) -> PathBuf {
    let out = dir.path().join(name);
    let o = run(&["simulate", "--design", s(design), "--config", s(cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn trajectory_enters_and_stays_in_attractor() {
    let dir = TempDir::new().unwrap();
    let out = simulate_to(&dir, &synthesized().1, &oscillator_config(), "trace.csv");
    let csv = read_csv(&out);
    let expected: Vec<String> = ["t", "j", "tau", "xi_1", "xi_2", "xi_3", "V", "in_attractor"].iter().map(|x| x.to_string()).collect();
    assert_eq!(csv.header, expected);
    let flags: Vec<f64> = csv.rows.iter().map(|r| r[7]).collect();
    assert_eq!(flags[0], 0.0);
    let first = flags.iter().position(|f| *f == 1.0).expect("enters the attractor");
    assert!(flags[first..].iter().all(|f| *f == 1.0));
    assert!(csv.rows[first][0] <= 30.0);
    assert!(csv.rows.iter().all(|r| r.len() == 8));
    // one pre and one post row per jump
    let jumps = csv.rows.windows(2).filter(|w| w[1][1] == w[0][1] + 1.0).count();
    assert_eq!(jumps, 60);
}

#[test]
fn simulation_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = simulate_to(&dir, &synthesized().1, &oscillator_config(), "a.csv");
    let b = simulate_to(&dir, &synthesized().1, &oscillator_config(), "b.csv");
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn equilibrium_trace_is_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = config_with(&dir, "eq.json", |v| v["simulation"]["x0"] = serde_json::json!([0.0, 0.0, 0.0]));
    let csv = read_csv(&simulate_to(&dir, &synthesized().1, &cfg, "eq.csv"));
    assert!(csv.rows.iter().all(|r| r[3..7].iter().all(|x| *x == 0.0) && r[7] == 1.0));
}

#[test]
fn clock_at_period_jumps_first() {
    let dir = TempDir::new().unwrap();
    let cfg = config_with(&dir, "tau.json", |v| v["simulation"]["tau0"] = Value::from(0.5));
    let csv = read_csv(&simulate_to(&dir, &synthesized().1, &cfg, "tau.csv"));
    assert_eq!((csv.rows[0][0], csv.rows[0][1]), (0.0, 0.0));
    assert_eq!((csv.rows[1][0], csv.rows[1][1]), (0.0, 1.0));
    assert_eq!(csv.rows[1][2], 0.0);
}

#[test]
fn csv_uses_seventeen_significant_digits() {
    let dir = TempDir::new().unwrap();
    let out = simulate_to(&dir, &synthesized().1, &oscillator_config(), "fmt.csv");
    let text = std::fs::read_to_string(out).unwrap();
    let row = text.lines().nth(5).unwrap();
    let t = row.split(',').next().unwrap();
    let mantissa = t.split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 17, "{t}");
}

fn attractor_to(dir: &TempDir, design: &Path, cfg: &Path, name: &str, grid: Option<usize>) -> (PathBuf, Value) {
    let out = dir.path().join(name);
    let mut args = vec!["attractor".to_string(), "--design".into(), s(design).into(), "--config".into(), s(cfg).into(), "--out".into(), s(&out).into()];
    if let Some(g) = grid {
        args.push("--grid".into());
        args.push(g.to_string());
    }
    let o = bin().args(&args).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    (out, serde_json::from_slice(&o.stdout).unwrap())
}

#[test]
fn identity_design_has_unit_attractor() {
    let dir = TempDir::new().unwrap();
    let cfg = config_with(&dir, "zero.json", |v| {
        v["plant"]["a_p"] = serde_json::json!([0.0, 0.0, 0.0, 0.0]);
        v["plant"]["b_p"] = serde_json::json!([0.0, 0.0]);
    });
    let design = write(&dir, "id.json", r#"{"K": [[0.0, 0.0, 0.0]], "P": [[1,0,0],[0,1,0],[0,0,1]]}"#);
    let (csv, summary) = attractor_to(&dir, &design, &cfg, "b.csv", Some(36));
    assert!((summary["outer_radius"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((summary["varpi"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let rows = read_csv(&csv).rows;
    assert_eq!(rows.len(), 36);
    assert!(rows.iter().all(|r| (r[1] - 1.0).abs() < 1e-12));
}

#[test]
fn grid_flag_changes_sample_count_only() {
    let dir = TempDir::new().unwrap();
    let (a, sa) = attractor_to(&dir, &synthesized().1, &oscillator_config(), "a.csv", None);
    let (b, sb) = attractor_to(&dir, &synthesized().1, &oscillator_config(), "b.csv", Some(90));
    assert_eq!(read_csv(&a).rows.len(), 360);
    assert_eq!(read_csv(&b).rows.len(), 90);
    let (ra, rb) = (sa["outer_radius"].as_f64().unwrap(), sb["outer_radius"].as_f64().unwrap());
    assert!((ra - rb).abs() <= 1e-6);
    let (_, sc) = attractor_to(&dir, &synthesized().1, &oscillator_config(), "c.csv", None);
    assert_eq!(sa, sc);
}

#[test]
fn boundary_encloses_converged_trajectory() {
    let dir = TempDir::new().unwrap();
    let trace = read_csv(&simulate_to(&dir, &synthesized().1, &oscillator_config(), "t.csv"));
    let (b, summary) = attractor_to(&dir, &synthesized().1, &oscillator_config(), "b.csv", Some(720));
    let boundary = read_csv(&b).rows;
    let outer = summary["outer_radius"].as_f64().unwrap();
    let step = 2.0 * std::f64::consts::PI / boundary.len() as f64;
    let first = trace.rows.iter().position(|r| r[7] == 1.0).unwrap();
    for r in &trace.rows[first..] {
        let (x, y) = (r[3], r[4]);
        let mut angle = y.atan2(x);
        if angle < 0.0 {
            angle += 2.0 * std::f64::consts::PI;
        }
        let i = ((angle / step) as usize).min(boundary.len() - 1);
        let w = (angle - boundary[i][0]) / step;
        let bound = (1.0 - w) * boundary[i][1] + w * boundary[(i + 1) % boundary.len()][1];
        assert!(x.hypot(y) <= bound * (1.0 + 1e-3) + 1e-9);
        assert!(x.hypot(y) <= outer);
    }
}

#[test]
fn attractor_requires_p() {
    let dir = TempDir::new().unwrap();
    let design = write(&dir, "k.json", r#"{"K": [[0.5529, -2.1873, 0.0]]}"#);
    let o = run(&["attractor", "--design", s(&design), "--config", s(&oscillator_config()), "--out", s(&dir.path().join("x.csv"))]);
    assert_eq!(code(&o), 1);
    let o = run(&["attractor", "--design", s(&synthesized().1), "--config", s(&oscillator_config()), "--out", s(&dir.path().join("x.csv")), "--grid", "0"]);
    assert_eq!(code(&o), 1);
}
