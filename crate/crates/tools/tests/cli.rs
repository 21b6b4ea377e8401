use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn penrose(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_penrose")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn rows(csv_text: &str) -> Vec<Vec<String>> {
    csv_text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

const SMALL_RUN: &str = "[problem]\nnonlinearity = \"q0_radial\"\n[grid]\ndr = 0.02\nt_max = 4.0\nsnapshot_stride = 20\n";

#[test]
fn transform_forward_origin() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "in.csv", "t,r\n0,0\n");
    let o = penrose(&["transform", "--input", "in.csv"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(rows(&stdout(&o))[0], ["0", "0", "0", "0", "2", ""]);
}

#[test]
fn transform_backward_flags_the_diamond_edge() {
    let tmp = TempDir::new().unwrap();
    let h = std::f64::consts::FRAC_PI_2;
    write(tmp.path(), "in.csv", &format!("{h},{h}\n0.5,0.5\n"));
    let o = penrose(&["transform", "--input", "in.csv", "--direction", "backward"], tmp.path());
    assert_eq!(code(&o), 3);
    let table = rows(&stdout(&o));
    assert!(table[0][4].contains("domain"), "{table:?}");
    assert!(table[1][4].is_empty());
    assert!(stderr(&o).contains("in.csv:1"));
}

#[test]
fn transform_round_trip() {
    let tmp = TempDir::new().unwrap();
    let mut text = String::from("t,r\n");
    for k in 0..40 {
        let t = -20.0 + 1.1 * k as f64;
        let r = 0.37 * k as f64;
        text.push_str(&format!("{t},{r}\n"));
    }
    write(tmp.path(), "in.csv", &text);
    let o = penrose(&["transform", "--input", "in.csv", "--out", "fwd"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let fwd = fs::read_to_string(tmp.path().join("fwd/transform.csv")).unwrap();
    let back_in: String = rows(&fwd).iter().map(|r| format!("{},{}\n", r[2], r[3])).collect();
    write(tmp.path(), "back.csv", &back_in);
    let o = penrose(&["transform", "--input", "back.csv", "--direction", "backward"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for (orig, back) in rows(&fwd).iter().zip(rows(&stdout(&o))) {
        for (a, b) in [(&orig[0], &back[2]), (&orig[1], &back[3])] {
            let (a, b): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
            assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }
    let m = manifest(&tmp.path().join("fwd"));
    assert_eq!(m["outputs"], serde_json::json!(["transform.csv"]));
}

#[test]
fn check_null_fixtures() {
    let tmp = TempDir::new().unwrap();
    let o = penrose(&["check-null", "--builtin", "q0", "--require-null"], tmp.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("null, lambda=1"));

    let o = penrose(&["check-null", "--builtin", "dt-squared"], tmp.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("non-null, witness xi=(1,1,0,0)"));
    let o = penrose(&["check-null", "--builtin", "dt-squared", "--require-null"], tmp.path());
    assert_eq!(code(&o), 7);
}

#[test]
fn check_null_form_files() {
    let tmp = TempDir::new().unwrap();
    // q_12 plus one half of q0 on a two-component system
    let text = "components 2\n\
                s 1 1 2 1 2 1\ns 1 1 2 2 1 -1\n\
                s 2 2 2 0 0 1/2\ns 2 2 2 1 1 -1/2\ns 2 2 2 2 2 -1/2\ns 2 2 2 3 3 -1/2\n";
    write(tmp.path(), "f.form", text);
    let o = penrose(&["check-null", "f.form", "--require-null", "--out", "rep"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("quadratic [1,1,2] null, lambda=0, q12=1"), "{out}");
    assert!(out.contains("quadratic [2,2,2] null, lambda=1/2"), "{out}");
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("rep/check-null.json")).unwrap()).unwrap();
    assert_eq!(doc["verdict"], "pass");
    assert_eq!(doc["exact"], true);

    write(tmp.path(), "bad.form", "components 1\ns 1 1 1 0 0 1\ns 1 1 9 0 0 1\n");
    let o = penrose(&["check-null", "bad.form"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.form:3"), "{}", stderr(&o));
}

#[test]
fn compat_reference_data_pass() {
    let tmp = TempDir::new().unwrap();
    let o = penrose(&["compat", "--out", "c"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let jets = fs::read_to_string(tmp.path().join("c/jets.csv")).unwrap();
    assert!(jets.starts_with("r,psi_0,psi_1,psi_2,psi_3,psi_4\n"));
    let m = manifest(&tmp.path().join("c"));
    assert_eq!(m["outputs"], serde_json::json!(["jets.csv", "compat.json"]));
    assert_eq!(m["verdicts"][0]["pass"], true);

    write(tmp.path(), "k1.toml", "[verify]\njet_order = 1\ncompat_order = 1\n");
    let o = penrose(&["compat", "--config", "k1.toml", "--out", "k1"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn compat_linear_data_fail_at_order_two() {
    let tmp = TempDir::new().unwrap();
    let (rb, dr) = (0.2, 2e-3);
    let mut prof = String::new();
    for i in 0..1651 {
        let r = rb + i as f64 * dr;
        let bump = (-((r - 0.6) / 0.4f64).powi(2)).exp();
        prof.push_str(&format!("{r} {}\n", (r - rb) * bump));
    }
    write(tmp.path(), "f.txt", &prof);
    let cfg = "[problem]\nnonlinearity = \"zero\"\nepsilon = 1.0\n[data]\nf = { kind = \"file\", path = \"f.txt\" }\ng = { kind = \"zero\" }\n[verify]\njet_order = 3\ncompat_order = 3\n";
    write(tmp.path(), "lin.toml", cfg);
    let o = penrose(&["compat", "--config", "lin.toml", "--out", "c"], tmp.path());
    assert_eq!(code(&o), 7, "{}", stderr(&o));
    assert!(stdout(&o).contains("fails at order 2"));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("c/compat.json")).unwrap()).unwrap();
    assert_eq!(doc["first_failure"], 2);
    assert_eq!(doc["verdict"], "fail");
}

#[test]
fn simulate_writes_a_complete_deterministic_run() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "run.toml", SMALL_RUN);
    for dir in ["a", "b"] {
        let o = penrose(&["simulate", "--config", "run.toml", "--out", dir], tmp.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let m = manifest(&tmp.path().join("a"));
    let outputs: Vec<String> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    assert!(outputs.contains(&"monitors.csv".to_string()));
    assert!(outputs.contains(&"frames/frame_00000.csv".to_string()));
    for f in &outputs {
        assert!(tmp.path().join("a").join(f).is_file(), "{f}");
        if f.ends_with(".csv") {
            assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap(), "{f}");
        }
    }
    assert!(!tmp.path().join("a/manifest.json.tmp").exists());
    assert!(fs::read_to_string(tmp.path().join("a/monitors.csv")).unwrap().starts_with("t,E_total,E_local,sup_u\n"));
    assert!(fs::read_to_string(tmp.path().join("a/frames/frame_00001.csv")).unwrap().starts_with("r,u,u_t\n"));

    // the recorded configuration reproduces the run
    let o = penrose(&["simulate", "--config", "a/config.toml", "--out", "c"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read(tmp.path().join("a/monitors.csv")).unwrap(), fs::read(tmp.path().join("c/monitors.csv")).unwrap());
}

#[test]
fn simulate_exit_codes() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "cfl.toml", &format!("{SMALL_RUN}cfl = 1.2\n"));
    assert_eq!(code(&penrose(&["simulate", "--config", "cfl.toml", "--out", "o1"], tmp.path())), 4);
    write(tmp.path(), "rmax.toml", &format!("{SMALL_RUN}r_max = 3.0\n"));
    let o = penrose(&["simulate", "--config", "rmax.toml", "--out", "o2"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("r_max"));
    write(tmp.path(), "typo.toml", &format!("{SMALL_RUN}t_end = 3.0\n"));
    let o = penrose(&["simulate", "--config", "typo.toml", "--out", "o3"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("typo.toml"));
    let blow_up = "[problem]\nnonlinearity = \"dt_squared\"\nepsilon = 200.0\n[grid]\ndr = 0.02\nt_max = 6.0\n";
    write(tmp.path(), "nan.toml", blow_up);
    let o = penrose(&["simulate", "--config", "nan.toml", "--out", "o4"], tmp.path());
    assert_eq!(code(&o), 5, "{}", stderr(&o));
    assert!(tmp.path().join("o4/manifest.json").is_file());
    assert_eq!(code(&penrose(&["simulate", "--config", "missing.toml"], tmp.path())), 1);
}

#[test]
fn verify_builtin_checks() {
    let tmp = TempDir::new().unwrap();
    let o = penrose(&["verify", "--check", "identity-omega", "--out", "v"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("v/identity-omega.json")).unwrap()).unwrap();
    for key in ["name", "anchor", "inputs_digest", "value", "threshold", "verdict"] {
        assert!(doc.get(key).is_some(), "{key}");
    }
    assert_eq!(doc["verdict"], "pass");
    assert_eq!(doc["inputs_digest"].as_str().unwrap().len(), 64);

    let o = penrose(&["verify", "--check", "commutator", "--out", "c"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&penrose(&["verify", "--check", "no-such-check", "--out", "n"], tmp.path())), 2);
}

#[test]
fn verify_battery_is_seeded() {
    let tmp = TempDir::new().unwrap();
    for dir in ["a", "b"] {
        let o = penrose(&["verify", "--seed", "11", "--out", dir], tmp.path());
        assert_eq!(code(&o), 0, "{}", stdout(&o));
    }
    let a = fs::read_to_string(tmp.path().join("a/null-classifier.json")).unwrap();
    let b = fs::read_to_string(tmp.path().join("b/null-classifier.json")).unwrap();
    assert_eq!(a, b);
    assert_eq!(manifest(&tmp.path().join("a"))["seed"], 11);
}

#[test]
fn verify_trajectory_checks_on_a_short_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = "[grid]\nt_max = 30.0\n[verify]\npower_window = [10.0, 30.0]\nplateau_window = [10.0, 30.0]\n";
    write(tmp.path(), "short.toml", cfg);
    let o = penrose(&["verify", "--check", "decay", "--sigma", "0.25", "--config", "short.toml", "--out", "d"], tmp.path());
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(tmp.path().join("d/certificate.csv").is_file());
    assert!(tmp.path().join("d/sup.csv").is_file());

    let lin = "[problem]\nnonlinearity = \"zero\"\n[grid]\ndr = 0.01\nt_max = 20.0\n[verify]\nconservation_until = 20.0\nslice_rows = 20\n";
    write(tmp.path(), "lin.toml", lin);
    for check in ["energy-conservation", "energy-inequality"] {
        let o = penrose(&["verify", "--check", check, "--config", "lin.toml", "--out", check], tmp.path());
        assert_eq!(code(&o), 0, "{check}: {}{}", stdout(&o), stderr(&o));
    }
    assert!(tmp.path().join("energy-inequality/energy-inequality.csv").is_file());
}

#[test]
fn sweep_runs_each_config_in_its_own_directory() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "one.toml", SMALL_RUN);
    write(tmp.path(), "two.toml", &SMALL_RUN.replace("dr = 0.02", "dr = 0.04"));
    let o = penrose(&["sweep", "--config", "one.toml", "--config", "two.toml", "--out", "s"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for d in ["one", "two"] {
        assert!(tmp.path().join("s").join(d).join("manifest.json").is_file());
    }
    assert!(tmp.path().join("s/manifest.json").is_file());

    write(tmp.path(), "bad.toml", &format!("{SMALL_RUN}cfl = 1.2\n"));
    let o = penrose(&["sweep", "--config", "one.toml", "--config", "bad.toml", "--out", "s2"], tmp.path());
    assert_eq!(code(&o), 4);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("s2/sweep.json")).unwrap()).unwrap();
    assert_eq!(summary[0]["exit_code"], 0);
    assert_eq!(summary[1]["exit_code"], 4);
}

#[test]
fn shipped_files_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    for cfg in ["configs/reference.toml", "configs/linear-forced.toml"] {
        let c = penrose_tools::config::Config::load(&root.join(cfg)).unwrap();
        c.solver_config().unwrap().validate().unwrap();
    }
    let tmp = TempDir::new().unwrap();
    let q0 = root.join("forms/q0.form");
    let o = penrose(&["check-null", q0.to_str().unwrap(), "--require-null"], tmp.path());
    assert_eq!(code(&o), 0);
    let mixed = root.join("forms/mixed.form");
    let o = penrose(&["check-null", mixed.to_str().unwrap(), "--require-null"], tmp.path());
    assert_eq!(code(&o), 7);
    assert!(stdout(&o).contains("quadratic [1,1,2] null"));
    assert!(stdout(&o).contains("quadratic [2,2,2] non-null"));
}
