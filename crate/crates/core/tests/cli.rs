use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kinproj(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinproj"))
        .args(args)
        .current_dir(dir)
        .env("KINPROJ_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn run_config(dir: &Path, name: &str, body: &str) -> Output {
    let path = dir.join(format!("{name}.toml"));
    fs::write(&path, body).unwrap();
    kinproj(&["run", "--config", path.to_str().unwrap()], dir)
}

#[test]
fn runs_are_bitwise_reproducible_and_conservative() {
    let tmp = tempfile::tempdir().unwrap();
    for problem in ["advection1d", "burgers1d_sine"] {
        let mut csvs = Vec::new();
        for rep in ["a", "b"] {
            let body = format!(
                "problem = \"{problem}\"\n[space]\nI = 80\n[time]\nT = 0.1\n[output]\ndir = \"{rep}\"\nsnapshots = [0.05, 0.1]\n"
            );
            stdout(&run_config(tmp.path(), &format!("{problem}_{rep}"), &body));
            let dir = tmp.path().join(rep);
            csvs.push(fs::read(dir.join(format!("{problem}_001.csv"))).unwrap());
            let manifest: serde_json::Value =
                serde_json::from_str(&fs::read_to_string(dir.join(format!("{problem}_manifest.json"))).unwrap()).unwrap();
            assert_eq!(manifest["snapshots"].as_array().unwrap().len(), 2);
            assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
            for d in manifest["summary"]["conservation_drift"].as_array().unwrap() {
                assert!(d.as_f64().unwrap() <= 1e-10, "{problem}: drift {d}");
            }
        }
        assert_eq!(csvs[0], csvs[1], "{problem}");
    }
}

#[test]
fn euler_snapshot_has_pressure_and_velocity() {
    let tmp = tempfile::tempdir().unwrap();
    stdout(&run_config(
        tmp.path(),
        "sod",
        "problem = \"sod1d\"\n[space]\nI = 100\n[time]\nT = 0.05\n[output]\ndir = \"out\"\n",
    ));
    let csv = fs::read_to_string(tmp.path().join("out/sod1d_000.csv")).unwrap();
    assert!(csv.starts_with("x,rho,rho_v,E,p,v\n"));
    assert_eq!(csv.lines().count(), 101);
}

#[test]
fn params_reports_the_upwind1_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let out = stdout(&kinproj(&["params", "--problem", "advection1d", "--scheme", "upwind1"], tmp.path()));
    let dt_max: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("dt_max = "))
        .expect("dt_max line")
        .parse()
        .unwrap();
    assert!((dt_max - 0.01).abs() < 1e-12, "{out}");
}

#[test]
fn spectrum_shows_the_fast_eigenvalue() {
    let tmp = tempfile::tempdir().unwrap();
    let out = stdout(&kinproj(&["spectrum", "--eps", "1e-8", "--dx", "0.01", "--order", "1"], tmp.path()));
    let mut lines = out.lines();
    let head: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = head.iter().position(|h| *h == "lambda2_re").unwrap();
    let mut rows = 0;
    for line in lines {
        let l2: f64 = line.split(',').nth(col).unwrap().parse().unwrap();
        assert!((l2 + 1e8).abs() / 1e8 < 1e-5, "{l2}");
        rows += 1;
    }
    assert_eq!(rows, 100);
}

#[test]
fn bad_configurations_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(tmp.path(), "k0", "problem = \"advection1d\"\n[time]\nK = 0\neps = 1e-3\nDt = 1e-4\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("time.Dt"));

    let o = run_config(tmp.path(), "typo", "problem = \"sod1d\"\n\n[tim]\nK = 1\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let o = run_config(tmp.path(), "unknown", "problem = \"nope\"\n");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn environment_overrides_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("adv.toml");
    fs::write(&path, "problem = \"advection1d\"\n[space]\nI = 40\n[time]\nT = 0.5\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_kinproj"))
        .args(["run", "--config", path.to_str().unwrap()])
        .current_dir(tmp.path())
        .env("KINPROJ_LOG", "warn")
        .env("KINPROJ_TIME_T", "0.02")
        .env("KINPROJ_OUTPUT_PREFIX", "short")
        .output()
        .unwrap();
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["final_time"].as_f64(), Some(0.02));
    assert!(tmp.path().join("output/short_manifest.json").exists());
}

#[test]
fn convergence_and_reference_subcommands_write_tables() {
    let tmp = tempfile::tempdir().unwrap();
    stdout(&kinproj(
        &[
            "convergence", "--sweep", "space", "--problem", "advection1d", "--outer", "prk4", "--scheme", "upwind1",
            "--dx", "0.02,0.01,0.005", "--out", "space.csv",
        ],
        tmp.path(),
    ));
    let csv = fs::read_to_string(tmp.path().join("space.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4, "{csv}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("space.json")).unwrap()).unwrap();
    let slope = report["fit"]["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 0.2, "{slope}");

    stdout(&kinproj(
        &["reference", "--problem", "burgers1d_sine", "--T", "0.01", "--Dt", "1e-4", "--dx", "0.02", "--out", "ref.csv"],
        tmp.path(),
    ));
    assert_eq!(fs::read_to_string(tmp.path().join("ref.csv")).unwrap().lines().count(), 101);
    assert!(tmp.path().join("ref.json").exists());
}
