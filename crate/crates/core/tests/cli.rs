use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_soar-sim"));
    cmd.env_remove("SOAR_SIM_JOBS");
    cmd
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn soar-sim")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const FREE_WORLD: &str = r#"
format_version = 1
name = "free"
start = { x = 0.0, y = 0.0, heading = 0.0 }
goal = { x = 4.0, y = 3.0 }
"#;

#[test]
fn validate_ok() {
    let out = run(&["validate", "--scenario", fixture("parking_lot").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "OK");
}

#[test]
fn validate_reports_bad_fields() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        format!("{FREE_WORLD}\n[[obstacles]]\nid = 12\nclass = \"cone\"\nx = 2.0\ny = 0.0\nradius = -0.5\n"),
    )
    .unwrap();
    let out = run(&["validate", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("id 12") && err.contains("radius"), "{err}");

    let unversioned = dir.path().join("unversioned.toml");
    fs::write(&unversioned, FREE_WORLD.replace("format_version = 1\n", "")).unwrap();
    let out = run(&["validate", "--scenario", unversioned.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("format_version required"), "{}", stderr(&out));

    let unknown = dir.path().join("unknown.toml");
    fs::write(&unknown, format!("{FREE_WORLD}\nwind = 3\n")).unwrap();
    assert_eq!(run(&["validate", "--scenario", unknown.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn missing_file_is_a_runtime_failure() {
    let out = run(&["validate", "--scenario", "/nonexistent/world.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent/world.toml"));
}

#[test]
fn run_is_repeatable() {
    let path = fixture("arch");
    let args = ["run", "--scenario", path.to_str().unwrap(), "--mode", "non-soar", "--seed", "3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("non-soar") && text.contains("outcome"), "{text}");
}

#[test]
fn batch_summaries_are_byte_identical() {
    let path = fixture("parking_lot");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, jobs) in dirs.iter().zip(["1", "3"]) {
        let out = run(&[
            "batch",
            "--scenario",
            path.to_str().unwrap(),
            "--trials",
            "3",
            "--seed",
            "5",
            "--jobs",
            jobs,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    for file in [
        "parking_lot_soar_summary.txt",
        "parking_lot_soar_summary.csv",
        "parking_lot_soar_seed5.csv",
        "parking_lot_soar_seed7.csv",
    ] {
        let a = fs::read(dirs[0].path().join(file)).unwrap();
        let b = fs::read(dirs[1].path().join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn jobs_env_is_honoured() {
    let path = fixture("head_on");
    let out = bin()
        .env("SOAR_SIM_JOBS", "2")
        .args(["batch", "--scenario", path.to_str().unwrap(), "--trials", "2", "--jobs", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn free_world_modes_agree() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("free.toml");
    fs::write(&path, FREE_WORLD).unwrap();
    let out = run(&["compare", "--scenario", path.to_str().unwrap(), "--trials", "3", "--format", "structured"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let delta = report["relative_time_delta_pct"].as_f64().unwrap();
    assert!(delta.abs() < 1.0, "{delta}");
}

#[test]
fn avg_row_is_the_column_mean() {
    let out = run(&[
        "compare",
        "--scenario",
        fixture("parking_lot").to_str().unwrap(),
        "--trials",
        "4",
        "--format",
        "delimited",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let soar_col = headers.iter().position(|h| h == "soar_time_s").unwrap();
    let mut times = Vec::new();
    let mut avg = None;
    for rec in reader.records() {
        let rec = rec.unwrap();
        match rec.get(0) {
            Some("avg") => avg = rec.get(soar_col).map(|s| s.parse::<f64>().unwrap()),
            Some(k) if k.parse::<u32>().is_ok() => times.push(rec[soar_col].parse::<f64>().unwrap()),
            _ => {}
        }
    }
    assert_eq!(times.len(), 4);
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    assert_eq!(format!("{mean:.3}"), format!("{:.3}", avg.expect("Avg row")));
}

#[test]
fn plot_overlay_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = fixture("circumnavigate");
    let s = scenario.to_str().unwrap();
    let d = dir.path().to_str().unwrap();
    for mode in ["soar", "non-soar"] {
        assert_eq!(run(&["run", "--scenario", s, "--mode", mode, "--out", d]).status.code(), Some(0));
    }
    let soar = dir.path().join("circumnavigate_soar_seed42.csv");
    let non_soar = dir.path().join("circumnavigate_non-soar_seed42.csv");
    let svg = dir.path().join("both.svg");
    let out = run(&[
        "plot",
        "--scenario",
        s,
        "--trajectory",
        soar.to_str().unwrap(),
        "--trajectory",
        non_soar.to_str().unwrap(),
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("class=\"trajectory\"").count(), 2);
    assert!(text.contains("legend") && text.contains(">person<"));

    // header but no samples
    let empty = dir.path().join("empty.csv");
    fs::write(
        &empty,
        "# scenario=circumnavigate\n# mode=soar\n# seed=1\n# outcome=timeout\ntime_s,x,y,heading,speed,active_obstacle_id,c1,c2,min_clearance\n",
    )
    .unwrap();
    let never = dir.path().join("never.svg");
    let out = run(&["plot", "--scenario", s, "--trajectory", empty.to_str().unwrap(), "--out", never.to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
    assert!(!never.exists());

    // trajectory from another world
    let other = run(&["run", "--scenario", fixture("head_on").to_str().unwrap(), "--out", d]);
    assert_eq!(other.status.code(), Some(0));
    let foreign = dir.path().join("head_on_soar_seed42.csv");
    let out = run(&["plot", "--scenario", s, "--trajectory", foreign.to_str().unwrap(), "--out", never.to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("does not match"), "{}", stderr(&out));
    assert!(!never.exists());
}
