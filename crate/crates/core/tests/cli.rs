use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SPEC: &str = "# small scenario\nn_tasks = 3\nn_workers = 10\ntrials = 8\nmaster_seed = 5\n";

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcs-hybrid")).args(args).output().expect("binary runs")
}

fn spec_file(dir: &Path, text: &str) -> String {
    let p = dir.join("scenario.txt");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn version_prints_package_version() {
    let o = cli(&["version"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), format!("mcs-hybrid {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn run_writes_results_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_file(dir.path(), SPEC);
    let out = dir.path().join("out");
    let o = cli(&["run", "--spec", &spec, "--out", out.to_str().unwrap(), "--methods", "hybrid,conventional_f"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("method"));
    assert!(text.contains("hybrid") && text.contains("conventional_f"));

    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,trial,service_quality,rosq,fodsq,worker_utility,ni,dip,ecip,futures_ni,futures_dip,futures_ecip"
    );
    assert_eq!(lines.count(), 16);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("aggregate.json")).unwrap()).unwrap();
    assert_eq!(json["aggregates"].as_array().unwrap().len(), 2);
    assert_eq!(json["diagnostics"]["budget_violations"], 0);
}

#[test]
fn run_with_csv_format_and_runtime_column() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_file(dir.path(), SPEC);
    let out = dir.path().join("out");
    let o = cli(&[
        "run", "--spec", &spec, "--out", out.to_str().unwrap(), "--trials", "2", "--format", "csv", "--include-runtime",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 7);
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.lines().next().unwrap().ends_with(",running_time_ms"));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_file(dir.path(), SPEC);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(cli(&["run", "--spec", &spec, "--out", a.to_str().unwrap(), "--jobs", "1"]).status.success());
    assert!(cli(&["run", "--spec", &spec, "--out", b.to_str().unwrap(), "--jobs", "3"]).status.success());
    for f in ["results.csv", "aggregate.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn gen_bundle_feeds_run() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_file(dir.path(), SPEC);
    let bundle = dir.path().join("market");
    let o = cli(&["gen", "--spec", &spec, "--out", bundle.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(bundle.join("pairs.csv")).unwrap().lines().count(), 31);

    let direct = dir.path().join("direct");
    let from_bundle = dir.path().join("bundle");
    assert!(cli(&["run", "--spec", &spec, "--out", direct.to_str().unwrap()]).status.success());
    let o = cli(&["run", "--spec", &spec, "--out", from_bundle.to_str().unwrap(), "--market", bundle.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(direct.join("results.csv")).unwrap(),
        fs::read(from_bundle.join("results.csv")).unwrap()
    );
}

#[test]
fn sweep_writes_one_directory_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_file(dir.path(), SPEC);
    let out = dir.path().join("sweep");
    let o = cli(&["sweep", "--spec", &spec, "--out", out.to_str().unwrap(), "--param", "tau", "--grid", "0,0.3", "--trials", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("point_00/results.csv").is_file());
    assert!(out.join("point_01/aggregate.json").is_file());
    assert!(stdout(&o).contains("tau = 0.3"));
}

#[test]
fn stability_passes_and_fault_is_detected() {
    let o = cli(&["stability", "--instances", "20", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("certified 20 instances, 0 problems found"));

    let o = cli(&["stability", "--instances", "20", "--seed", "3", "--fault"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("witness"));
}

#[test]
fn ingest_builds_a_market() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_file(dir.path(), "n_tasks = 2\nn_workers = 1\n");
    let trips = dir.path().join("trips.csv");
    fs::write(&trips, "worker_id,active_days,trip_km,pickup_km,dropoff_km\n7,20,3.5,0.4,0.9\n3,31,8.0,1.2,0.3\n7,20,1.0,0.1,2.0\n").unwrap();
    let out = dir.path().join("m");
    let o = cli(&["ingest", "--trips", trips.to_str().unwrap(), "--spec", &spec, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("2 tasks x 2 workers"));
    let workers = fs::read_to_string(out.join("workers.csv")).unwrap();
    assert_eq!(workers.lines().count(), 3);
    // worker 3 sorts first and drove all 31 days
    assert!(workers.lines().nth(1).unwrap().starts_with("0,1.0,"));
    assert!(workers.lines().nth(2).unwrap().starts_with(&format!("1,{},", 20.0 / 31.0)));
}

#[test]
fn input_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = spec_file(dir.path(), "n_tasks = 2\nn_workers = x\n");
    let o = cli(&["run", "--spec", &bad, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_workers"));

    let o = cli(&["run", "--spec", "/nonexistent/spec.txt", "--out", "/tmp/unused"]);
    assert_eq!(o.status.code(), Some(2));

    let good = spec_file(dir.path(), SPEC);
    let o = cli(&["run", "--spec", &good, "--out", dir.path().join("o").to_str().unwrap(), "--methods", "auction"]);
    assert_eq!(o.status.code(), Some(2));

    let o = cli(&["stability", "--max-workers", "11"]);
    assert_eq!(o.status.code(), Some(2));
}
