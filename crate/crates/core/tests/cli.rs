use std::fs;
use std::path::Path;
use std::process::Command;

use bundle_extra::experiment::{RUN_HEADER, SNAPSHOT_FILE, SWEEP_FILE, SWEEP_HEADER};

const SMALL: &str = "\
n = 6
d = 4
eta = 3
edges = 8
seed = 3
arms = extra, bundle:cutting_plane:3
";

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bundle-extra"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, extra: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, format!("{SMALL}{extra}")).unwrap();
    path.display().to_string()
}

fn snapshot_value(dir: &Path, key: &str) -> String {
    let text = fs::read_to_string(dir.join(SNAPSHOT_FILE)).unwrap();
    let prefix = format!("# {key} = ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("snapshot has no {key}"))
        .to_string()
}

#[test]
fn run_writes_one_csv_per_arm_with_a_row_per_iterate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "a.cfg", "max_iters = 40\nalpha = 0.01\n");
    let out = tmp.path().join("out");
    let status = cli(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    for stem in ["extra", "bundle_cutting_plane_3"] {
        let csv = fs::read_to_string(out.join(format!("{stem}.csv"))).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], RUN_HEADER);
        assert_eq!(lines.len(), 1 + 41);
        assert!(lines[1].starts_with("0,"));
        assert!(lines[41].starts_with("40,"));
    }
    let snapshot = fs::read_to_string(out.join(SNAPSHOT_FILE)).unwrap();
    assert!(snapshot.contains("arms = extra,bundle:cutting_plane:3"));
}

#[test]
fn rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "a.cfg", "max_iters = 60\nalpha = 0.02\n");
    let mut csvs = Vec::new();
    for name in ["first", "second"] {
        let out = tmp.path().join(name);
        let status = cli(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "2"]);
        assert!(status.status.success());
        csvs.push(fs::read(out.join("bundle_cutting_plane_3.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn zero_budget_writes_header_and_initial_row() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "z.cfg", "max_iters = 0\n");
    let out = tmp.path().join("out");
    assert!(cli(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let csv = fs::read_to_string(out.join("extra.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], RUN_HEADER);
    assert!(lines[1].starts_with("0,0e0,"), "x0 = 0 is not at consensus? {}", lines[1]);
}

#[test]
fn same_seed_gives_the_same_instance_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let one = write_config(tmp.path(), "one.cfg", "max_iters = 1\narms = extra\n");
    let two = write_config(tmp.path(), "two.cfg", "max_iters = 1\narms = bundle:two_cut\n");
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert!(cli(&["run", "--config", &one, "--out", a.to_str().unwrap()]).status.success());
    assert!(cli(&["run", "--config", &two, "--out", b.to_str().unwrap()]).status.success());
    assert!(cli(&["run", "--config", &two, "--out", c.to_str().unwrap(), "--seed", "4"]).status.success());
    assert_eq!(snapshot_value(&a, "instance_sha256"), snapshot_value(&b, "instance_sha256"));
    assert_ne!(snapshot_value(&a, "instance_sha256"), snapshot_value(&c, "instance_sha256"));
}

#[test]
fn snapshot_reruns_to_the_same_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "a.cfg", "max_iters = 30\nalpha = bound*2\n");
    let first = tmp.path().join("first");
    assert!(cli(&["run", "--config", &cfg, "--out", first.to_str().unwrap()]).status.success());
    let second = tmp.path().join("second");
    let snap = first.join(SNAPSHOT_FILE);
    let status = cli(&["run", "--config", snap.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(status.status.success());
    assert_eq!(fs::read(first.join("extra.csv")).unwrap(), fs::read(second.join("extra.csv")).unwrap());
}

#[test]
fn sweep_below_the_bound_never_diverges() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.cfg", "max_iters = 300\nsweep_alphas = 1e-4, 2e-4, 4e-4\n");
    let out = tmp.path().join("out");
    let status = cli(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let csv = fs::read_to_string(out.join(SWEEP_FILE)).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], SWEEP_HEADER);
    assert_eq!(lines.len(), 1 + 2 * 3);
    for row in &lines[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 5);
        assert_eq!(fields[4], "false", "{row}");
        assert!(fields[3] == "not reached" || fields[3].parse::<usize>().is_ok());
    }
    assert!(snapshot_value(&out, "converged_when").starts_with("rel_error <= 1e-6"));
}

#[test]
fn invalid_specs_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    for (extra, field) in [("sweep_alphas = \n", "sweep_alphas"), ("alpha = 0\n", "alpha"), ("arms = \n", "arms")] {
        let cfg = write_config(tmp.path(), "bad.cfg", extra);
        let out = cli(&["sweep", "--config", &cfg, "--out", tmp.path().join("x").to_str().unwrap()]);
        assert!(!out.status.success());
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(field), "{stderr}");
    }
}

#[test]
fn unwritable_output_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let cfg = write_config(tmp.path(), "a.cfg", "max_iters = 1\n");
    let out = cli(&["run", "--config", &cfg, "--out", blocker.join("sub").to_str().unwrap()]);
    assert!(!out.status.success());
}
