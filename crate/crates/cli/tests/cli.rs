use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[[experiment]]
label = "ou_bismut"
experiment = "bismut_gradient"
system = "euclidean-ou:1"
functional = "coord:0@1"
x = [0.5]
v0 = [1.0]
n_paths = 4000
steps_per_unit = 64
expected = 0.36787944117144233
tol_se = 4
tol_abs = 2e-2

[[experiment]]
label = "sphere_pathspace"
experiment = "pathspace_ibp"
system = "sphere2-bm"
functional = "pairdot@0.3,1"
h = "h:linear"
u = [0.0, 0.0, 1.0]
n_paths = 4000
steps_per_unit = 64

[[experiment]]
label = "sphere_invariance"
experiment = "girsanov_invariance"
system = "sphere2-bm"
functional = "coord:2@1"
h = "h:linear"
u = [0.0, 1.0, 0.0]
tau = 0.1
n_paths = 4000
steps_per_unit = 64

[[experiment]]
label = "sphere_martingale"
T = 1
experiment = "girsanov_martingale"
system = "sphere2-bm"
h = "h:linear"
u = [0.0, 1.0, 0.0]
tau = 0.1
n_paths = 4000
steps_per_unit = 64
"#;

fn flowibp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowibp")).args(args).current_dir(dir).env_remove("FLOWIBP_SEED").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn list_prints_the_registry() {
    let dir = tempfile::tempdir().unwrap();
    let out = flowibp(&["list"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 14);
    assert!(text.lines().any(|l| l.starts_with("free_damped_ibp")));
}

#[test]
fn empty_config_passes_with_an_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "empty.toml", "");
    let out = flowibp(&["run", &cfg, "--out", "-"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[[experiment]]\nexperiment = \"nope\"\n");
    let out = flowibp(&["run", &bad], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 2"));

    let missing = dir.path().join("missing.toml").display().to_string();
    assert_eq!(flowibp(&["run", &missing], dir.path()).status.code(), Some(3));

    let cfg = write(dir.path(), "small.toml", SMALL);
    let unwritable = dir.path().join("no/such/dir/out.csv").display().to_string();
    assert_eq!(flowibp(&["run", &cfg, "--out", &unwritable], dir.path()).status.code(), Some(3));

    let out = flowibp(&["run", &cfg, "--out", "report.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stderr).unwrap().contains("warning: line"));

    // A deliberately corrupted identity must fail the run.
    let out = flowibp(&["run", &cfg, "--out", "corrupt.csv", "--corrupt-rhs", "1.1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let report = std::fs::read_to_string(dir.path().join("corrupt.csv")).unwrap();
    let martingale = report.lines().find(|l| l.starts_with("sphere_martingale")).unwrap();
    assert!(martingale.contains(",fail,"), "{martingale}");
}

#[test]
fn reports_are_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let run = |out: &str, jobs: &str| {
        let status = flowibp(&["run", &cfg, "--out", out, "--jobs", jobs, "--omit-timing"], dir.path()).status;
        assert_eq!(status.code(), Some(0));
        std::fs::read(dir.path().join(out)).unwrap()
    };
    let a = run("a.csv", "1");
    assert_eq!(a, run("b.csv", "1"));
    assert_eq!(a, run("c.csv", "3"));
}

#[test]
fn json_and_config_output_settings() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("format = \"json\"\noutput = \"from_config.json\"\n{SMALL}");
    let cfg = write(dir.path(), "small.toml", &text);
    assert_eq!(flowibp(&["run", &cfg, "--omit-timing"], dir.path()).status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("from_config.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 4);

    assert_eq!(
        flowibp(&["run", &cfg, "--omit-timing", "--format", "csv", "--out", "x.csv"], dir.path()).status.code(),
        Some(0)
    );
    let csv = std::fs::read_to_string(dir.path().join("x.csv")).unwrap();
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    for (record, obj) in reader.records().zip(json.as_array().unwrap()) {
        let record = record.unwrap();
        assert_eq!(obj["lhs"].as_f64().unwrap(), record[9].parse::<f64>().unwrap());
        assert_eq!(obj["z"].as_f64().unwrap(), record[15].parse::<f64>().unwrap());
    }
}

#[test]
fn seed_environment_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let run = |seed: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_flowibp"));
        cmd.args(["run", &cfg, "--out", "-", "--omit-timing"]).current_dir(dir.path()).env_remove("FLOWIBP_SEED");
        if let Some(s) = seed {
            cmd.env("FLOWIBP_SEED", s);
        }
        cmd.output().unwrap()
    };
    let default = run(None);
    let seven = run(Some("7"));
    let other = run(Some("8"));
    assert_eq!(default.stdout, seven.stdout);
    assert_ne!(default.stdout, other.stdout);
    assert!(String::from_utf8(other.stdout).unwrap().contains(",8,"));
    assert_eq!(run(Some("x")).status.code(), Some(2));
}
