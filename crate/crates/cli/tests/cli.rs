use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
seeds = 2
[sweep]
benchmarks = ["tiny"]
architectures = ["extractor-base", "extractor-parallel"]
factories = [1, 3]
[[benchmark]]
name = "tiny"
model = "tfim_nn2d"
rows = 4
cols = 4
trotter_order = 2
trotter_steps = 1
evolution_time = 1.0
precision = 1e-4
"#;

fn atomarch(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atomarch"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn generate_compile_dump_and_replay() {
    let dir = setup();
    let p = dir.path();
    let o = atomarch(
        p,
        &[
            "--config",
            "run.toml",
            "--out",
            "c.json",
            "generate",
            "--benchmark",
            "tiny",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = atomarch(
        p,
        &[
            "--config",
            "run.toml",
            "--out",
            "t.json",
            "compile",
            "--circuit",
            "c.json",
            "--arch",
            "extractor-parallel",
            "--factories",
            "3",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dump = atomarch(p, &["trace", "dump", "t.json"]);
    assert!(dump.status.success());
    assert!(stdout(&dump).contains("T_INJECT"));

    let sim = atomarch(
        p,
        &[
            "--config",
            "run.toml",
            "simulate",
            "--trace",
            "t.json",
            "--factories",
            "3",
        ],
    );
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    let lines: Vec<serde_json::Value> = stdout(&sim).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["seed"], 1);
    assert_eq!(lines[1]["seed"], 2);
}

#[test]
fn simulate_is_reproducible() {
    let dir = setup();
    let args = [
        "--config",
        "run.toml",
        "--seed",
        "9",
        "simulate",
        "--benchmark",
        "tiny",
        "--arch",
        "extractor-base",
    ];
    let a = atomarch(dir.path(), &args);
    let b = atomarch(dir.path(), &args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_dry_run_lists_cells_and_writes_nothing() {
    let dir = setup();
    let o = atomarch(dir.path(), &["--config", "run.toml", "--dry-run", "sweep"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("4 cells"), "{text}");
    assert!(!dir.path().join("results").exists());
}

#[test]
fn sweep_writes_outputs() {
    let dir = setup();
    let o = atomarch(dir.path(), &["--config", "run.toml", "--out", "res", "sweep"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("res/results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(dir.path().join("res/results.md").exists());
    assert!(dir.path().join("res/plot_data.csv").exists());
}

#[test]
fn layout_of_a_path_graph() {
    let dir = setup();
    let graph = r#"{"roles":["data","data","check","data"],"edges":[{"a":0,"b":1},{"a":1,"b":2},{"a":2,"b":3}]}"#;
    std::fs::write(dir.path().join("g.json"), graph).unwrap();
    let o = atomarch(
        dir.path(),
        &["layout", "--graph", "g.json", "--rows", "2", "--cols", "4"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["max_distance"], 1.0);
    assert_eq!(report["within_cap"], true);
}

#[test]
fn user_errors_exit_with_two() {
    let dir = setup();
    let p = dir.path();
    for args in [
        vec!["--config", "missing.toml", "sweep"],
        vec!["compile", "--benchmark", "tfim-nn", "--arch", "warp-drive"],
        vec!["--config", "run.toml", "generate", "--benchmark", "nope"],
        vec!["frobnicate"],
    ] {
        let o = atomarch(p, &args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    std::fs::write(p.join("bad.toml"), "seeds = 2\nsurprise = true\n").unwrap();
    assert_eq!(atomarch(p, &["--config", "bad.toml", "sweep"]).status.code(), Some(2));
}

#[test]
fn help_exits_cleanly() {
    let o = atomarch(Path::new("."), &["--help"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("sweep"));
}
