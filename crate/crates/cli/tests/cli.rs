use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_imdp-synth");
const GOAL: &str = r#"P>=0.65 [F "goal"]"#;

const NAV3_EPS_01: &str = "\
imdp 4
actions f m
initial 0
label \"goal\" 3
trans 0 f 3 [0.68, 0.88]
trans 0 f 2 [0.12, 0.32]
trans 0 m 1 [0.8, 1]
trans 0 m 2 [0, 0.2]
trans 1 m 3 [0.8, 1]
trans 1 m 2 [0, 0.2]
";

const NAV3_EPS_0: &str = "\
imdp 4
actions f m
label \"goal\" 3
trans 0 f 3 0.78
trans 0 f 2 0.22
trans 0 m 1 0.9
trans 0 m 2 0.1
trans 1 m 3 0.9
trans 1 m 2 0.1
";

const CHAIN: &str = "\
imdp 3
actions go
label \"goal\" 2
trans 0 go 1 1
trans 1 go 2 1
";

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("imdp-synth-cli-{}-{tag}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.0.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scipy_available() -> bool {
    Command::new("python3").args(["-c", "import scipy.optimize"]).output().is_ok_and(|o| o.status.success())
}

fn scipy_template() -> String {
    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scripts/scipy_milp.py");
    format!("python3 '{}' {{lp_file}} {{sol_file}}", script.display())
}

#[test]
fn synth_nav3_admits_only_fast() {
    let dir = Scratch::new("synth");
    let model = dir.file("nav3.imdp", NAV3_EPS_01);
    let json = dir.path("report.json");
    let strat = dir.path("theta.txt");
    for enc in ["vertex", "dual"] {
        let out = run(&[
            "synth",
            arg(&model),
            "--spec",
            GOAL,
            "--encoding",
            enc,
            "--json",
            arg(&json),
            "--strategy-out",
            arg(&strat),
        ]);
        assert_eq!(out.status.code(), Some(0), "{enc}");
        let text = stdout(&out);
        assert!(text.contains("beta: 2\n"), "{text}");
        assert!(text.contains("  s0: f\n"), "{text}");
        let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
        assert_eq!(doc["result"]["beta"], 2);
        assert_eq!(doc["encoding"], if enc == "vertex" { "Vertex" } else { "Dual" });
        assert!(fs::read_to_string(&strat).unwrap().starts_with("0: f\n"));
    }
}

#[test]
fn synth_report_is_deterministic() {
    let dir = Scratch::new("determinism");
    let model = dir.file("nav3.imdp", NAV3_EPS_01);
    let strip = |o: &Output| stdout(o).lines().filter(|l| !l.starts_with("solver:")).collect::<Vec<_>>().join("\n");
    let a = run(&["synth", arg(&model), "--spec", GOAL]);
    let b = run(&["synth", arg(&model), "--spec", GOAL]);
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn synth_exit_codes() {
    let dir = Scratch::new("codes");
    let model = dir.file("nav3.imdp", NAV3_EPS_01);
    let exact = dir.file("nav0.imdp", NAV3_EPS_0);
    assert_eq!(run(&["synth", arg(&model), "--spec", r#"P>=1.5 [F "goal"]"#]).status.code(), Some(2));
    assert_eq!(run(&["synth", arg(&model), "--spec", r#"P>=0.5 [F "nowhere"]"#]).status.code(), Some(2));
    assert_eq!(run(&["synth", arg(&dir.path("missing.imdp")), "--spec", GOAL]).status.code(), Some(2));
    assert_eq!(run(&["synth", arg(&model)]).status.code(), Some(2));
    assert_eq!(run(&["synth", arg(&model), "--spec", GOAL, "--encoding", "cubic"]).status.code(), Some(2));
    let out = run(&["synth", arg(&exact), "--spec", r#"P>=0.99 [F "goal"]"#]);
    assert_eq!(out.status.code(), Some(10));
    assert!(stdout(&out).contains("no robust multi-strategy exists"));
}

#[test]
fn external_backend_needs_a_command() {
    let dir = Scratch::new("nocmd");
    let model = dir.file("nav3.imdp", NAV3_EPS_01);
    let out = Command::new(BIN)
        .args(["synth", arg(&model), "--spec", GOAL, "--backend", "external"])
        .env_remove("IMDP_SYNTH_SOLVER_CMD")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_external_solver_is_internal_error() {
    let dir = Scratch::new("badcmd");
    let model = dir.file("nav3.imdp", NAV3_EPS_01);
    let out = Command::new(BIN)
        .args(["synth", arg(&model), "--spec", GOAL, "--backend", "external", "--solver-cmd", "exit 7"])
        .env_remove("IMDP_SYNTH_SOLVER_CMD")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_exit_codes() {
    let dir = Scratch::new("verify");
    let model = dir.file("nav3.imdp", NAV3_EPS_01);
    let both = dir.file("both.txt", "0: f m\n1: m\n");
    let out = run(&["verify", arg(&model), "--spec", GOAL, "--strategy", arg(&both)]);
    assert_eq!(out.status.code(), Some(3));
    let text = stdout(&out);
    let value: f64 = text.split(" is ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!((value - 0.64).abs() < 1e-9, "{text}");

    let fast = dir.file("fast.txt", "0: f\n");
    assert_eq!(run(&["verify", arg(&model), "--spec", GOAL, "--strategy", arg(&fast)]).status.code(), Some(0));

    let chain = dir.file("chain.imdp", CHAIN);
    let full = dir.file("full.txt", "0: go\n1: go\n");
    let out = run(&["verify", arg(&chain), "--spec", r#"P>=1 [F "goal"]"#, "--strategy", arg(&full)]);
    assert_eq!(out.status.code(), Some(0));

    let unknown = dir.file("unknown.txt", "0: jump\n");
    assert_eq!(run(&["verify", arg(&model), "--spec", GOAL, "--strategy", arg(&unknown)]).status.code(), Some(2));
    let malformed = dir.file("malformed.txt", "0 f\n");
    assert_eq!(run(&["verify", arg(&model), "--spec", GOAL, "--strategy", arg(&malformed)]).status.code(), Some(2));
}

#[test]
fn sweep_widens_monotonically() {
    let out = run(&["sweep", "--model", "nav3-template", "--eps", "0:0.2:0.01"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("epsilon,action,min_value,max_value"));
    let mut last: std::collections::HashMap<String, (f64, f64)> = Default::default();
    let mut rows = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let (lo, hi): (f64, f64) = (f[2].parse().unwrap(), f[3].parse().unwrap());
        if f[0] == "0" && f[1] == "f" {
            assert_eq!((lo, hi), (0.78, 0.78));
        }
        if let Some(&(plo, phi)) = last.get(f[1]) {
            assert!(lo <= plo && hi >= phi, "{line}");
        }
        last.insert(f[1].to_string(), (lo, hi));
        rows += 1;
    }
    assert_eq!(rows, 42);
    assert_eq!(run(&["sweep", "--model", "grid", "--eps", "0:0.2:0.01"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--model", "nav3-template", "--eps", "0:2"]).status.code(), Some(2));
}

#[test]
fn bench_obs_grid3_rows_agree() {
    let out = run(&["bench", "--domain", "obs", "--grid", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2, "{text}");
    assert_eq!(rows[0][4], "vertex");
    assert_eq!(rows[1][4], "dual");
    assert_eq!(rows[0][9], "optimal");
    assert_eq!(rows[0][10], rows[1][10]);
    assert_eq!(run(&["bench", "--domain", "obs", "--grid", "1"]).status.code(), Some(2));
}

#[test]
fn export_lp_round_trips_through_external_solver() {
    let dir = Scratch::new("export");
    let model = dir.file("nav3.imdp", NAV3_EPS_01);
    let lp = dir.path("nav3.lp");
    let out = run(&["export-lp", arg(&model), "--spec", GOAL, "--encoding", "vertex", "--out", arg(&lp)]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&lp).unwrap();
    for section in ["Maximize", "Subject To", "Bounds", "Binaries", "End"] {
        assert!(text.contains(section), "{section}");
    }
    if !scipy_available() {
        eprintln!("scipy not available, external solve skipped");
        return;
    }
    let out = run(&["synth", arg(&model), "--spec", GOAL, "--backend", "external", "--solver-cmd", &scipy_template()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("objective: 2\n"));

    let sol = dir.path("nav3.sol");
    let cmd = scipy_template().replace("{lp_file}", arg(&lp)).replace("{sol_file}", arg(&sol));
    assert!(Command::new("sh").arg("-c").arg(cmd).status().unwrap().success());
    let ys: f64 = fs::read_to_string(&sol)
        .unwrap()
        .lines()
        .filter(|l| l.starts_with("y_"))
        .map(|l| l.split_whitespace().nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert_eq!(ys.round(), 2.0);
}
