use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_titl-mars"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value_line(text: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix("value "))
        .expect("value line")
        .parse()
        .unwrap()
}

const MODEL: &str = "titl-mars v1
vars 2
bound 0 -1 1 real
bound 1 -1 1 real
intercept 0.5
basis 2 1 1 0 0
basis -3 2 1 0 0.25 -1 1 0
";

fn write_model(dir: &Path) -> String {
    let p = dir.join("m.model");
    std::fs::write(&p, MODEL).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn solve_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_model(dir.path());
    for sense in ["max", "min"] {
        let s = run(&["solve", "--model", &m, "--sense", sense]);
        assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
        let o = run(&["oracle", "--model", &m, "--sense", sense]);
        assert!(o.status.success());
        let (a, b) = (value_line(&stdout(&s)), value_line(&stdout(&o)));
        assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
        assert!(stdout(&s).contains("status optimal"));
    }
}

#[test]
fn ga_runs_with_preset() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_model(dir.path());
    let o = run(&["ga", "--model", &m, "--sense", "max", "--preset", "michalewicz", "--seed", "3", "--generations", "50"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("status heuristic"));
    let o = run(&["ga", "--model", &m, "--sense", "max", "--population", "7"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fit_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let mut text = String::from("x1,x2,y\n");
    for i in 0..15 {
        for j in 0..15 {
            let (a, b) = (i as f64 / 14.0, j as f64 / 14.0);
            text.push_str(&format!("{a},{b},{}\n", (a - 0.5).max(0.0) * 4.0 - b));
        }
    }
    std::fs::write(&data, text).unwrap();
    let out = dir.path().join("fit.model");
    let o = run(&["fit", "--data", data.to_str().unwrap(), "--max-basis", "10", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = run(&["solve", "--model", out.to_str().unwrap(), "--sense", "max"]);
    assert!(s.status.success());
    assert!((value_line(&stdout(&s)) - 2.0).abs() < 1e-6);
}

#[test]
fn windfarm_writes_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    let o = run(&[
        "windfarm", "--scenario", "fw2", "--layouts", "20", "--turbines", "10", "--cells", "9", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("x1,x2,y\n"));
    let o = run(&["windfarm", "--scenario", "fw1", "--turbines", "100", "--cells", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.toml");
    std::fs::write(
        &spec,
        "repetitions = 2\ndeterministic = true\nthreads = 1\n\n[[job]]\nfunction = \"f1\"\ngrid = 15\nmax_basis = 10\n",
    )
    .unwrap();
    let mut reports = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let o = run(&["bench", "--spec", spec.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        reports.push(std::fs::read(out.join("report.csv")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let text = String::from_utf8(reports.remove(0)).unwrap();
    assert!(text.starts_with("function,method,sense,value_mean,value_best,time_mean_s,gap"));
    let md = dir.path().join("md");
    let o = run(&["bench", "--spec", spec.to_str().unwrap(), "--out-dir", md.to_str().unwrap(), "--format", "md"]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(md.join("report.md")).unwrap().contains("| f1 | Maximum |"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.model");
    std::fs::write(&bad, "titl-mars v1\nvars 1\nbound 0 0 1 real\nintercept x\n").unwrap();
    let o = run(&["solve", "--model", bad.to_str().unwrap(), "--sense", "max"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
    let o = run(&["solve", "--model", "/nonexistent/m", "--sense", "max"]);
    assert_eq!(o.status.code(), Some(2));
    let m = write_model(dir.path());
    let o = run(&["oracle", "--model", &m, "--sense", "max", "--cap", "3"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["solve", "--model", &m, "--sense", "min", "--node-limit", "0"]);
    assert!(matches!(o.status.code(), Some(0) | Some(3)));
    let o = run(&["miqp", "--model", &m]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("eta"));
}
