use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eulermod"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn body(out: &Output) -> Vec<String> {
    stdout(out)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn triangle_rows() {
    let out = run(&["triangle", "--n", "4", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = body(&out);
    assert_eq!(lines[0], "n,k,eulerian");
    assert!(lines.contains(&"3,1,4".to_string()));
    assert!(lines.contains(&"4,2,11".to_string()));
    assert_eq!(lines.len(), 1 + 10);
}

#[test]
fn modular_exact_and_decimal() {
    let out = run(&["modular", "--n", "3", "--b", "2", "--k", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(body(&out)[1], "3,2,0,1/3,0.3333333333333333");
    let all = run(&["modular", "--n", "2", "--b", "3"]);
    assert_eq!(body(&all)[3], "2,3,2,0,0");
    assert_eq!(
        run(&["modular", "--n", "3", "--b", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["modular", "--n", "3", "--b", "2", "--k", "2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn poisson_mod_methods_agree() {
    let pick = |method: &str| {
        let out = run(&[
            "poisson-mod",
            "--lambda",
            "7",
            "--b",
            "5",
            "--k",
            "2",
            "--method",
            method,
        ]);
        assert_eq!(out.status.code(), Some(0));
        body(&out)[1]
            .split(',')
            .nth(4)
            .unwrap()
            .parse::<f64>()
            .unwrap()
    };
    assert!((pick("sum") - pick("fourier")).abs() < 1e-10);
    let bad = run(&[
        "poisson-mod",
        "--lambda",
        "1",
        "--b",
        "2",
        "--k",
        "0",
        "--method",
        "fft",
    ]);
    assert_eq!(bad.status.code(), Some(2));
    let bad = run(&["poisson-mod", "--lambda", "0", "--b", "2", "--k", "0"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn verify_main_layout_and_reruns() {
    let args = [
        "verify-main",
        "--n-min",
        "6",
        "--n-max",
        "12",
        "--b",
        "2,3,n,9",
        "--no-timestamp",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    let lines = body(&first);
    assert_eq!(lines[0], "n,b,k,lhs,rhs,margin,pass");
    assert!(lines[1..].iter().all(|l| l.ends_with(",true")));
    // b = 9 > n = 6: residues 6, 7, 8 are empty, so lhs = 1/9.
    let row = lines.iter().find(|l| l.starts_with("6,9,8,")).unwrap();
    let lhs: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    assert_eq!(lhs, 1.0 / 9.0);
    // b = n and b = 9 coincide at n = 9; no duplicate rows.
    assert_eq!(lines.iter().filter(|l| l.starts_with("9,9,0,")).count(), 1);
}

#[test]
fn verify_main_json_has_exact_lhs() {
    let out = run(&[
        "verify-main",
        "--n-min",
        "6",
        "--n-max",
        "6",
        "--b",
        "2",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    // A(6, .) = 1, 57, 302, 302, 57, 1: even count 360 of 720.
    assert_eq!(rows[0]["lhs_exact"], "0");
    assert!(doc["metadata"]["timestamp"].is_string());
    let keys: Vec<&str> = rows[0]
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    assert_eq!(
        keys,
        ["n", "b", "k", "lhs", "rhs", "margin", "pass", "lhs_exact"]
    );
}

#[test]
fn verify_main_rejects_small_n() {
    assert_eq!(
        run(&["verify-main", "--n-min", "5", "--n-max", "8", "--b", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["verify-main", "--n-min", "6", "--n-max", "8", "--b", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["verify-main", "--n-min", "9", "--n-max", "8", "--b", "2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn verify_tp_rows() {
    let out = run(&["verify-tp", "--n", "6,50,100,200", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = body(&out);
    assert_eq!(lines[0], "n,lhs,rhs,margin,pass");
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        let margin: f64 = fields[3].parse().unwrap();
        assert!(margin > 0.0, "{line}");
    }
    let n6: Vec<f64> = lines[1]
        .split(',')
        .take(3)
        .map(|f| f.parse().unwrap())
        .collect();
    assert!(n6[2] > 1.0 && n6[1] <= 1.0);
    assert_eq!(run(&["verify-tp", "--n", "5"]).status.code(), Some(2));
}

#[test]
fn oracle_reports() {
    let out = run(&["oracle", "--n", "6", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = body(&out);
    assert!(lines
        .iter()
        .any(|l| l.starts_with("var_s_given_pi,161/6480,") && l.ends_with(",MATCH")));
    assert!(!lines
        .iter()
        .any(|l| l.contains("MISMATCH") || l.ends_with(",FAIL")));

    let out = run(&["oracle", "--n", "4", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = body(&out);
    assert!(lines
        .iter()
        .any(|l| l.starts_with("t1,") && l.ends_with("ABSENT")));
    assert!(lines.iter().any(|l| l.starts_with("exchangeable,true")));
    assert!(lines.iter().any(|l| l.starts_with("lambda,1/2,")));

    assert_eq!(run(&["oracle", "--n", "10"]).status.code(), Some(2));
    assert_eq!(run(&["oracle", "--n", "1"]).status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate",
        "--n",
        "12",
        "--steps",
        "20000",
        "--seed",
        "7",
        "--no-timestamp",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("# seed: 7"));
    let lines = body(&a);
    assert_eq!(lines[0], "statistic,estimate,std_error,expected,z,pass");
    assert!(lines[3].starts_with("max_abs_step,1,"));
    assert_eq!(
        run(&["simulate", "--n", "12", "--steps", "0", "--seed", "1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&[
        "modular",
        "--n",
        "5",
        "--b",
        "3",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["triangle"]).status.code(), Some(2));
    assert_eq!(run(&["triangle", "--n", "0"]).status.code(), Some(2));
}
