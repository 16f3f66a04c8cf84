use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsbm-lab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field<'a>(line: &'a str, key: &str) -> &'a str {
    line.split_whitespace().find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('='))).unwrap()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn generate_without_moves_repeats_labels() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("seq");
    let o = lab(&["generate", "--out", out.to_str().unwrap(), "--n", "60", "-T", "7", "--epsilon", "0", "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let labels = fs::read_to_string(out.join("labels.csv")).unwrap();
    let rows: Vec<&str> = labels.lines().collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| *r == rows[0]));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = lab(&[
            "generate",
            "--out",
            out.to_str().unwrap(),
            "--n",
            "80",
            "-T",
            "5",
            "--epsilon",
            "0.05",
            "--seed",
            "11",
        ]);
        assert!(o.status.success());
        dir_bytes(&out)
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    assert_eq!(a.len(), 2 + 6);
}

#[test]
fn markov_manifest_echoes_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m");
    let args =
        ["generate", "--out", out.to_str().unwrap(), "--mode", "markov", "--n", "100", "--epsilon", "0.2", "-T", "4"];
    assert!(lab(&args).status.success());
    let text = fs::read_to_string(out.join("manifest.txt")).unwrap();
    let kv: Vec<(&str, &str)> = text.lines().map(|l| l.split_once('=').unwrap()).collect();
    let get = |k: &str| kv.iter().find(|(a, _)| *a == k).map(|(_, v)| *v).unwrap();
    assert_eq!(get("mode"), "markov");
    assert_eq!(get("n"), "100");
    assert_eq!(get("epsilon"), "0.2");
    assert_eq!(get("horizon"), "4");
    assert_eq!(get("derived.changes"), "20");
    for key in ["k", "alpha", "tau", "seed", "derived.rho_n", "derived.nbar_max"] {
        get(key);
    }
}

#[test]
fn easy_regime_is_recovered_from_persisted_sequence() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("easy");
    let o = lab(&[
        "generate",
        "--out",
        out.to_str().unwrap(),
        "--n",
        "400",
        "-k",
        "3",
        "--alpha",
        "0.5",
        "--tau",
        "0.1",
        "--epsilon",
        "0",
        "-T",
        "3",
    ]);
    assert!(o.status.success());
    let labels = tmp.path().join("labels.csv");
    let metrics = tmp.path().join("metrics.csv");
    let o = lab(&[
        "cluster",
        "--input",
        out.to_str().unwrap(),
        "--lambda",
        "0.5",
        "--labels-out",
        labels.to_str().unwrap(),
        "--metrics-out",
        metrics.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    for l in &lines {
        assert_eq!(field(l, "e_value"), "0");
    }
    let label_rows = fs::read_to_string(&labels).unwrap();
    assert_eq!(label_rows.lines().count(), 2);
    assert!(label_rows.lines().all(|l| l.split(',').count() == 401));
    assert_eq!(fs::read_to_string(&metrics).unwrap().lines().count(), 3 + 2);
}

#[test]
fn lambda_one_matches_single_snapshot() {
    let common = ["cluster", "--n", "150", "--alpha", "0.15", "--epsilon", "0.05", "-T", "6", "--seed", "5"];
    let exp = lab(&[&common[..], &["--lambda", "1"]].concat());
    let win = lab(&[&common[..], &["--window", "1"]].concat());
    assert!(exp.status.success() && win.status.success());
    let strip = |s: String| -> Vec<String> {
        s.lines()
            .map(|l| {
                l.split_whitespace()
                    .filter(|kv| !kv.starts_with("lambda=") && !kv.starts_with("window="))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect()
    };
    assert_eq!(strip(stdout(&exp)), strip(stdout(&win)));
}

#[test]
fn both_matrix_kinds_are_reported() {
    let o = lab(&["cluster", "--n", "120", "--alpha", "0.2", "-T", "4", "--matrix", "both"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("matrix=adjacency")));
    assert!(text.lines().any(|l| l.starts_with("matrix=laplacian")));
}

#[test]
fn sweep_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sw");
    let o = lab(&[
        "sweep",
        "--out",
        out.to_str().unwrap(),
        "--n",
        "80",
        "--alpha",
        "0.2",
        "-T",
        "6",
        "--trials",
        "2",
        "--lambdas",
        "0.3,1",
        "--windows",
        "2",
        "--threads",
        "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let runs = fs::read_to_string(out.join("runs.csv")).unwrap();
    assert!(runs.starts_with("# dsbm-lab runs v1\n"));
    assert_eq!(runs.lines().count(), 3 + 2 * 3 * 2);
    for f in ["summary.txt", "plot_fig1_ari.csv", "plot_fig2_lambda.csv"] {
        assert!(out.join(f).exists());
    }
    assert!(stdout(&o).contains("lambda.adjacency.lambda_star_norm="));
}

#[test]
fn sweep_is_deterministic_apart_from_timings() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = tmp.path().join(name);
        let o = lab(&[
            "sweep",
            "--out",
            out.to_str().unwrap(),
            "--n",
            "60",
            "--alpha",
            "0.25",
            "-T",
            "4",
            "--trials",
            "3",
            "--lambdas",
            "0.5",
            "--windows",
            "",
            "--threads",
            threads,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = fs::read_to_string(out.join("runs.csv")).unwrap();
        text.lines().map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string()).collect::<Vec<_>>()
    };
    assert_eq!(run("a", "1"), run("b", "2"));
}

#[test]
fn sweep_row_is_recomputable_from_its_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sw");
    let base = ["--n", "70", "--alpha", "0.2", "-T", "4", "--matrix", "adjacency"];
    let o = lab(&[
        &["sweep", "--out", out.to_str().unwrap(), "--trials", "2", "--lambdas", "0.4", "--windows", ""],
        &base[..],
    ]
    .concat());
    assert!(o.status.success());
    let runs = fs::read_to_string(out.join("runs.csv")).unwrap();
    let row: Vec<&str> = runs.lines().nth(4).unwrap().split(',').collect();
    let seq = tmp.path().join("seq");
    assert!(lab(&[&["generate", "--out", seq.to_str().unwrap(), "--seed", row[10]], &base[..]].concat())
        .status
        .success());
    let o = lab(&["cluster", "--input", seq.to_str().unwrap(), "--lambda", "0.4", "--matrix", "adjacency"]);
    let line = stdout(&o);
    assert_eq!(field(&line, "spec_err"), row[5]);
    assert_eq!(field(&line, "ari"), row[6]);
}

#[test]
fn verify_weights_window_five_passes() {
    let o = lab(&["verify", "weights", "--window", "5"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("status=PASS"));
}

#[test]
fn verify_laplacian_inequality_counts_instances() {
    let o = lab(&["verify", "laplacian-ineq", "--instances", "200"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("holds=200"));
    assert!(text.contains("failures=0"));
}

#[test]
fn verify_rates_reports_reduction() {
    let o = lab(&["verify", "rates"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("reduction=ok"));
    let card = lab(&["rates", "--csv"]);
    assert_eq!(stdout(&card).lines().count(), 2);
}

#[test]
fn exit_codes() {
    assert_eq!(lab(&["--help"]).status.code(), Some(0));
    assert_eq!(lab(&["bogus"]).status.code(), Some(1));
    assert_eq!(lab(&["rates", "--set", "nokey=1"]).status.code(), Some(1));
    assert_eq!(lab(&["cluster", "--input", "/nonexistent/dir"]).status.code(), Some(3));
    assert_eq!(lab(&["rates", "--config", "/nonexistent/file.cfg"]).status.code(), Some(3));
    // The exponential tail weight can exceed λ at the shortest history.
    assert_eq!(lab(&["verify", "weights", "--lambda", "0.3"]).status.code(), Some(2));
}
