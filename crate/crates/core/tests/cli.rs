use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn soca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soca"))
        .args(args)
        .env_remove("SOCA_TYPE_CAP")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> &str {
    std::str::from_utf8(&o.stdout).unwrap()
}

fn assert_failure(o: &Output, code: i32) {
    assert_eq!(o.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());
}

#[test]
fn oracle_on_uniform_bit() {
    let spec = fixture("uniform2.json");
    let o = soca(&["oracle", "--n", "3", "--eps", "0.25", spec.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "log2_M=2.584962500721156\nM=6\n");
}

#[test]
fn rate_two_case_two() {
    let o = soca(&[
        "rate-two", "--s1", "1.0", "--sigma1", "1.0", "--s2", "0.5", "--sigma2", "0.3", "--t", "0.5", "--eps", "0.25",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "a=1.0\nb=0.0\ncase=Case2\n");
}

#[test]
fn unknown_flag_and_bad_values_exit_two() {
    assert_failure(&soca(&["oracle", "--n", "3", "--eps", "0.25", "--frobnicate", "x.json"]), 2);
    assert_failure(&soca(&["tail", "--n", "3"]), 2);
    assert_failure(&soca(&["figure1", "--sigma1", "0.2", "--sigma2", "0.7", "--t", "0.4", "--eps-grid", "1:0:0.1"]), 2);
    let spec = fixture("uniform2.json");
    assert_failure(&soca(&["oracle", "--n", "3", "--eps", "1.5", spec.to_str().unwrap()]), 2);
}

#[test]
fn malformed_and_invalid_json_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("truncated.json", r#"{"components": ["#),
        ("unknown_field.json", r#"{"components": [{"weight": 1.0, "eigenvalues": [1.0]}], "extra": 1}"#),
        ("unnormalized.json", r#"{"components": [{"weight": 1.0, "eigenvalues": [0.5, 0.6]}]}"#),
        ("negative.json", r#"{"components": [{"weight": 1.0, "eigenvalues": [1.5, -0.5]}]}"#),
        ("mismatch.json", r#"{"components": [{"weight": 0.5, "eigenvalues": [1.0]}, {"weight": 0.5, "eigenvalues": [0.5, 0.5]}]}"#),
        ("empty.json", r#"{"components": []}"#),
    ];
    for (name, body) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        assert_failure(&soca(&["stats", path.to_str().unwrap()]), 2);
    }
    assert_failure(&soca(&["stats", dir.path().join("missing.json").to_str().unwrap()]), 2);
}

#[test]
fn degenerate_rates_exit_three() {
    let spec = fixture("uniform2.json");
    assert_failure(&soca(&["rate", spec.to_str().unwrap(), "--eps", "0.2"]), 3);
    // no component at a = 0.5, all of the mass lies above: b = +inf
    assert_failure(&soca(&["rate", spec.to_str().unwrap(), "--a", "0.5", "--eps", "0.2"]), 3);
    assert_failure(
        &soca(&["rate-two", "--s1", "1", "--sigma1", "1", "--s2", "0.5", "--sigma2", "0.3", "--t", "0.3", "--eps", "0.3"]),
        3,
    );
}

#[test]
fn cap_exceeded_exits_four() {
    let spec = fixture("uniform2.json");
    let o = Command::new(env!("CARGO_BIN_EXE_soca"))
        .args(["oracle", "--n", "40", "--eps", "0.1", spec.to_str().unwrap()])
        .env("SOCA_TYPE_CAP", "20")
        .output()
        .unwrap();
    assert_failure(&o, 4);
    assert_failure(&soca(&["universal-dim", "--n", "5000", "--d", "8", "--a", "1", "--b", "0"]), 4);
}

#[test]
fn stats_schema() {
    let o = soca(&["stats", fixture("two_bernoulli.json").to_str().unwrap()]);
    assert!(o.status.success());
    let mut reader = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(reader.headers().unwrap(), vec!["component", "weight", "entropy", "varentropy", "sigma"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    let v: f64 = rows[0][3].parse().unwrap();
    let sigma: f64 = rows[0][4].parse().unwrap();
    assert_eq!(sigma, v.sqrt());
}

#[test]
fn study_schemas_and_round_trip() {
    let spec = fixture("two_bernoulli.json");
    let spec = spec.to_str().unwrap();
    let cases: [(&[&str], &[&str]); 5] = [
        (
            &["berry-esseen", "--p", "0.75,0.25", "--l-grid=-1:1:1", "--n-grid", "16,32"],
            &["n", "L", "empirical", "gaussian", "abs_diff", "abs_diff_times_sqrt_n"],
        ),
        (&["dominance", "--p1", "0.6,0.4", "--p2", "0.9,0.1", "--c", "-0.5", "--n-grid", "16"], &[
            "n",
            "tail_low_entropy_source",
            "tail_high_entropy_source",
        ]),
        (&["converge", spec, "--eps", "0.2", "--n-grid", "8:32:8"], &["n", "log2_M", "b_hat", "b_star", "gap"]),
        (&["diverge", spec, "--eps", "0.2", "--wrong-a", "0.9", "--n-grid", "8,16"], &["n", "normalized"]),
        (
            &["figure1", "--sigma1", "0.235", "--sigma2", "0.712", "--t", "0.425", "--eps-grid", "0.1:0.9:0.1"],
            &["eps", "L", "lower_bound", "upper_bound"],
        ),
    ];
    for (args, header) in cases {
        let o = soca(args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        assert!(!text.contains('\r'));
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(reader.headers().unwrap(), header);
        for record in reader.records() {
            let record = record.unwrap();
            assert_eq!(record.len(), header.len());
            for field in record.iter() {
                let x: f64 = field.parse().unwrap();
                // shortest representation: reprinting gives the same text
                if field.contains('.') || field.contains('e') {
                    assert_eq!(format!("{x:?}"), field);
                }
            }
        }
    }
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig.csv");
    let o = soca(&[
        "figure1", "--sigma1", "0.235", "--sigma2", "0.712", "--t", "0.425", "--eps-grid", "0.01:0.99:0.01", "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let expected = std::fs::read_to_string(fixture("figure1.csv")).unwrap();
    assert_eq!(std::fs::read_to_string(out).unwrap(), expected);
}

#[test]
fn scalar_subcommands() {
    let spec = fixture("uniform2.json");
    let spec = spec.to_str().unwrap();
    assert_eq!(stdout(&soca(&["tail", spec, "--n", "4", "--gamma", "-4"])), "tail=1.0\n");
    assert_eq!(stdout(&soca(&["dseps", spec, "--n", "4", "--eps", "0.3"])), "d_s_eps=-4.0\n");
    let u = soca(&["universal-dim", "--n", "2", "--d", "2", "--a", "0", "--b", "0"]);
    assert!(stdout(&u).starts_with("xi=2\n"));
    let inc = soca(&["inclusion", "--p", "0.7,0.3", "--n", "8", "--a", "0.8", "--b", "-1"]);
    assert!(stdout(&inc).contains("holds=true\n"));
    let r = soca(&["rate", fixture("two_bernoulli.json").to_str().unwrap(), "--eps", "0.2"]);
    assert!(stdout(&r).ends_with("case=GeneralSolve\n"));
}
