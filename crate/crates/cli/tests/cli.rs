//! End-to-end tests of the `afom-restart` binary: exit codes, emitted files
//! and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_afom-restart"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .env_remove("AFOM_RESTART_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn solve_emits_trace_series_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "solve",
            "--family",
            "qp",
            "--n",
            "2",
            "--kappa",
            "100",
            "--seed",
            "42",
            "--scheme",
            "adaptive",
            "--eps",
            "1e-8",
            "--record-inner",
            "--tag",
            "t",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for file in ["t.csv", "t_series.csv", "t_inner.csv", "t_meta.json"] {
        assert!(dir.path().join(file).exists(), "missing {file}");
    }
    let trace = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(trace.starts_with("j,n_j,s_j,m_jplus1,f_zj,gap,cumulative_iterations\n"));
    let inner = std::fs::read_to_string(dir.path().join("t_inner.csv")).unwrap();
    assert!(inner.starts_with("outer_j,k,f_xk\n"));
}

#[test]
fn identical_seeds_give_byte_identical_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "solve",
        "--family",
        "boxqp",
        "--n",
        "3",
        "--kappa",
        "50",
        "--seed",
        "9",
        "--scheme",
        "functional",
        "--eps",
        "1e-9",
        "--tag",
        "d",
    ];
    assert_eq!(run_in(a.path(), &args).status.code(), Some(0));
    assert_eq!(run_in(b.path(), &args).status.code(), Some(0));
    for file in ["d.csv", "d_series.csv", "d_meta.json"] {
        let left = std::fs::read(a.path().join(file)).unwrap();
        let right = std::fs::read(b.path().join(file)).unwrap();
        assert_eq!(left, right, "{file} differs between identical runs");
    }
}

#[test]
fn zero_block_length_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["solve", "--scheme", "fixed", "--n-restart", "0"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cap_exceeded_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "solve", "--family", "qp", "--n", "10", "--kappa", "10000", "--seed", "3", "--scheme",
            "adaptive", "--eps", "1e-14", "--cap", "30", "--tag", "c",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "{}", stdout(&out));
}

#[test]
fn solving_from_the_certified_optimum_finishes_in_one_round() {
    let dir = tempfile::tempdir().unwrap();
    // Origin-centered quadratic: the certified optimum is the origin.
    let doc = r#"{
        "family": "quadratic",
        "hessian": [[1.0, 0.0], [0.0, 100.0]],
        "linear": [0.0, 0.0],
        "smoothness_constant": 100.0,
        "growth_constant": 1.0
    }"#;
    std::fs::write(dir.path().join("p.json"), doc).unwrap();
    let out = run_in(
        dir.path(),
        &[
            "solve",
            "--problem",
            "p.json",
            "--x0",
            "0,0",
            "--scheme",
            "adaptive",
            "--eps",
            "1e-10",
            "--tag",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("rounds=1"), "{}", stdout(&out));
}

#[test]
fn problem_documents_round_trip_through_solve() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_in(
        dir.path(),
        &[
            "solve",
            "--family",
            "boxqp",
            "--n",
            "2",
            "--kappa",
            "30",
            "--seed",
            "5",
            "--scheme",
            "adaptive",
            "--eps",
            "1e-9",
            "--tag",
            "g",
            "--save-problem",
            "saved.json",
        ],
    );
    assert_eq!(first.status.code(), Some(0));
    let second = run_in(
        dir.path(),
        &[
            "solve",
            "--problem",
            "saved.json",
            "--scheme",
            "adaptive",
            "--eps",
            "1e-9",
            "--tag",
            "h",
        ],
    );
    assert_eq!(second.status.code(), Some(0));
    let left = std::fs::read_to_string(dir.path().join("g.csv")).unwrap();
    let right = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert_eq!(left, right, "file-loaded instance must reproduce the run");
}

#[test]
fn solve_total_iterations_stay_below_the_reported_bound() {
    // End-to-end: the trace's cumulative iteration count against the bound
    // report computed from the same constants.
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "solve", "--family", "qp", "--n", "2", "--kappa", "100", "--seed", "42", "--scheme",
            "adaptive", "--eps", "1e-8", "--gap0", "50", "--tag", "nb",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let trace = std::fs::read_to_string(dir.path().join("nb.csv")).unwrap();
    let total: f64 = trace
        .lines()
        .last()
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("nb_meta.json")).unwrap())
            .unwrap();
    let a_f = meta["a_f"].as_f64().unwrap();
    let bounds = run_in(
        dir.path(),
        &[
            "bounds",
            "--a-f",
            &format!("{a_f}"),
            "--mu",
            "0.999999999",
            "--gap0",
            "50",
            "--eps",
            "1e-8",
            "--json",
        ],
    );
    let report: serde_json::Value = serde_json::from_str(&stdout(&bounds)).unwrap();
    let na_bar = report["na_bar"].as_f64().unwrap();
    assert!(
        total <= na_bar,
        "trace total {total} exceeds bound {na_bar}"
    );
}

#[test]
fn bench_summary_has_ordered_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "bench",
            "--family",
            "mpc-springs",
            "--horizon",
            "4",
            "--seed",
            "11",
            "--count",
            "6",
            "--schemes",
            "none,adaptive,functional",
            "--stop-rule",
            "rel-primal",
            "--rel-tol",
            "1e-5",
            "--tag",
            "b",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = std::fs::read_to_string(dir.path().join("b_summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("scheme,average,median,max,min"));
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let (avg, med): (f64, f64) = (cols[1].parse().unwrap(), cols[2].parse().unwrap());
        let (max, min): (f64, f64) = (cols[3].parse().unwrap(), cols[4].parse().unwrap());
        assert!(min <= med && med <= max, "unordered row {line}");
        assert!(min <= avg && avg <= max, "average outside range in {line}");
        rows += 1;
    }
    assert_eq!(rows, 3);
    // Per-instance file: everything except wall time is reproducible.
    let dir2 = tempfile::tempdir().unwrap();
    let again = run_in(
        dir2.path(),
        &[
            "bench",
            "--family",
            "mpc-springs",
            "--horizon",
            "4",
            "--seed",
            "11",
            "--count",
            "6",
            "--schemes",
            "none,adaptive,functional",
            "--stop-rule",
            "rel-primal",
            "--rel-tol",
            "1e-5",
            "--tag",
            "b",
        ],
    );
    assert_eq!(again.status.code(), Some(0));
    let strip_wall = |text: &str| -> String {
        text.lines()
            .map(|l| {
                l.rsplit_once(',')
                    .map(|(head, _)| head.to_string())
                    .unwrap_or_default()
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let left = strip_wall(&std::fs::read_to_string(dir.path().join("b_instances.csv")).unwrap());
    let right = strip_wall(&std::fs::read_to_string(dir2.path().join("b_instances.csv")).unwrap());
    assert_eq!(left, right);
}

#[test]
fn bench_isotropic_instances_report_identical_small_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "bench",
            "--family",
            "qp",
            "--n",
            "3",
            "--kappa",
            "1",
            "--seed",
            "2",
            "--count",
            "1",
            "--schemes",
            "adaptive,fixed,functional",
            "--stop-rule",
            "rel-primal",
            "--rel-tol",
            "1e-5",
            "--initial-gap",
            "10",
            "--tag",
            "iso",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let instances = std::fs::read_to_string(dir.path().join("iso_instances.csv")).unwrap();
    let counts: Vec<usize> = instances
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(
        counts.iter().all(|&c| c == counts[0] && c <= 2),
        "{counts:?}"
    );
}

#[test]
fn verify_passes_and_fault_injection_fails() {
    let dir = tempfile::tempdir().unwrap();
    let good = run_in(
        dir.path(),
        &[
            "verify", "--family", "qp", "--n", "2", "--kappa", "100", "--seed", "42",
        ],
    );
    assert_eq!(good.status.code(), Some(0), "{}", stdout(&good));
    assert!(stdout(&good).contains("PASS"));
    let bad = run_in(
        dir.path(),
        &[
            "verify",
            "--family",
            "qp",
            "--n",
            "2",
            "--kappa",
            "100",
            "--seed",
            "42",
            "--inject-fault",
            "understated-rate",
        ],
    );
    assert_eq!(bad.status.code(), Some(3));
    assert!(stdout(&bad).contains("FAIL"));
}

#[test]
fn verify_reports_unavailable_checks_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "verify", "--family", "lasso", "--rows", "12", "--cols", "6", "--weight", "0.5",
            "--seed", "3",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("unavailable"));
    assert!(text.contains("gradient-norm decrease inequality"));
}

#[test]
fn plot_merges_series_and_adaptive_crosses_first() {
    let dir = tempfile::tempdir().unwrap();
    for (scheme, tag) in [("adaptive", "pa"), ("none", "pn")] {
        let out = run_in(
            dir.path(),
            &[
                "solve",
                "--family",
                "qp",
                "--n",
                "10",
                "--kappa",
                "10000",
                "--seed",
                "1",
                "--scheme",
                scheme,
                "--eps-grad",
                "1e-6",
                "--tag",
                tag,
            ],
        );
        assert_eq!(out.status.code(), Some(0));
    }
    let out = run_in(
        dir.path(),
        &[
            "plot",
            "pa_series.csv",
            "pn_series.csv",
            "--out",
            "merged.csv",
            "--svg",
            "chart.svg",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let merged = std::fs::read_to_string(dir.path().join("merged.csv")).unwrap();
    assert!(merged.starts_with("scheme,iteration,relative_distance\n"));
    let mut crossing: std::collections::HashMap<String, usize> = Default::default();
    for line in merged.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let value: f64 = cols[2].parse().unwrap();
        if value <= 1e-5 {
            crossing
                .entry(cols[0].to_string())
                .or_insert_with(|| cols[1].parse().unwrap());
        }
    }
    let adaptive = crossing["adaptive"];
    let none = crossing["none"];
    assert!(adaptive < none, "adaptive {adaptive} vs none {none}");
    let svg = std::fs::read_to_string(dir.path().join("chart.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("</svg>"));
    assert!(svg.contains("adaptive") && svg.contains("none"));
}

#[test]
fn plot_without_inputs_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["plot"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bounds_prints_reference_arithmetic() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "bounds", "--a-f", "200", "--mu", "1", "--gap0", "1", "--eps", "1e-6",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("1196.0440045219798"), "{text}");
    assert!(text.contains("440"), "{text}");
    let json = run_in(
        dir.path(),
        &[
            "bounds", "--a-f", "200", "--mu", "1", "--gap0", "1", "--eps", "1e-6", "--json",
        ],
    );
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(parsed["round_scale"], 11);
}

#[test]
fn out_dir_env_variable_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("results");
    let out = bin()
        .args([
            "solve", "--family", "qp", "--n", "2", "--kappa", "10", "--seed", "1", "--scheme",
            "adaptive", "--eps", "1e-6", "--tag", "env",
        ])
        .current_dir(dir.path())
        .env("AFOM_RESTART_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("env.csv").exists());
}

#[test]
fn bench_config_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "generator": { "family": "qp", "dimension": 2, "condition": 10.0, "seed": 4 },
        "count": 3,
        "schemes": ["adaptive", "none"],
        "initial_gap": 10.0,
        "stop_rule": "rel-primal",
        "relative_tolerance": 1e-5
    }"#;
    std::fs::write(dir.path().join("bench.json"), config).unwrap();
    let out = run_in(
        dir.path(),
        &["bench", "--config", "bench.json", "--tag", "cfg"],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("cfg_summary.csv").exists());
}
