//! End-to-end checks of the command-line surface: exit codes, report
//! formats, and byte determinism, all through the compiled binary.

use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gaplab"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).expect("stdout is UTF-8"),
        String::from_utf8(out.stderr).expect("stderr is UTF-8"),
    )
}

/// Parse one TSV report value by (section, name).
fn tsv_value(stdout: &str, section: &str, name: &str) -> f64 {
    for line in stdout.lines().skip(1) {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells[0] == section && cells[1] == name {
            return cells[2].parse().unwrap_or_else(|_| {
                panic!("row {section}/{name} has no numeric value: {line:?}")
            });
        }
    }
    panic!("no row {section}/{name} in output:\n{stdout}");
}

fn tsv_flags<'a>(stdout: &'a str, section: &str, name: &str) -> &'a str {
    for line in stdout.lines().skip(1) {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells[0] == section && cells[1] == name {
            return cells[4];
        }
    }
    panic!("no row {section}/{name} in output:\n{stdout}");
}

const TWO_STATE: &str = r#"{"Q":[[-1,1],[2,-2]]}"#;

#[test]
fn geom_sphere_example_rows() {
    let (code, out, _) = run(&["geom", "--d", "2", "--D", "3.14159265358979", "--K", "1"]);
    assert_eq!(code, 0);
    assert_eq!(
        out.lines().next().unwrap(),
        "section\tname\tvalue\tdetail\tflags",
        "TSV header is fixed"
    );
    assert!(!out.contains('\r'), "LF line endings only");
    assert!((tsv_value(&out, "geom.bounds", "B1") - 2.0).abs() <= 1e-9);
    assert!((tsv_value(&out, "geom.bounds", "C10") - 2.0).abs() <= 1e-9);
    assert!(tsv_flags(&out, "geom.bounds", "B1").contains("sharp"));
    // K = 1 > 0, so the nonpositive-curvature pairs are not applicable.
    for pair in ["C9>=B4", "C10>=B1", "C10>=B2"] {
        assert!(
            tsv_flags(&out, "geom.dominance", pair).contains("dominance_ok"),
            "{pair} must hold on the sphere"
        );
    }
    assert!(!out.contains("dominance_violated"));
}

#[test]
fn chain_gap_example_value() {
    let (code, out, _) = run(&["chain", "--inline", TWO_STATE, "--op", "gap"]);
    assert_eq!(code, 0);
    assert!((tsv_value(&out, "chain", "gap") - 3.0).abs() <= 1e-12);
}

#[test]
fn zero_dimension_is_a_precondition_error() {
    let (code, out, err) = run(&["geom", "--d", "0", "--D", "1.0", "--K", "0.0"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("dimension must be >= 1"), "stderr: {err}");
}

#[test]
fn malformed_json_reports_position() {
    let (code, _, err) = run(&["chain", "--inline", r#"{"Q": [["#]);
    assert_eq!(code, 2);
    assert!(
        err.contains("line") && err.contains("column"),
        "JSON error must carry a position: {err}"
    );
}

#[test]
fn sub_floor_quadrature_tolerance_is_rejected() {
    let (code, _, err) = run(&[
        "geom", "--d", "3", "--D", "3.14159265358979", "--K", "2", "--tol", "1e-15",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("1e-13"), "stderr: {err}");
}

#[test]
fn usage_errors_exit_64() {
    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, 64);
    let (code, _, _) = run(&["chain", "--inline", TWO_STATE, "--op", "bogus"]);
    assert_eq!(code, 64);
    let (code, _, _) = run(&["geom", "--d", "2", "--D", "1.0"]);
    assert_eq!(code, 64, "missing required --K is a usage error");
}

#[test]
fn help_and_version_exit_zero() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("Usage"));
    let (code, out, _) = run(&["--version"]);
    assert_eq!(code, 0);
    assert!(out.contains("gaplab"));
}

#[test]
fn dirichlet_requires_a_function() {
    let (code, _, err) = run(&["chain", "--inline", TWO_STATE, "--op", "dirichlet"]);
    assert_eq!(code, 2);
    assert!(err.contains("--f"), "stderr should point at the missing flag: {err}");
}

#[test]
fn tsv_and_json_reports_parse_equal() {
    let chain = r#"{"birth":[1.0,0.5,2.0],"death":[1.5,1.0,0.7]}"#;
    let args = ["cheeger", "--inline", chain, "--variant", "all"];
    let (code, tsv, _) = run(&args);
    assert_eq!(code, 0);
    let (code, json, _) = run(&[&args[..], &["--format", "json"]].concat());
    assert_eq!(code, 0);

    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    let rows = parsed.as_array().unwrap();
    let tsv_rows: Vec<Vec<&str>> = tsv.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), tsv_rows.len(), "same row count in both formats");
    for (row, cells) in rows.iter().zip(&tsv_rows) {
        assert_eq!(row["section"].as_str().unwrap(), cells[0]);
        assert_eq!(row["name"].as_str().unwrap(), cells[1]);
        match row["value"].as_f64() {
            Some(v) => {
                let t: f64 = cells[2].parse().unwrap();
                assert!(
                    t == v,
                    "values must parse bit-equal: TSV {t:?} vs JSON {v:?} for {}",
                    cells[1]
                );
            }
            None => assert!(cells[2].is_empty(), "absent value must be an empty TSV cell"),
        }
    }
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let (code, stdout, _) = run(&["chain", "--inline", TWO_STATE]);
    assert_eq!(code, 0);
    let path = std::env::temp_dir().join("gaplab_cli_out_test.tsv");
    let path_str = path.to_str().unwrap();
    let (code, piped, _) = run(&["chain", "--inline", TWO_STATE, "--out", path_str]);
    assert_eq!(code, 0);
    assert!(piped.is_empty(), "--out must silence stdout");
    let written = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(written, stdout);
}

#[test]
fn reruns_are_byte_identical() {
    let probe = [
        "probe", "--b", "1", "--a", "2", "--sizes", "4,8,16", "--seed", "11",
    ];
    let (code, first, _) = run(&probe);
    assert_eq!(code, 0);
    let (_, second, _) = run(&probe);
    assert_eq!(first, second, "probe output must be byte-identical across runs");

    let ergodic = ["ergodic", "--inline", TWO_STATE, "--seed", "11"];
    let (code, first, _) = run(&ergodic);
    assert_eq!(code, 0);
    let (_, second, _) = run(&ergodic);
    assert_eq!(first, second, "ergodic output must be byte-identical across runs");
}

#[test]
fn rows_are_sorted_by_section_then_name() {
    let (code, out, _) = run(&["ergodic", "--inline", TWO_STATE]);
    assert_eq!(code, 0);
    let keys: Vec<(String, String)> = out
        .lines()
        .skip(1)
        .map(|l| {
            let cells: Vec<&str> = l.split('\t').collect();
            (cells[0].to_string(), cells[1].to_string())
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted, "report rows must arrive already sorted");
}
