use std::process::Command;

use servrisk::cli::main_with_args;

const GOLDEN_TABLE: &str = include_str!("golden/table1.md");

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let code = main_with_args(
        std::iter::once("servrisk").chain(args.iter().copied()),
        &mut stdout,
        &mut stderr,
    );
    Run {
        code,
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn config_file(contents: &str) -> tempfile::NamedTempFile {
    let file = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
    std::fs::write(file.path(), contents).unwrap();
    file
}

#[test]
fn default_grid_is_the_published_table() {
    let out = run(&["grid"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.stdout, GOLDEN_TABLE);
}

#[test]
fn csv_and_json_carry_the_same_numbers() {
    let csv_out = run(&["grid", "--format", "csv"]).stdout;
    let json_out = run(&["grid", "--format", "json"]).stdout;

    let mut reader = csv::Reader::from_reader(csv_out.as_bytes());
    let header: Vec<f64> = reader
        .headers()
        .unwrap()
        .iter()
        .skip(1)
        .map(|h| h.parse().unwrap())
        .collect();
    let mut nsr = Vec::new();
    let mut from_csv = Vec::new();
    for record in reader.records() {
        let record = record.unwrap();
        let row: Vec<f64> = record.iter().map(|v| v.parse().unwrap()).collect();
        nsr.push(row[0]);
        from_csv.push(row[1..].to_vec());
    }

    let json: serde_json::Value = serde_json::from_str(&json_out).unwrap();
    assert_eq!(json["stress_factor"], 0.9);
    assert_eq!(json["base_nsr"], 1.0);
    let axis = |key: &str| -> Vec<f64> {
        json[key]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect()
    };
    assert_eq!(axis("sd_axis"), header);
    assert_eq!(axis("nsr_axis"), nsr);
    let from_json: Vec<Vec<f64>> = json["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| {
            row.as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_f64().unwrap())
                .collect()
        })
        .collect();

    assert_eq!(from_csv.len(), 19);
    for (a, b) in from_csv.iter().flatten().zip(from_json.iter().flatten()) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
}

#[test]
fn identical_config_gives_identical_bytes() {
    for args in [
        &["grid", "--format", "csv"][..],
        &[
            "validate",
            "--samples",
            "20000",
            "--seed",
            "4",
            "--nsr",
            "0.8,1.2",
            "--sd",
            "0.2,0.3",
            "--format",
            "json",
        ][..],
    ] {
        let a = run(args);
        let b = run(args);
        assert_eq!(a.code, 0, "{}", a.stderr);
        assert_eq!(a.stdout, b.stdout);
        assert_eq!(a.stderr, b.stderr);
    }
}

#[test]
fn score_with_bases_only() {
    let out = run(&[
        "score",
        "--base-pd",
        "0.01",
        "--base-lgd",
        "0.2",
        "--format",
        "json",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let json: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert!((json["expected_loss"].as_f64().unwrap() - 0.002).abs() < 1e-15);
    assert!(json["pd_weights"].as_array().unwrap().is_empty());
}

#[test]
fn score_attaches_the_serviceability_weight() {
    let out = run(&[
        "score",
        "--base-pd",
        "0.01",
        "--base-lgd",
        "0.2",
        "--nsr",
        "1.1",
        "--sd",
        "0.3",
        "--pd-weight",
        "LVR=1.5",
        "--format",
        "json",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let json: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    let weights = json["pd_weights"].as_array().unwrap();
    assert_eq!(weights.len(), 2);
    let nsr = weights.iter().find(|w| w["name"] == "NSR").unwrap()["factor"]
        .as_f64()
        .unwrap();
    assert!((nsr - 0.74).abs() <= 0.005);
    let pd = json["adjusted_pd"].as_f64().unwrap();
    assert!((pd - 0.01 * 1.5 * nsr).abs() < 1e-15);
}

#[test]
fn validate_reports_exception_count() {
    let out = run(&[
        "validate",
        "--samples",
        "100000",
        "--seed",
        "1",
        "--nsr",
        "0.9,1.1",
        "--sd",
        "0.3",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(
        out.stderr.starts_with("validated 2 cells:"),
        "{}",
        out.stderr
    );
    assert!(out.stderr.contains("with |z| > 3"));
}

#[test]
fn file_values_yield_to_flags() {
    let file =
        config_file("stress_factor = 0.8\nnsr_axis = [1.1]\nsd_axis = [0.3]\nformat = \"json\"\n");
    let path = file.path().to_str().unwrap();
    let from_file: serde_json::Value =
        serde_json::from_str(&run(&["grid", "--config", path]).stdout).unwrap();
    assert_eq!(from_file["stress_factor"], 0.8);
    let flagged: serde_json::Value =
        serde_json::from_str(&run(&["grid", "--config", path, "--stress-factor", "0.95"]).stdout)
            .unwrap();
    assert_eq!(flagged["stress_factor"], 0.95);
    assert_eq!(flagged["sd_axis"][0], 0.3);
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let file = config_file("stres_factor = 0.8\n");
    let out = run(&["grid", "--config", file.path().to_str().unwrap()]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("stres_factor"), "{}", out.stderr);

    let file = config_file("stress_factor = \"high\"\n");
    let out = run(&["grid", "--config", file.path().to_str().unwrap()]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("stress_factor"), "{}", out.stderr);

    let out = run(&["grid", "--stress-factor", "1.5"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("stress_factor"), "{}", out.stderr);

    assert_eq!(run(&["grid", "--bogus"]).code, 2);
    assert_eq!(run(&["score", "--base-lgd", "0.2"]).code, 2);
}

#[test]
fn math_errors_exit_3_with_coordinates() {
    let out = run(&["grid", "--stress-factor", "0.5", "--sd", "0.01,0.2"]);
    assert_eq!(out.code, 3);
    assert!(out.stderr.contains("0.01"), "{}", out.stderr);
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.md");
    let out = run(&["grid", "--output", path.to_str().unwrap()]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(path).unwrap(), GOLDEN_TABLE);
}

#[test]
fn binary_end_to_end() {
    let out = Command::new(env!("CARGO_BIN_EXE_servrisk"))
        .arg("grid")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), GOLDEN_TABLE);

    let out = Command::new(env!("CARGO_BIN_EXE_servrisk"))
        .args(["grid", "--nsr", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
