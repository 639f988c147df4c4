use std::path::Path;
use std::process::{Command, Output};

use byzsim::harness::{RunTrace, CSV_HEADER};

fn byzsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_byzsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

const SMALL: &str = r#"{
  "problem": { "kind": "quadratic", "dim": 4, "mu": 1.0, "smoothness": 5.0, "heterogeneity": 0.5 },
  "n": 6, "f": 1, "aggregator": "cwtm", "attack": "ipm", "optimizer": "gd", "K": 20, "seed": 9
}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn run_prints_trace_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.json", SMALL);
    let text = stdout(&byzsim(&["run", &config]));
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn run_applies_overrides_and_writes_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.json", SMALL);
    let out = dir.path().join("out.csv");
    stdout(&byzsim(&[
        "run",
        &config,
        "--set",
        "K=7",
        "--set",
        "optimizer=fgm",
        "-o",
        out.to_str().unwrap(),
    ]));
    let trace = RunTrace::read_csv(&out).unwrap();
    assert_eq!(trace.len(), 7);
    assert!(trace.rows.iter().all(|r| r.wall_ms == 0.0));
}

#[test]
fn run_rejects_unknown_aggregator() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "bad.json",
        &SMALL.replace("\"cwtm\"", "\"median-of-means\""),
    );
    let out = byzsim(&["run", &config]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("median-of-means"));
}

#[test]
fn run_reads_dataset_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = String::from("label,a,b\n");
    for i in 0..120 {
        let t = i as f64 / 40.0;
        rows += &format!("{},{},{}\n", i % 2, t.sin() + (i % 2) as f64, t.cos());
    }
    std::fs::create_dir(dir.path().join("data")).unwrap();
    write(&dir.path().join("data"), "toy.csv", &rows);
    let config = write(
        dir.path(),
        "toy.json",
        r#"{
          "problem": { "kind": "dataset_logistic", "path": "data/toy.csv", "lambda": 0.1 },
          "n": 4, "f": 0, "aggregator": "mean", "attack": "none", "optimizer": "pigs", "K": 5, "seed": 1
        }"#,
    );
    let text = stdout(&byzsim(&["run", &config]));
    let trace = RunTrace::parse_csv(&text, "toy").unwrap();
    assert_eq!(trace.len(), 5);
    assert!(trace
        .rows
        .iter()
        .all(|r| r.loss_gap.is_finite() && r.loss_gap >= -1e-12));
}

#[test]
fn sweep_writes_one_csv_per_config() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.json", SMALL);
    write(dir.path(), "b.json", &SMALL.replace("\"gd\"", "\"fgm\""));
    let text = stdout(&byzsim(&["sweep", dir.path().to_str().unwrap(), "--set", "K=10"]));
    for stem in ["a", "b"] {
        let trace = RunTrace::read_csv(dir.path().join(format!("{stem}.csv"))).unwrap();
        assert_eq!(trace.len(), 10);
        assert!(text.contains(stem));
    }
}

#[test]
fn bounds_reports_breakdown() {
    let text = stdout(&byzsim(&[
        "bounds", "--G", "2", "--B", "0.1", "--mu", "1", "--f", "1", "--n", "10",
    ]));
    assert!(text.contains("breakdown_ok true"));
    let value: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("value_bound "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(value > 0.0 && value.is_finite());

    let text = stdout(&byzsim(&[
        "bounds", "--G", "2", "--B", "1", "--mu", "1", "--f", "3", "--n", "6",
    ]));
    assert!(text.contains("breakdown_ok false"));
}

#[test]
fn agg_verify_confirms_catalog_coefficient() {
    let text = stdout(&byzsim(&[
        "agg-verify",
        "--rule",
        "nnm+cwtm",
        "--n",
        "10",
        "--f",
        "1",
        "--trials",
        "20",
    ]));
    assert!(text.contains("holds true"), "{text}");
    assert!(
        byzsim(&["agg-verify", "--rule", "avg", "--n", "5", "--f", "1"])
            .status
            .code()
            != Some(0)
    );
}

#[test]
fn plot_writes_log_scale_svg() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.json", SMALL);
    let csv = dir.path().join("small.csv");
    let svg = dir.path().join("plot.svg");
    stdout(&byzsim(&["run", &config, "-o", csv.to_str().unwrap()]));
    stdout(&byzsim(&["plot", csv.to_str().unwrap(), "-o", svg.to_str().unwrap()]));

    let text = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let lines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
    assert_eq!(lines.len(), 1);
    let points = lines[0].attribute("points").unwrap().split_whitespace().count();
    assert!(points > 1 && points <= 20);
    assert!(doc.descendants().any(|n| n.text().is_some_and(|t| t.contains("small"))));
}
