#![no_main]

use byzsim::harness::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

const BASE: &str = r#"{
  "problem": { "kind": "quadratic", "dim": 3, "mu": 1.0, "smoothness": 4.0 },
  "n": 5, "f": 1, "optimizer": "gd", "K": 3
}"#;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let base = ExperimentConfig::from_json(BASE).unwrap();
    let overrides: Vec<&str> = text.lines().collect();
    let _ = base.with_overrides(&overrides);
});
