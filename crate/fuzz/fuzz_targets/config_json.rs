#![no_main]

use byzsim::harness::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = ExperimentConfig::from_json(text) {
        let again = ExperimentConfig::from_json(&config.to_json()).expect("serialized configs parse");
        assert_eq!(again.to_json(), config.to_json());
    }
});
