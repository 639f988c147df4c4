#![no_main]

use byzsim::aggregation::AggregatorSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|input: (&str, u8, u8)| {
    let (text, f, n) = input;
    if let Ok(spec) = AggregatorSpec::parse(text, f as usize) {
        let reparsed = AggregatorSpec::parse(&spec.to_string(), f as usize).expect("displayed specs parse");
        assert_eq!(reparsed.to_string(), spec.to_string());
        if let Ok(nu) = spec.robustness_coefficient(n as usize) {
            assert!(nu >= 0.0);
        }
    }
});
