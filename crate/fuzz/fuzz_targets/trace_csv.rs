#![no_main]

use byzsim::harness::RunTrace;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(trace) = RunTrace::parse_csv(text, "fuzz") {
        let again = RunTrace::parse_csv(&trace.to_csv_string(), "fuzz").expect("written traces parse");
        assert_eq!(again.len(), trace.len());
    }
});
