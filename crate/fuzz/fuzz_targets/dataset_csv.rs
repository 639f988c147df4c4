#![no_main]

use byzsim::problems::{binarize_labels, parse_dataset_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(dataset) = parse_dataset_csv(text) {
        assert_eq!(dataset.features.nrows(), dataset.labels.len());
        let _ = dataset.class_ids();
        let _ = binarize_labels(&dataset.labels, None);
    }
});
