#![no_main]

use byzsim::attacks::AttackStrategy;
use byzsim::harness::OptimizerKind;
use byzsim::optimizers::FgmVariant;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(attack) = text.parse::<AttackStrategy>() {
        attack
            .to_string()
            .parse::<AttackStrategy>()
            .expect("displayed attacks parse");
    }
    let _ = text.parse::<OptimizerKind>();
    let _ = text.parse::<FgmVariant>();
});
