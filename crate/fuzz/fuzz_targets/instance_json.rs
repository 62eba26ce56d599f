#![no_main]
use libfuzzer_sys::fuzz_target;
use rhm_core::io::{instance_from_json, instance_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(inst) = instance_from_json(text) {
        // Anything accepted must survive a write/read cycle unchanged.
        let again = instance_from_json(&instance_to_json(&inst)).expect("re-read of written instance");
        assert_eq!(inst, again);
    }
});
