#![no_main]
use libfuzzer_sys::fuzz_target;
use rhm_nn::checkpoint::{from_json, to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(net) = from_json(text) {
        let again = from_json(&to_json(&net)).expect("re-read of written checkpoint");
        assert_eq!(net, again);
    }
});
