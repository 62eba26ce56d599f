#![no_main]
use libfuzzer_sys::fuzz_target;
use rhm_nn::{read_records, write_records};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(records) = read_records(text) else { return };
    let mut out = Vec::new();
    write_records(&mut out, &records).unwrap();
    let again = read_records(std::str::from_utf8(&out).unwrap()).expect("re-read of written records");
    assert_eq!(records.len(), again.len());
    // NaN fields compare unequal, so compare the written form.
    let mut out2 = Vec::new();
    write_records(&mut out2, &again).unwrap();
    assert_eq!(out, out2);
});
