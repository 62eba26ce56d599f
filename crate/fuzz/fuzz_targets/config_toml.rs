#![no_main]
use libfuzzer_sys::fuzz_target;
use rhm_cli::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ExperimentConfig::from_toml(text) else { return };
    let _ = cfg.params();
    let again = ExperimentConfig::from_toml(&cfg.to_toml()).expect("re-read of written config");
    assert_eq!(cfg.to_toml(), again.to_toml());
});
