#![no_main]

use libfuzzer_sys::fuzz_target;
use narratekg::config::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = Config::from_toml(text) {
        let again = Config::from_toml(&cfg.to_toml()).expect("rendered config parses");
        assert_eq!(again.assessment_fingerprint(), cfg.assessment_fingerprint());
    }
});
