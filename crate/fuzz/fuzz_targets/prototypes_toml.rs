#![no_main]

use libfuzzer_sys::fuzz_target;
use narratekg::bench::{parse_prototypes, render_prototypes};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ps) = parse_prototypes(text) {
        assert_eq!(parse_prototypes(&render_prototypes(&ps)).expect("rendered file parses"), ps);
    }
});
