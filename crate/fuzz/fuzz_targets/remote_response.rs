#![no_main]

use libfuzzer_sys::fuzz_target;
use narratekg::witness::{parse_response, Candidate};

fuzz_target!(|data: &[u8]| {
    let Ok(body) = std::str::from_utf8(data) else { return };
    let candidates = [
        Candidate { id: "Russia".into(), aliases: vec!["Russia".into(), "Moscow".into()] },
        Candidate { id: "Ukraine".into(), aliases: vec!["Ukraine".into(), "Kyiv".into()] },
    ];
    if let Ok(r) = parse_response(body, &candidates) {
        assert!((0.0..=1.0).contains(&r.confidence));
        if let Some(t) = r.canonical_target {
            assert!(candidates.iter().any(|c| c.id == t));
        }
    }
});
