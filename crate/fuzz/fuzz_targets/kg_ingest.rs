#![no_main]

use libfuzzer_sys::fuzz_target;
use narratekg::graph::ingest_kg;

fuzz_target!(|data: &[u8]| {
    if let Ok(kg) = ingest_kg(data) {
        let mut out = Vec::new();
        kg.write_jsonl(&mut out).unwrap();
        let again = ingest_kg(out.as_slice()).expect("snapshot reloads");
        assert_eq!(again.event_count(), kg.event_count());
        assert_eq!(again.edges(), kg.edges());
    }
});
