#![no_main]

use libfuzzer_sys::fuzz_target;
use narratekg::config::Config;
use narratekg::corpus::ingest_corpus;

fuzz_target!(|data: &[u8]| {
    let opts = Config::default().ingest_options(None);
    if let Ok(store) = ingest_corpus(data, &opts) {
        let mut out = Vec::new();
        store.write_jsonl(&mut out).unwrap();
        let again = ingest_corpus(out.as_slice(), &opts).expect("snapshot reloads");
        assert_eq!(again.len(), store.len());
    }
});
