#![no_main]

use libfuzzer_sys::fuzz_target;
use narratekg::index::{deserialize_index, serialize_index};

fuzz_target!(|data: &[u8]| {
    if let Ok(index) = deserialize_index(data) {
        let bytes = serialize_index(&index);
        assert_eq!(deserialize_index(&bytes).expect("re-encoded index decodes"), index);
        let _ = index.may_hold("is_aggressor", "Russia", Some("US"));
    }
});
