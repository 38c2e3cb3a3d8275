#![no_main]

use libfuzzer_sys::fuzz_target;
use narratekg::dsl::{parse, render};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    match parse(text) {
        Ok(ast) => {
            let again = render(&ast);
            assert_eq!(parse(&again).expect("rendered prototype parses"), ast);
        }
        Err(e) => {
            let _ = e.diagnostic(text);
        }
    }
});
