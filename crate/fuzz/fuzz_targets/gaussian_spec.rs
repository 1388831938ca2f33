#![no_main]

use featred::storage::kv::{format_gaussian_spec, parse_gaussian_spec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = parse_gaussian_spec(text) {
        let again = parse_gaussian_spec(&format_gaussian_spec(&spec)).expect("formatted spec parses");
        assert_eq!(again, spec);
    }
});
