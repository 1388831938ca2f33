#![no_main]

use featred::storage::kv::{parse_list, KvConfig, MAX_LIST_LEN};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = KvConfig::parse(text) {
        for e in cfg.entries() {
            if let Ok(v) = parse_list(&e.value, e.line) {
                assert!(v.len() <= MAX_LIST_LEN);
                assert!(v.iter().all(|x| x.is_finite()));
            }
        }
    }
});
