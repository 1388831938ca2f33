#![no_main]

use featred::storage::ffsb::{decode, decode_header, encode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let header = decode_header(data);
    match decode(data) {
        Ok(set) => {
            assert!(header.is_ok());
            // decoded values came from f32, so re-encoding is exact
            let bytes = encode(&set).expect("decoded sets re-encode");
            assert_eq!(bytes.as_slice(), data);
        }
        Err(_) => {}
    }
});
