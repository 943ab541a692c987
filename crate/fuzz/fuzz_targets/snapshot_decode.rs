#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(field) = nldiff::snapshot::decode(data) {
        // a decoded field re-encodes to the same bytes
        assert_eq!(nldiff::snapshot::encode(&field), data);
    }
});
