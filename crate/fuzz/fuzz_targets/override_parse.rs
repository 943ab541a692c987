#![no_main]

use libfuzzer_sys::fuzz_target;
use nldiff_cli::config::{apply_override, parse_override};

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = std::str::from_utf8(data) else { return };
    if let Ok((path, value)) = parse_override(spec) {
        assert!(!path.is_empty() && path.iter().all(|s| !s.is_empty()));
        let mut table = toml::Table::new();
        let _ = apply_override(&mut table, &path, value);
    }
});
