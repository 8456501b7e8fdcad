#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // The parser must reject malformed input with an error, never panic
    // or over-allocate.
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = conic_nmf::io::parse_csv_matrix(text);
    }
});
