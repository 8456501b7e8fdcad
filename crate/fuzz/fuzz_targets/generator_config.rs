#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // Building the cone family from a parsed spec must also be
        // panic-free: the values are still untrusted.
        if let Ok(spec) = conic_nmf::io::parse_generator_spec(text) {
            let _ = spec.to_config();
        }
    }
});
