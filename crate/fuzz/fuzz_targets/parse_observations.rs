#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(values) = idealcast::io::parse_observations(text) {
        assert!(values.iter().all(|v| v.is_finite()));
    }
});
