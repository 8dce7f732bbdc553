#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(dist) = idealcast::io::parse_distribution(text) {
        let json = idealcast::io::distribution_to_json(&dist);
        let again = idealcast::io::parse_distribution(&json).expect("emitted JSON re-parses");
        assert_eq!(again, dist);
    }
});
