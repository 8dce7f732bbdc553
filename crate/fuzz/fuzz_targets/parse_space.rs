#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(space) = idealcast::io::parse_space(text) {
        for name in space.partition_names() {
            let _ = idealcast::prediction_space::conditional_kernel(&space, name);
        }
    }
});
