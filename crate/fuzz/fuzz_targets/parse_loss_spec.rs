#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(kind) = idealcast::io::parse_loss_spec(text) {
        let _ = idealcast::elicitation::make_loss(kind);
    }
});
