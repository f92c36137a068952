#![no_main]

use cgmy_eds::calibration::parse_quotes_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(quotes) = parse_quotes_csv(text) {
        assert!(!quotes.is_empty());
    }
});
