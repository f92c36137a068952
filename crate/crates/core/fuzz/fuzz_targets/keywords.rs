#![no_main]

use cgmy_eds::calibration::OptionKind;
use cgmy_eds::eds::CouponFrequency;
use libfuzzer_sys::fuzz_target;

// Short keyword parsers shared by the CSV readers and the command line.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = text.parse::<CouponFrequency>();
    let _ = text.parse::<OptionKind>();
});
