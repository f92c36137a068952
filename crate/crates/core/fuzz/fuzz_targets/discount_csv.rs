#![no_main]

use cgmy_eds::eds::DiscountCurve;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&flag, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    if let Ok(curve) = DiscountCurve::from_csv(text, flag & 1 == 1) {
        for day in [0.0, 1.0, 90.0, 365.0, 3650.0] {
            let d = curve.factor(day);
            assert!(d.is_finite() && d > 0.0, "factor({day}) = {d}");
        }
    }
});
