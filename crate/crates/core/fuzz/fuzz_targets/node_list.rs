#![no_main]

use cgmy_eds::hyperexp::parse_node_list;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(nodes) = parse_node_list(text) {
        assert!(!nodes.is_empty());
        assert!(nodes.iter().all(|u| u.is_finite() && *u > 0.0));
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    }
});
