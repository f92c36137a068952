#![no_main]

use cgmy_eds::pipeline::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::from_toml_str(text) {
        let echoed =
            RunConfig::from_toml_str(&cfg.to_toml_string()).expect("re-read resolved config");
        assert_eq!(echoed, cfg);
    }
});
