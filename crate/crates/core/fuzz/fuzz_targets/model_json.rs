#![no_main]

use cgmy_eds::levymodel::ModelDocument;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(doc) = ModelDocument::from_json(text) {
        let again = ModelDocument::from_json(&doc.to_json()).expect("re-read own output");
        assert_eq!(again, doc);
        let _ = doc.model();
    }
});
