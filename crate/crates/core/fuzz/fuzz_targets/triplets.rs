#![no_main]

use libfuzzer_sys::fuzz_target;
use primepca::data::{format_triplets, parse_triplets};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(pm) = parse_triplets(text) {
        let again = parse_triplets(&format_triplets(&pm)).expect("formatted output parses");
        assert_eq!(again.mask(), pm.mask());
        assert_eq!(again.values(), pm.values());
    }
});
