#![no_main]

use libfuzzer_sys::fuzz_target;
use primepca::data::{format_dense_csv, parse_dense_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(pm) = parse_dense_csv(text) {
        // Whatever parses must survive a format/parse round trip unchanged.
        let again = parse_dense_csv(&format_dense_csv(&pm)).expect("formatted output parses");
        assert_eq!(again.mask(), pm.mask());
        assert_eq!(again.values(), pm.values());
    }
});
