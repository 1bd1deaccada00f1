#![no_main]

use libfuzzer_sys::fuzz_target;
use primepca::data::{format_dense_matrix, parse_dense_matrix};
use primepca::linalg::Frame;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(m) = parse_dense_matrix(text) else {
        return;
    };
    assert_eq!(parse_dense_matrix(&format_dense_matrix(&m)).unwrap(), m);
    // Frame loading is parse + orthonormality check; it may reject but not panic.
    let _ = Frame::new(m);
});
