#![no_main]
use libfuzzer_sys::fuzz_target;
use qio_core::fcidump::{fcidump_to_string, parse_fcidump};

fuzz_target!(|data: &[u8]| {
    if let Ok(h) = parse_fcidump(data) {
        let again = parse_fcidump(fcidump_to_string(&h).as_bytes()).expect("written integrals parse");
        assert_eq!(again.max_abs_diff(&h), 0.0);
        assert_eq!(again.n_electrons, h.n_electrons);
    }
});
