#![no_main]
use libfuzzer_sys::fuzz_target;
use qio_core::basis_file::{parse_basis, write_basis};

fuzz_target!(|data: &[u8]| {
    if let Ok(b) = parse_basis(data) {
        let mut buf = Vec::new();
        write_basis(&b, &mut buf).expect("write to memory");
        let again = parse_basis(buf.as_slice()).expect("written basis parses");
        assert_eq!(again.dim(), b.dim());
    }
});
