#![no_main]
use libfuzzer_sys::fuzz_target;
use qio_core::rdm::{parse_rdm_dump, write_rdm_dump};

fuzz_target!(|data: &[u8]| {
    if let Ok(r) = parse_rdm_dump(data) {
        let mut buf = Vec::new();
        write_rdm_dump(&r, &mut buf).expect("write to memory");
        let again = parse_rdm_dump(buf.as_slice()).expect("written dump parses");
        assert_eq!(again.n_orbitals, r.n_orbitals);
    }
});
