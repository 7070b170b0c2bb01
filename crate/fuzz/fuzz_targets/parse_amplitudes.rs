#![no_main]
use libfuzzer_sys::fuzz_target;
use qio_core::ci::{parse_amplitudes, write_amplitudes};

// The first byte picks the orbital count.
fuzz_target!(|data: &[u8]| {
    let Some((&m, text)) = data.split_first() else { return };
    let m = usize::from(m % 16) + 1;
    if let Ok(amps) = parse_amplitudes(text, m) {
        let mut buf = Vec::new();
        write_amplitudes(&amps, &mut buf).expect("write to memory");
        let again = parse_amplitudes(buf.as_slice(), m).expect("written amplitudes parse");
        assert_eq!(again, amps);
    }
});
