#![no_main]
use gaussify::io::{parse_pairs, write_pairs};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(pairs) = parse_pairs(text) {
        let mut out = Vec::new();
        write_pairs(&mut out, &pairs).unwrap();
        let again = parse_pairs(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(again, pairs);
    }
});
