#![no_main]
use gaussify::io::{parse_plain, write_plain};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(values) = parse_plain(text) {
        let mut out = Vec::new();
        write_plain(&mut out, &values).unwrap();
        let again = parse_plain(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(again, values);
    }
});
