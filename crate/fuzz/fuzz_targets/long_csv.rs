#![no_main]
use gaussify::io::{read_long_csv, write_long_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(dataset) = read_long_csv(data) {
        let mut out = Vec::new();
        write_long_csv(&mut out, &dataset).unwrap();
        let again = read_long_csv(out.as_slice()).expect("written csv reparses");
        assert_eq!(again, dataset);
    }
});
