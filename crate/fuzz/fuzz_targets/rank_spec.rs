#![no_main]
use gaussify::io::{parse_rank_specs, write_rank_specs};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(specs) = parse_rank_specs(text) else { return };
    for named in &specs {
        let bp = named.spec.breakpoints();
        let probes = [f64::MIN, -1.0, 0.0, 1.0, f64::MAX];
        for x in probes.into_iter().chain(bp.iter().copied()) {
            let (y, _) = named.spec.apply_one(x);
            assert!(y.is_finite());
        }
    }
    let mut out = Vec::new();
    write_rank_specs(&mut out, &specs).unwrap();
    let again = parse_rank_specs(std::str::from_utf8(&out).unwrap()).expect("written spec reparses");
    assert_eq!(again, specs);
});
