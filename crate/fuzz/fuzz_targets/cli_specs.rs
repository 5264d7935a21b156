#![no_main]
use gaussify::classic::GridRange;
use gaussify::distributions::Marginal;
use gaussify::reliability::{Averaging, Pairing, SessionWindow, StudyTransform};
use libfuzzer_sys::fuzz_target;

// Flag values parsed from the command line.
fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(g) = s.parse::<GridRange>() {
        let v = g.values();
        assert!(!v.is_empty() && v.len() <= 1_000_002);
        let back: GridRange = g.to_string().parse().unwrap();
        assert_eq!(back, g);
    }
    if let Ok(w) = s.parse::<SessionWindow>() {
        assert_eq!(w.to_string().parse::<SessionWindow>().unwrap(), w);
    }
    let _ = s.parse::<Marginal>();
    let _ = s.parse::<Pairing>();
    let _ = s.parse::<Averaging>();
    let _ = s.parse::<StudyTransform>();
});
