#![no_main]
use feasmass::experiments::AngleRange;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = text.parse::<AngleRange>() {
        let pts = r.points(3);
        assert_eq!(pts[0], r.lo);
        assert_eq!(pts[2], r.hi);
    }
});
