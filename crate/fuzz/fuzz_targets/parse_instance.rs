#![no_main]
use feasmass::instance::parse_instance;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(inst) = parse_instance(text, "fuzz") {
        assert!(inst.n >= 1);
        assert_eq!(inst.dist.len(), inst.n * inst.n);
        assert!(inst.penalty_weight > 0);
    }
});
