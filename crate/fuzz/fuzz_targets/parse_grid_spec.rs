#![no_main]
use feasmass::experiments::GridSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = text.parse::<GridSpec>() {
        assert!(spec.gamma_points >= 1 && spec.beta_points >= 1);
        // Only materialize small grids; huge counts are valid but costly.
        if spec.gamma_points <= 4096 {
            assert_eq!(spec.gammas().len(), spec.gamma_points);
        }
    }
});
