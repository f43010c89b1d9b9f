#![no_main]
use feasmass::Bitstring;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(b) = Bitstring::parse(text) {
        assert_eq!(b.render(text.len()), text);
    }
});
