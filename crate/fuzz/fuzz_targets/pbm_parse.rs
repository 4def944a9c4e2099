#![no_main]

use libfuzzer_sys::fuzz_target;

// Arbitrary bytes must either parse into a valid mask or fail cleanly.
// Parsed masks must survive a write/parse round trip in both formats.
fuzz_target!(|data: &[u8]| {
    if let Ok(mask) = patchdct::pbm::parse(data) {
        for format in [
            patchdct::pbm::PbmFormat::Ascii,
            patchdct::pbm::PbmFormat::Binary,
        ] {
            let bytes = patchdct::pbm::write(&mask, format);
            let back = patchdct::pbm::parse(&bytes).expect("writer output parses");
            assert_eq!(back, mask);
        }
    }
});
