#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(vector) = patchdct::codec::DctVector::from_json(text) {
        // Any accepted record must decode without panicking and survive a
        // JSON round trip. Cap the resolution so decode time stays bounded.
        assert_eq!(
            patchdct::codec::DctVector::from_json(&vector.to_json()).unwrap(),
            vector
        );
        if vector.resolution() <= 64 {
            let mask = patchdct::codec::decode_mask(&vector);
            assert_eq!(mask.size(), vector.resolution());
        }
    }
});
