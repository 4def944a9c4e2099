#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(outcome) = patchdct::ingest::parse_annotations(text) {
        // Valid records serialize and reparse to the same records.
        let doc = patchdct::ingest::serialize_annotations(&outcome.records);
        let again = patchdct::ingest::parse_annotations(&doc).expect("serialized doc parses");
        assert_eq!(again.records, outcome.records);
        assert!(again.record_errors.is_empty());

        // Rasterization of surviving records must not panic; keep the grid
        // small so the fuzzer spends its time in the parser.
        for record in outcome.records.iter().take(4) {
            let _ = patchdct::ingest::rasterize(record, 16);
        }
    }
});
