#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grid) = patchdct::patch::PatchGrid::from_json(text) {
        assert_eq!(
            patchdct::patch::PatchGrid::from_json(&grid.to_json()).unwrap(),
            grid
        );
        if grid.mask_size() <= 128 {
            let mask = patchdct::patch::assemble(&grid);
            assert_eq!(mask.size(), grid.mask_size());
        }
    }
});
