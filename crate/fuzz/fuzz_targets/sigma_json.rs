#![no_main]

use libfuzzer_sys::fuzz_target;
use subvisc::CarnotStructure;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = CarnotStructure::from_sigma_json(text) {
        let _ = s.sigma_at(&vec![0.5; s.dim()]);
    }
});
