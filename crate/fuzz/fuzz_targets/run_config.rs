#![no_main]

use libfuzzer_sys::fuzz_target;
use subvisc::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // Accepted configs must also build their problem without panicking.
    if let Ok(cfg) = RunConfig::from_json_str(text) {
        let _ = cfg.structure();
        let _ = cfg.operator();
        let _ = cfg.grid();
    }
});
