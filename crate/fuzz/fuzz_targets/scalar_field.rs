#![no_main]

use libfuzzer_sys::fuzz_target;
use subvisc::poly::RationalFn;

fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else { return };
    let Ok(value) = serde_json::from_slice::<serde_json::Value>(rest) else { return };
    let nvars = usize::from(n % 8) + 1;
    if let Ok(f) = RationalFn::from_json(nvars, &value) {
        let _ = f.eval(&vec![0.25; nvars]);
    }
});
