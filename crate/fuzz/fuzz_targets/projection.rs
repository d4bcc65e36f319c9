#![no_main]

use dikin_core::orbits::ProjectionSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = text.parse::<ProjectionSpec>() {
        for n in 0..6 {
            if let Ok(p) = spec.resolve(n, 7) {
                let w = vec![0.5; n];
                p.apply(&w).expect("resolved projection fits its dimension");
            }
        }
    }
});
