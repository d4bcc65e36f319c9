#![no_main]

use dikin_core::io::{lp_to_json, parse_lp_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(lp) = parse_lp_json(text) {
        let back = parse_lp_json(&lp_to_json(&lp)).expect("serialized LP parses");
        assert_eq!(lp, back);
    }
});
