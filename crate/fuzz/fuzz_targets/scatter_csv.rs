#![no_main]

use dikin_core::io::read_xy;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_xy(data, "theta", "value_*");
    let _ = read_xy(data, "y_1", "y_2");
});
