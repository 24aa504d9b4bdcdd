#![no_main]

use std::path::Path;

use cyclical_uav::scenario::parse_schedule_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_schedule_csv(data, Path::new("fuzz.csv"));
});
