#![no_main]

use std::path::Path;

use cyclical_uav::scenario::parse_trajectory_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(traj) = parse_trajectory_csv(data, Path::new("fuzz.csv")) {
        assert!(traj.check_shape().is_ok());
    }
});
