#![no_main]

use cyclical_uav::scenario::ScenarioConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // anything accepted must survive a round trip
    if let Ok(cfg) = ScenarioConfig::from_toml_str(text) {
        let again = cfg.to_toml_string().expect("serialise accepted config");
        let back = ScenarioConfig::from_toml_str(&again).expect("reparse own output");
        assert_eq!(cfg, back);
    }
});
