#![no_main]

use std::path::Path;

use coherent_ft_cli::{Mode, ScenarioConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ScenarioConfig::parse(s, Path::new("/nonexistent")) {
        for mode in [
            Mode::TpmExact,
            Mode::TpmSample,
            Mode::IftSweep,
            Mode::DftSweep,
            Mode::ArrowSweep,
            Mode::Decompose,
        ] {
            let _ = cfg.validate_for(mode);
        }
    }
});
