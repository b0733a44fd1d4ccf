#![no_main]

use coherent_ft::energy::{decompose, Trajectory};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(traj) = Trajectory::from_json(s) {
            // Tracking may legitimately fail on coarse grids; it must not panic.
            let _ = decompose(&traj);
        }
    }
});
