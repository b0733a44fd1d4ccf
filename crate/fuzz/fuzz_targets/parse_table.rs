#![no_main]

use coherent_ft_cli::read_table;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = read_table(data) {
        for c in t.columns.clone() {
            let _ = t.numbers(&c);
        }
    }
});
